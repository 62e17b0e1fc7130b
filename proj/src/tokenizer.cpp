#include "sentord/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

namespace sentord {

namespace {

const char* kReservedNames[kNumReserved] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};

bool is_ascii_punct(uint32_t cp) {
    return cp < 128 && std::ispunct(static_cast<int>(cp)) != 0;
}

// Unicode whitespace beyond ASCII; enough for the corpora this handles.
bool is_unicode_space(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes one UTF-8 codepoint; malformed bytes are passed through as-is so
// normalization never fails.
uint32_t decode_utf8(const std::string& s, size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    size_t extra = 0;
    uint32_t cp = c;
    if (c >= 0xF0) { extra = 3; cp = c & 0x07u; }
    else if (c >= 0xE0) { extra = 2; cp = c & 0x0Fu; }
    else if (c >= 0xC0) { extra = 1; cp = c & 0x1Fu; }
    if (i + extra >= s.size()) { ++i; return c; }
    for (size_t k = 1; k <= extra; ++k) {
        const unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0u) != 0x80u) { ++i; return c; }
        cp = (cp << 6) | (cc & 0x3Fu);
    }
    i += extra + 1;
    return cp;
}

void append_codepoint(std::string& out, const std::string& src, size_t begin, size_t end) {
    out.append(src, begin, end - begin);
}

}  // namespace

std::vector<std::string> normalize(const std::string& text) {
    // Pass 1: lowercase ASCII and split on whitespace codepoints.
    std::vector<std::string> chunks;
    std::string cur;
    size_t i = 0;
    while (i < text.size()) {
        const size_t start = i;
        uint32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            if (!cur.empty()) { chunks.push_back(cur); cur.clear(); }
            continue;
        }
        if (cp < 128) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
        } else {
            append_codepoint(cur, text, start, i);
        }
    }
    if (!cur.empty()) chunks.push_back(cur);

    // Pass 2: detach leading/trailing ASCII punctuation, one token each.
    std::vector<std::string> tokens;
    for (const std::string& chunk : chunks) {
        size_t lo = 0, hi = chunk.size();
        std::vector<std::string> lead, trail;
        while (lo < hi && is_ascii_punct(static_cast<unsigned char>(chunk[lo]))) {
            lead.emplace_back(1, chunk[lo]);
            ++lo;
        }
        while (hi > lo && is_ascii_punct(static_cast<unsigned char>(chunk[hi - 1]))) {
            trail.emplace_back(1, chunk[hi - 1]);
            --hi;
        }
        for (auto& t : lead) tokens.push_back(std::move(t));
        if (hi > lo) tokens.push_back(chunk.substr(lo, hi - lo));
        for (auto it = trail.rbegin(); it != trail.rend(); ++it) tokens.push_back(std::move(*it));
    }
    return tokens;
}

Vocab::Vocab() {
    for (int i = 0; i < kNumReserved; ++i) {
        id_to_token_.emplace_back(kReservedNames[i]);
        token_to_id_.emplace(kReservedNames[i], i);
    }
}

int Vocab::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token_of(int id) const {
    if (id < 0 || static_cast<size_t>(id) >= id_to_token_.size()) {
        throw Error("tokenizer", "id_out_of_range", "token id " + std::to_string(id));
    }
    return id_to_token_[static_cast<size_t>(id)];
}

bool Vocab::contains(const std::string& token) const {
    return token_to_id_.count(token) > 0;
}

int Vocab::add_token(const std::string& token) {
    if (token.empty()) throw Error("tokenizer", "bad_token", "empty token");
    if (token_to_id_.count(token)) {
        throw Error("tokenizer", "duplicate_token", "token already present: " + token);
    }
    const int id = static_cast<int>(id_to_token_.size());
    id_to_token_.push_back(token);
    token_to_id_.emplace(token, id);
    return id;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("tokenizer", "write_failed", "cannot write vocab file: " + path);
    for (const std::string& tok : id_to_token_) out << tok << "\n";
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("tokenizer", "missing_file", "cannot open vocab file: " + path);
    Vocab vocab;
    std::string line;
    int id = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (id < kNumReserved) {
            if (line != kReservedNames[id]) {
                throw Error("tokenizer", "bad_vocab_file",
                            "line " + std::to_string(id + 1) + " must be " +
                                std::string(kReservedNames[id]));
            }
        } else {
            vocab.add_token(line);
        }
        ++id;
    }
    if (id < kNumReserved) {
        throw Error("tokenizer", "bad_vocab_file", "vocab file shorter than reserved inventory");
    }
    return vocab;
}

Vocab build_vocab(const Corpus& corpus, size_t min_freq, size_t max_size) {
    if (corpus.documents.empty()) throw Error("tokenizer", "empty_corpus", "cannot build vocab");
    if (max_size < kNumReserved) {
        throw Error("tokenizer", "bad_argument", "max_size below reserved inventory");
    }

    // std::map keeps the lexicographic tie-break stable without a second key.
    std::map<std::string, size_t> freq;
    for (const Document& doc : corpus.documents) {
        for (const std::string& sent : doc.sentences) {
            for (std::string& tok : normalize(sent)) ++freq[std::move(tok)];
        }
    }

    std::vector<std::pair<std::string, size_t>> items;
    items.reserve(freq.size());
    for (auto& kv : freq) {
        if (kv.second >= min_freq) items.emplace_back(kv.first, kv.second);
    }
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab vocab;
    const size_t capacity = max_size - kNumReserved;
    for (size_t i = 0; i < items.size() && i < capacity; ++i) {
        vocab.add_token(items[i].first);
    }
    return vocab;
}

std::vector<int> encode(const std::string& text, const Vocab& vocab) {
    std::vector<int> ids;
    for (const std::string& tok : normalize(text)) ids.push_back(vocab.id_of(tok));
    return ids;
}

std::vector<std::string> decode(const std::vector<int>& ids, const Vocab& vocab) {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(vocab.token_of(id));
    return out;
}

}  // namespace sentord
