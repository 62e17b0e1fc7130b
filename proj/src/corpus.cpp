#include "sentord/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace sentord {

namespace {

using nlohmann::json;

bool blank_after_trim(const std::string& s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

Corpus load_corpus(const std::string& path, const std::string& name) {
    std::ifstream in(path);
    if (!in) throw Error("corpus", "missing_file", "cannot open corpus file: " + path);

    Corpus corpus;
    corpus.name = name.empty() ? path : name;

    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank_after_trim(line)) continue;

        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) {
            throw Error("corpus", "malformed_record",
                        "line " + std::to_string(line_no) + ": not a JSON object");
        }
        if (!rec.contains("id") || !rec["id"].is_string() || rec["id"].get<std::string>().empty()) {
            throw Error("corpus", "malformed_record",
                        "line " + std::to_string(line_no) + ": missing or empty \"id\"");
        }
        Document doc;
        doc.id = rec["id"].get<std::string>();
        if (!seen_ids.insert(doc.id).second) {
            throw Error("corpus", "duplicate_id",
                        "line " + std::to_string(line_no) + ": duplicate document id \"" + doc.id + "\"");
        }
        if (!rec.contains("sentences") || !rec["sentences"].is_array()) {
            throw Error("corpus", "malformed_record",
                        "line " + std::to_string(line_no) + ": missing \"sentences\" array (id \"" +
                            doc.id + "\")");
        }
        for (const auto& s : rec["sentences"]) {
            if (!s.is_string()) {
                throw Error("corpus", "malformed_record",
                            "line " + std::to_string(line_no) + ": non-string sentence (id \"" +
                                doc.id + "\")");
            }
            std::string text = s.get<std::string>();
            if (blank_after_trim(text)) {
                throw Error("corpus", "empty_sentence",
                            "line " + std::to_string(line_no) + ": empty sentence (id \"" + doc.id +
                                "\")");
            }
            doc.sentences.push_back(std::move(text));
        }
        if (doc.sentences.empty()) {
            throw Error("corpus", "empty_document",
                        "line " + std::to_string(line_no) + ": document \"" + doc.id +
                            "\" has no sentences");
        }
        corpus.documents.push_back(std::move(doc));
    }
    if (corpus.documents.empty()) {
        throw Error("corpus", "empty_corpus", "no documents in " + path);
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("corpus", "write_failed", "cannot write corpus file: " + path);
    for (const Document& doc : corpus.documents) {
        json rec;
        rec["id"] = doc.id;
        rec["sentences"] = doc.sentences;
        out << rec.dump() << "\n";
    }
}

std::vector<int> random_permutation(size_t n, uint64_t seed) {
    // Fisher-Yates under our own generator, so the permutation is identical
    // on every platform for a given seed.
    std::vector<int> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    Rng rng(seed);
    for (size_t i = n; i-- > 1;) {
        const size_t j = rng.below(i + 1);
        std::swap(order[i], order[j]);
    }
    return order;
}

ShuffledDocument shuffle_document(const Document& doc, uint64_t seed) {
    const size_t n = doc.sentences.size();
    if (n == 0) throw Error("corpus", "empty_document", "cannot shuffle document \"" + doc.id + "\"");

    const std::vector<int> order = random_permutation(n, seed);
    ShuffledDocument out;
    out.doc_id = doc.id;
    out.presented.reserve(n);
    out.gold_perm.assign(n, 0);
    for (size_t pos = 0; pos < n; ++pos) {
        out.presented.push_back(doc.sentences[order[pos]]);
        out.gold_perm[order[pos]] = static_cast<int>(pos);
    }
    return out;
}

std::string synthetic_marker(size_t k) { return "ord" + std::to_string(k); }

Corpus gen_synthetic(size_t n_docs, size_t sentences_per_doc, size_t vocab_size,
                     uint64_t seed) {
    if (n_docs < 1 || sentences_per_doc < 1 || vocab_size < 1) {
        throw Error("corpus", "bad_argument", "gen_synthetic counts must be >= 1");
    }
    Rng rng(seed);
    Corpus corpus;
    corpus.name = "synthetic";
    corpus.documents.reserve(n_docs);

    auto word = [&](size_t idx) { return "w" + std::to_string(idx % vocab_size); };

    for (size_t d = 0; d < n_docs; ++d) {
        Document doc;
        doc.id = "syn" + std::to_string(d);
        const std::string topic = word(rng.below(vocab_size));
        // Distinct content token introduced by each sentence; sentence k
        // repeats the token sentence k-1 introduced.
        std::vector<std::string> intro(sentences_per_doc);
        for (size_t k = 0; k < sentences_per_doc; ++k) intro[k] = word(rng.below(vocab_size));
        for (size_t k = 0; k < sentences_per_doc; ++k) {
            std::ostringstream s;
            s << synthetic_marker(k) << " " << topic;
            if (k > 0) s << " " << intro[k - 1];
            s << " " << intro[k] << " " << word(rng.below(vocab_size));
            doc.sentences.push_back(s.str());
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

}  // namespace sentord
