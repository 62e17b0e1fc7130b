#include "sentord/layout.hpp"

#include <algorithm>
#include <numeric>

#include "sentord/tokenizer.hpp"

namespace sentord {

namespace {

size_t total_length(const std::vector<std::vector<int>>& sents, size_t cap) {
    size_t total = 0;
    for (const auto& s : sents) total += std::min(s.size(), cap) + 2;
    return total;
}

void append_region(EncodedInput& out, const std::vector<int>& tokens, size_t cap, int segment) {
    out.cls_slots.push_back(static_cast<int>(out.token_ids.size()));
    out.token_ids.push_back(kClsId);
    out.segment_ids.push_back(segment);
    const size_t take = std::min(tokens.size(), cap);
    for (size_t t = 0; t < take; ++t) {
        out.token_ids.push_back(tokens[t]);
        out.segment_ids.push_back(segment);
    }
    out.token_ids.push_back(kSepId);
    out.segment_ids.push_back(segment);
}

void finish(EncodedInput& out) {
    const size_t len = out.token_ids.size();
    out.position_ids.resize(len);
    std::iota(out.position_ids.begin(), out.position_ids.end(), 0);
    out.attention_mask.assign(len, true);
}

}  // namespace

EncodedInput build_input(const std::vector<std::vector<int>>& sentence_token_ids,
                         size_t max_seq_len, size_t max_sent_tokens) {
    const size_t n = sentence_token_ids.size();
    if (n == 0) throw Error("layout", "no_sentences", "build_input needs at least one sentence");
    if (max_seq_len < 3) throw Error("layout", "bad_argument", "max_seq_len must be >= 3");
    if (2 * n > max_seq_len) {
        throw Error("layout", "unencodable_document",
                    "minimal layout needs " + std::to_string(2 * n) + " slots, max_seq_len is " +
                        std::to_string(max_seq_len));
    }

    size_t cap = std::max<size_t>(1, max_sent_tokens);
    while (total_length(sentence_token_ids, cap) > max_seq_len && cap > 0) cap /= 2;

    EncodedInput out;
    out.n_sentences = n;
    for (size_t i = 0; i < n; ++i) {
        append_region(out, sentence_token_ids[i], cap, i % 2 == 0 ? kSegmentA : kSegmentB);
    }
    finish(out);
    return out;
}

void pad_input(EncodedInput& input, size_t target_len) {
    if (target_len < input.length()) {
        throw Error("layout", "bad_argument", "pad target shorter than input");
    }
    while (input.token_ids.size() < target_len) {
        input.token_ids.push_back(kPadId);
        input.segment_ids.push_back(kSegmentA);
        input.position_ids.push_back(static_cast<int>(input.position_ids.size()));
        input.attention_mask.push_back(false);
    }
}

EncodedInput build_pair_input(const std::vector<int>& first, const std::vector<int>& second,
                              size_t max_seq_len, size_t max_sent_tokens) {
    if (max_seq_len < 3) throw Error("layout", "bad_argument", "max_seq_len must be >= 3");
    if (3 > max_seq_len) {
        throw Error("layout", "unencodable_document", "pair input needs at least 3 slots");
    }

    size_t cap = std::max<size_t>(1, max_sent_tokens);
    auto pair_len = [&](size_t c) {
        return 3 + std::min(first.size(), c) + std::min(second.size(), c);
    };
    while (pair_len(cap) > max_seq_len && cap > 0) cap /= 2;
    if (pair_len(cap) > max_seq_len) {
        throw Error("layout", "unencodable_document", "pair skeleton exceeds max_seq_len");
    }

    EncodedInput out;
    out.n_sentences = 1;  // one scoring slot
    out.cls_slots.push_back(0);
    out.token_ids.push_back(kClsId);
    out.segment_ids.push_back(kSegmentA);
    const size_t take_a = std::min(first.size(), cap);
    for (size_t t = 0; t < take_a; ++t) {
        out.token_ids.push_back(first[t]);
        out.segment_ids.push_back(kSegmentA);
    }
    out.token_ids.push_back(kSepId);
    out.segment_ids.push_back(kSegmentA);
    const size_t take_b = std::min(second.size(), cap);
    for (size_t t = 0; t < take_b; ++t) {
        out.token_ids.push_back(second[t]);
        out.segment_ids.push_back(kSegmentB);
    }
    out.token_ids.push_back(kSepId);
    out.segment_ids.push_back(kSegmentB);
    finish(out);
    return out;
}

std::vector<int> region_tokens(const EncodedInput& input, size_t i) {
    if (i >= input.cls_slots.size()) {
        throw Error("layout", "bad_argument", "region index out of range");
    }
    const size_t begin = static_cast<size_t>(input.cls_slots[i]) + 1;
    std::vector<int> tokens;
    for (size_t t = begin; t < input.length(); ++t) {
        const int id = input.token_ids[t];
        if (id == kSepId) break;
        tokens.push_back(id);
    }
    return tokens;
}

bool permute_check(const EncodedInput& a, const EncodedInput& b, const std::vector<int>& perm) {
    if (a.n_sentences != b.n_sentences || perm.size() != a.n_sentences) return false;
    for (size_t i = 0; i < a.n_sentences; ++i) {
        const int target = perm[i];
        if (target < 0 || static_cast<size_t>(target) >= b.n_sentences) return false;
        if (region_tokens(a, i) != region_tokens(b, static_cast<size_t>(target))) return false;
    }
    return true;
}

}  // namespace sentord
