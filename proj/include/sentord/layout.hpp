#pragma once

#include <cstddef>
#include <vector>

#include "sentord/common.hpp"

namespace sentord {

constexpr int kSegmentA = 0;
constexpr int kSegmentB = 1;

// Flat model input for one document: sentences concatenated in presented
// order, each region laid out as [CLS] tokens... [SEP], with alternating
// A/B segment ids per region and global 0-based position ids. cls_slots[i]
// is the flat index of sentence i's [CLS].
struct EncodedInput {
    std::vector<int> token_ids;
    std::vector<int> segment_ids;
    std::vector<int> position_ids;
    std::vector<bool> attention_mask;
    std::vector<int> cls_slots;
    size_t n_sentences = 0;

    size_t length() const { return token_ids.size(); }
};

// Builds the concatenated multi-[CLS] input. Truncation: every sentence is
// first capped at max_sent_tokens; if the document still exceeds
// max_seq_len the cap is halved repeatedly until it fits. [CLS] and [SEP]
// are never dropped, so a document with 2*n > max_seq_len is unencodable.
EncodedInput build_input(const std::vector<std::vector<int>>& sentence_token_ids,
                         size_t max_seq_len, size_t max_sent_tokens);

// Extends to target_len with [PAD] / segment A / mask false.
void pad_input(EncodedInput& input, size_t target_len);

// Two-sentence pair encoding for the pairwise baseline: a single [CLS],
// first sentence + [SEP] on segment A, second sentence + [SEP] on segment
// B. One scoring slot at index 0.
EncodedInput build_pair_input(const std::vector<int>& first, const std::vector<int>& second,
                              size_t max_seq_len, size_t max_sent_tokens);

// True iff the token content of sentence region i in `a` equals region
// perm[i] in `b`, for all i. Layout-correctness oracle.
bool permute_check(const EncodedInput& a, const EncodedInput& b, const std::vector<int>& perm);

// Content tokens of sentence region i (no [CLS]/[SEP]/[PAD]).
std::vector<int> region_tokens(const EncodedInput& input, size_t i);

}  // namespace sentord
