#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sentord/common.hpp"

namespace sentord {

// One document in gold sentence order.
struct Document {
    std::string id;
    std::vector<std::string> sentences;
};

struct Corpus {
    std::string name;
    std::vector<Document> documents;

    size_t size() const { return documents.size(); }
};

// A document with its sentences in a presented (shuffled) order plus the
// gold permutation. gold_perm[r] is the presented index of the sentence
// that belongs at rank r, so presented[gold_perm[r]] walks the gold order.
struct ShuffledDocument {
    std::string doc_id;
    std::vector<std::string> presented;
    std::vector<int> gold_perm;

    size_t n_sentences() const { return presented.size(); }
};

// Reads a UTF-8 line-delimited corpus: one JSON record per line with fields
// "id" (string) and "sentences" (array of strings, gold order). Rejects
// malformed records with their line number, duplicate ids, empty sentence
// lists, and sentences that are empty after whitespace trimming.
Corpus load_corpus(const std::string& path, const std::string& name = "");

// Writes the same line-delimited format load_corpus reads.
void save_corpus(const Corpus& corpus, const std::string& path);

// Uniform random permutation of {0..n-1}, Fisher-Yates under the seeded
// generator. Shared by document shuffling and the trainer's epoch shuffles.
std::vector<int> random_permutation(size_t n, uint64_t seed);

// Uniform random shuffle under the seeded generator; deterministic for a
// fixed (doc, seed) pair.
ShuffledDocument shuffle_document(const Document& doc, uint64_t seed);

// A synthetic ordering corpus with learnable order signals per sentence:
// a per-position ordinal marker, a per-document topic token, and a
// coreference-style link where sentence k repeats a content token
// introduced in sentence k-1.
Corpus gen_synthetic(size_t n_docs, size_t sentences_per_doc, size_t vocab_size,
                     uint64_t seed);

// Marker token for gold position k of a document with `total` sentences.
// Exposed so rule-based oracles and tests can read the position signal.
std::string synthetic_marker(size_t k);

}  // namespace sentord
