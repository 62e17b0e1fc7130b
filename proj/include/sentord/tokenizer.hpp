#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sentord/corpus.hpp"

namespace sentord {

// Reserved ids are fixed and never reassigned.
constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kClsId = 2;
constexpr int kSepId = 3;
constexpr int kNumReserved = 4;

class Vocab {
public:
    Vocab();

    // Returns the token id, or kUnkId when absent.
    int id_of(const std::string& token) const;
    const std::string& token_of(int id) const;
    bool contains(const std::string& token) const;

    size_t size() const { return id_to_token_.size(); }

    // Registers a content token with the next free id. Reserved names and
    // duplicates are rejected.
    int add_token(const std::string& token);

    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Lowercase, split on Unicode whitespace, detach leading/trailing ASCII
// punctuation as separate tokens. Inner punctuation stays attached.
std::vector<std::string> normalize(const std::string& text);

// All normalized tokens with frequency >= min_freq, truncated to max_size
// total entries (reserved included) by frequency then lexicographic order.
Vocab build_vocab(const Corpus& corpus, size_t min_freq = 1, size_t max_size = 30000);

// normalize + id lookup; unseen tokens map to kUnkId.
std::vector<int> encode(const std::string& text, const Vocab& vocab);

std::vector<std::string> decode(const std::vector<int>& ids, const Vocab& vocab);

}  // namespace sentord
