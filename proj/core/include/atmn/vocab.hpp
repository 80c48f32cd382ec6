#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "atmn/model.hpp"

namespace atmn {

// Word vocabulary for the whitespace tokenizer. File format: one JSON
// object mapping token text to id, plus a required "unk" field giving the
// unknown-token id. Ids must be unique across tokens.
struct Vocabulary {
    std::unordered_map<std::string, std::uint32_t> token_to_id;
    std::uint32_t unk_id = 0;

    static Vocabulary from_json(const std::string& text);
    static Vocabulary from_file(const std::string& path);

    // Largest id referenced plus one; must be <= the model's vocab_size.
    std::uint32_t min_vocab_size() const;

    // First token text mapped to `id`, or empty when none is.
    std::string token_text(std::uint32_t id) const;
};

struct TokenSpan {
    std::size_t begin = 0;  // byte offsets into the source text
    std::size_t end = 0;
};

struct Tokenization {
    TokenSequence ids;
    std::vector<std::string> texts;   // matched substring per token
    std::vector<TokenSpan> offsets;
};

// Whitespace-split, then greedy longest-prefix match against the
// vocabulary inside each word. A word that cannot be fully segmented maps
// to the unknown id as a whole.
Tokenization tokenize(std::string_view text, const Vocabulary& vocab);

}  // namespace atmn
