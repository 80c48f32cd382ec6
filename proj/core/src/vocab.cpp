#include "atmn/vocab.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace atmn {

Vocabulary Vocabulary::from_json(const std::string& text) {
    const nlohmann::json doc = nlohmann::json::parse(text);
    if (!doc.is_object()) {
        throw std::invalid_argument("vocabulary: top-level JSON object expected");
    }
    if (!doc.contains("unk")) {
        throw std::invalid_argument("vocabulary: missing required 'unk' field");
    }
    Vocabulary vocab;
    vocab.unk_id = doc.at("unk").get<std::uint32_t>();
    std::unordered_set<std::uint32_t> seen;
    for (const auto& [key, value] : doc.items()) {
        if (key == "unk") continue;
        const std::uint32_t id = value.get<std::uint32_t>();
        if (!seen.insert(id).second) {
            throw std::invalid_argument("vocabulary: duplicate id " + std::to_string(id));
        }
        vocab.token_to_id.emplace(key, id);
    }
    return vocab;
}

Vocabulary Vocabulary::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("vocabulary: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::uint32_t Vocabulary::min_vocab_size() const {
    std::uint32_t max_id = unk_id;
    for (const auto& [token, id] : token_to_id) {
        max_id = std::max(max_id, id);
    }
    return max_id + 1;
}

std::string Vocabulary::token_text(std::uint32_t id) const {
    std::string best;
    for (const auto& [token, tid] : token_to_id) {
        if (tid == id && (best.empty() || token < best)) {
            best = token;
        }
    }
    return best;
}

Tokenization tokenize(std::string_view text, const Vocabulary& vocab) {
    Tokenization out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (pos >= text.size()) break;
        std::size_t word_end = pos;
        while (word_end < text.size() &&
               !std::isspace(static_cast<unsigned char>(text[word_end]))) {
            ++word_end;
        }
        const std::string_view word = text.substr(pos, word_end - pos);

        // Greedy longest-prefix segmentation of the word.
        std::vector<std::uint32_t> ids;
        std::vector<TokenSpan> spans;
        std::size_t cursor = 0;
        bool matched = true;
        while (cursor < word.size()) {
            std::size_t len = word.size() - cursor;
            std::uint32_t id = 0;
            bool found = false;
            for (; len > 0; --len) {
                const auto it =
                    vocab.token_to_id.find(std::string(word.substr(cursor, len)));
                if (it != vocab.token_to_id.end()) {
                    id = it->second;
                    found = true;
                    break;
                }
            }
            if (!found) {
                matched = false;
                break;
            }
            ids.push_back(id);
            spans.push_back({pos + cursor, pos + cursor + len});
            cursor += len;
        }

        if (matched) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                out.ids.ids.push_back(ids[i]);
                out.offsets.push_back(spans[i]);
                out.texts.emplace_back(
                    text.substr(spans[i].begin, spans[i].end - spans[i].begin));
            }
        } else {
            out.ids.ids.push_back(vocab.unk_id);
            out.offsets.push_back({pos, word_end});
            out.texts.emplace_back(word);
        }
        pos = word_end;
    }
    return out;
}

}  // namespace atmn
