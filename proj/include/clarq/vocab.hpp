#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clarq::encoder {

// Token table with fixed special ids. Built only from training-stage text.
class Vocabulary {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnknown = 1;

    Vocabulary();

    // Adds tokens of `text` in first-seen order; idempotent per token.
    void add_text(std::string_view text);

    // Adds one pre-tokenized entry (checkpoint loading).
    void add_token(std::string token);

    std::int32_t id_of(const std::string& token) const;
    const std::string& token_of(std::int32_t id) const;
    std::size_t size() const { return id_to_token_.size(); }

    const std::vector<std::string>& tokens() const { return id_to_token_; }

    bool operator==(const Vocabulary& other) const {
        return id_to_token_ == other.id_to_token_;
    }

private:
    std::unordered_map<std::string, std::int32_t> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// Lowercased, punctuation-separated tokens mapped to ids, truncated to
// max_len. Never empty: empty text yields a single unknown id.
std::vector<std::int32_t> tokenize(std::string_view text, const Vocabulary& vocab,
                                   std::size_t max_len);

} // namespace clarq::encoder
