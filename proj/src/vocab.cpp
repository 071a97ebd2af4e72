#include "clarq/vocab.hpp"

#include "clarq/error.hpp"
#include "clarq/text.hpp"

namespace clarq::encoder {

Vocabulary::Vocabulary() {
    id_to_token_ = {"<pad>", "<unk>"};
    token_to_id_ = {{"<pad>", kPad}, {"<unk>", kUnknown}};
}

void Vocabulary::add_text(std::string_view text) {
    for (auto& token : text::word_tokenize(text)) add_token(std::move(token));
}

void Vocabulary::add_token(std::string token) {
    auto [it, inserted] =
        token_to_id_.emplace(token, static_cast<std::int32_t>(id_to_token_.size()));
    if (inserted) id_to_token_.push_back(std::move(token));
}

std::int32_t Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnknown : it->second;
}

const std::string& Vocabulary::token_of(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size())
        throw Error("VocabError", "token id " + std::to_string(id) + " out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<std::int32_t> tokenize(std::string_view text, const Vocabulary& vocab,
                                   std::size_t max_len) {
    std::vector<std::int32_t> ids;
    for (const auto& token : text::word_tokenize(text)) {
        if (ids.size() >= max_len) break;
        ids.push_back(vocab.id_of(token));
    }
    if (ids.empty()) ids.push_back(Vocabulary::kUnknown);
    return ids;
}

} // namespace clarq::encoder
