#include "clarq/text.hpp"

#include <cctype>
#include <cstdlib>

namespace clarq::text {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Decodes one entity starting at s[pos] (which is '&'). Returns the decoded
// text and advances pos past the entity, or returns "&" and advances by one
// when the sequence is not a recognizable entity.
std::string decode_one(std::string_view s, std::size_t& pos) {
    std::size_t semi = s.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 10) {
        ++pos;
        return "&";
    }
    std::string_view body = s.substr(pos + 1, semi - pos - 1);
    std::string out;
    if (body == "amp") out = "&";
    else if (body == "lt") out = "<";
    else if (body == "gt") out = ">";
    else if (body == "quot") out = "\"";
    else if (body == "apos") out = "'";
    else if (body == "nbsp") out = " ";
    else if (!body.empty() && body[0] == '#') {
        int base = 10;
        std::string digits(body.substr(1));
        if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X')) {
            base = 16;
            digits.erase(0, 1);
        }
        if (digits.empty()) {
            ++pos;
            return "&";
        }
        char* end = nullptr;
        long code = std::strtol(digits.c_str(), &end, base);
        if (*end != '\0' || code <= 0 || code > 0x10FFFF) {
            ++pos;
            return "&";
        }
        // UTF-8 encode.
        unsigned cp = static_cast<unsigned>(code);
        if (cp < 0x80) out += static_cast<char>(cp);
        else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    } else {
        ++pos;
        return "&";
    }
    pos = semi + 1;
    return out;
}

} // namespace

std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '&') out += decode_one(s, i);
        else out += s[i++];
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

std::string strip_html(std::string_view s) {
    std::string no_tags;
    no_tags.reserve(s.size());
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
            no_tags += ' ';
        } else if (c == '>') {
            in_tag = false;
        } else if (!in_tag) {
            no_tags += c;
        }
    }
    return collapse_whitespace(decode_entities(no_tags));
}

std::vector<std::string> word_tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char c : s) {
        unsigned char u = static_cast<unsigned char>(c);
        if (is_space(c)) {
            flush();
        } else if (std::isalnum(u) || u >= 0x80) {
            current += static_cast<char>(std::tolower(u));
        } else {
            // punctuation becomes its own token ("?" carries signal here)
            flush();
            tokens.emplace_back(1, c);
        }
    }
    flush();
    return tokens;
}

} // namespace clarq::text
