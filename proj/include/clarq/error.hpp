#pragma once

#include <stdexcept>
#include <string>

namespace clarq {

// All domain errors carry a stable machine-readable code alongside the
// human message. Codes are what the CLI serializes into error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline Error malformed_xml(std::size_t offset, const std::string& what) {
    return Error("MalformedXml", what + " (byte offset " + std::to_string(offset) + ")");
}

inline Error missing_attribute(const std::string& attr, std::size_t offset) {
    return Error("MissingAttribute",
                 "required attribute '" + attr + "' absent (byte offset " +
                     std::to_string(offset) + ")");
}

} // namespace clarq
