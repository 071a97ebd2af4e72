#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clarq::xml {

// One `<row .../>` element: attribute names with entity-decoded values.
struct Row {
    std::vector<std::pair<std::string, std::string>> attrs;
    std::size_t offset = 0; // byte offset of the row in the source

    std::optional<std::string_view> get(std::string_view name) const;
};

// Parses the stackexchange row format: a single root element whose children
// are all self-closing `<row .../>` elements. An optional `<?xml ?>` prolog
// is accepted. Throws MalformedXml on structural corruption.
std::vector<Row> parse_row_file(std::string_view content, std::string_view expected_root);

// Reads the whole file then parses. Throws IoError when unreadable.
std::vector<Row> parse_row_path(const std::string& path, std::string_view expected_root);

} // namespace clarq::xml
