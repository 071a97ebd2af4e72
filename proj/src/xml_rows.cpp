#include "clarq/xml_rows.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "clarq/error.hpp"
#include "clarq/text.hpp"

namespace clarq::xml {

namespace {

struct Cursor {
    std::string_view s;
    std::size_t pos = 0;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }

    void skip_ws() {
        while (!done() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool consume(std::string_view lit) {
        if (s.substr(pos, lit.size()) == lit) {
            pos += lit.size();
            return true;
        }
        return false;
    }

    std::string read_name() {
        std::size_t start = pos;
        while (!done()) {
            char c = s[pos];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' ||
                c == '.' || c == '-') {
                ++pos;
            } else {
                break;
            }
        }
        return std::string(s.substr(start, pos - start));
    }
};

Row parse_row(Cursor& c) {
    Row row;
    row.offset = c.pos;
    if (!c.consume("<row")) throw malformed_xml(c.pos, "expected <row element");
    for (;;) {
        c.skip_ws();
        if (c.done()) throw malformed_xml(c.pos, "unterminated <row element");
        if (c.consume("/>")) return row;
        if (c.peek() == '>') throw malformed_xml(c.pos, "row elements must be self-closing");
        std::string name = c.read_name();
        if (name.empty()) throw malformed_xml(c.pos, "expected attribute name");
        c.skip_ws();
        if (!c.consume("=")) throw malformed_xml(c.pos, "expected '=' after attribute name");
        c.skip_ws();
        if (c.done() || (c.peek() != '"' && c.peek() != '\''))
            throw malformed_xml(c.pos, "expected quoted attribute value");
        char quote = c.peek();
        ++c.pos;
        std::size_t end = c.s.find(quote, c.pos);
        if (end == std::string_view::npos)
            throw malformed_xml(c.pos, "unterminated attribute value");
        row.attrs.emplace_back(std::move(name),
                               text::decode_entities(c.s.substr(c.pos, end - c.pos)));
        c.pos = end + 1;
    }
}

} // namespace

std::optional<std::string_view> Row::get(std::string_view name) const {
    for (const auto& [k, v] : attrs)
        if (k == name) return std::string_view(v);
    return std::nullopt;
}

std::vector<Row> parse_row_file(std::string_view content, std::string_view expected_root) {
    Cursor c{content};
    c.skip_ws();
    if (c.consume("<?xml")) {
        std::size_t end = content.find("?>", c.pos);
        if (end == std::string_view::npos) throw malformed_xml(c.pos, "unterminated xml prolog");
        c.pos = end + 2;
        c.skip_ws();
    }
    std::string open = "<" + std::string(expected_root);
    if (!c.consume(open))
        throw malformed_xml(c.pos, "expected root element <" + std::string(expected_root) + ">");
    c.skip_ws();
    if (!c.consume(">")) throw malformed_xml(c.pos, "expected '>' after root element name");

    std::vector<Row> rows;
    std::string close = "</" + std::string(expected_root) + ">";
    for (;;) {
        c.skip_ws();
        if (c.done()) throw malformed_xml(c.pos, "missing closing " + close);
        if (c.consume(close)) break;
        rows.push_back(parse_row(c));
    }
    c.skip_ws();
    if (!c.done()) throw malformed_xml(c.pos, "trailing content after " + close);
    return rows;
}

std::vector<Row> parse_row_path(const std::string& path, std::string_view expected_root) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IoError", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_row_file(buf.str(), expected_root);
}

} // namespace clarq::xml
