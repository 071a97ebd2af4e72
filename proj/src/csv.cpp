#include "clarq/csv.hpp"

#include <istream>

namespace clarq::csv {

std::string format_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\r\n") != std::string::npos) {
            out += '"';
            for (char c : f) {
                if (c == '"') out += '"';
                out += c;
            }
            out += '"';
        } else {
            out += f;
        }
    }
    out += "\r\n";
    return out;
}

bool read_row(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    int c = in.get();
    if (c == std::istream::traits_type::eof()) return false;
    std::string field;
    bool quoted = false;
    for (;;) {
        if (c == std::istream::traits_type::eof()) break;
        char ch = static_cast<char>(c);
        if (quoted) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && field.empty()) {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            break;
        } else if (ch == '\n') {
            break;
        } else {
            field += ch;
        }
        c = in.get();
    }
    fields.push_back(std::move(field));
    return true;
}

} // namespace clarq::csv
