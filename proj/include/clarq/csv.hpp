#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clarq::csv {

// RFC-4180 field quoting: quotes only when the field needs it.
std::string format_row(const std::vector<std::string>& fields);

// Parses one logical CSV record from the stream (quoted fields may span
// lines). Returns false at end of input.
bool read_row(std::istream& in, std::vector<std::string>& fields);

} // namespace clarq::csv
