#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace clarq::text {

// Decodes the named and numeric XML/HTML entities that occur in
// stackexchange dumps (&amp; &lt; &gt; &quot; &apos; &#NN; &#xHH; &nbsp;).
// Unknown entities are passed through verbatim.
std::string decode_entities(std::string_view s);

// Removes markup tags, decodes entities and collapses runs of whitespace
// to single spaces. Result is trimmed.
std::string strip_html(std::string_view s);

// Collapses internal whitespace runs and trims both ends.
std::string collapse_whitespace(std::string_view s);

// Lowercases, splits on whitespace, and separates punctuation into
// standalone tokens ("what os?" -> ["what", "os", "?"]).
std::vector<std::string> word_tokenize(std::string_view s);

} // namespace clarq::text
