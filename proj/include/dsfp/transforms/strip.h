#pragma once

#include <string>
#include <string_view>

namespace dsfp {

// Flattens text into one continuous block:
//  - newlines, carriage returns, tabs, form feeds become spaces;
//  - list markers are removed where a line or a sentence starts. A marker is
//    a bullet (U+2022, '-', '*', U+2013), digits followed by '.' or ')', or a
//    single ASCII letter followed by ')', and must be followed by whitespace
//    or the end of the line;
//  - runs of spaces collapse to one and the ends are trimmed.
// Sentence punctuation is left alone. strip_formatting(strip_formatting(x))
// == strip_formatting(x).
std::string strip_formatting(std::string_view text);

// Length in bytes of the list marker at the start of `s` (0 if none), using
// the rules above. Exposed for validation and tests.
std::size_t list_marker_length(std::string_view s);

}  // namespace dsfp
