#pragma once

#include <string_view>

namespace envforge {

// Deterministic fallback token counter used whenever a backend does not
// report usage. Segmentation rule, pinned so recorded statistics are
// reproducible:
//   - a maximal run of ASCII alphanumerics/underscore is one token
//   - every other non-whitespace codepoint is one token on its own
//   - ASCII whitespace separates tokens and is never counted
// Counting is over UTF-8 codepoints; malformed bytes count one token each.
// Monotone under concatenation: count(a+b) >= max(count(a), count(b)).
long count_tokens(std::string_view text);

}  // namespace envforge
