#pragma once

#include <string>
#include <vector>

namespace smellmap::text {

// Decode UTF-8 into code points. Invalid bytes decode as U+FFFD.
std::vector<char32_t> decode_utf8(const std::string& s);
std::string encode_utf8(const std::vector<char32_t>& cps);

bool is_space(char32_t c);
bool is_punct(char32_t c);

// Lowercases ASCII, Latin-1 and Latin Extended-A letters; other code points
// pass through unchanged.
char32_t to_lower(char32_t c);

// Canonical composition of base letter + combining mark for the Latin
// precomposed range (enough for the English/Spanish lexicons this handles).
std::vector<char32_t> compose(const std::vector<char32_t>& cps);

// Lowercase, compose, strip leading/trailing punctuation. Internal
// punctuation (hyphens etc.) is preserved. Idempotent; "" maps to "".
std::string normalize_token(const std::string& raw);

// Split on whitespace and punctuation. A hyphen between two alphanumeric
// code points does not split ("co-op" stays one token). Leading '#' on
// hashtags is punctuation and falls away. Returned tokens are normalized.
std::vector<std::string> tokenize(const std::string& raw);

}  // namespace smellmap::text
