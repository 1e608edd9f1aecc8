#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace seqtag::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

// Code points of `s`. Each byte of an invalid or truncated sequence decodes
// to U+FFFD, so decoding never fails.
std::vector<char32_t> decode(std::string_view s);

std::string encode(char32_t cp);
std::string encode(const std::vector<char32_t>& cps);

// Uppercase test covering ASCII, Latin-1, Latin Extended-A, Greek and
// Cyrillic. Locale-independent so models behave the same everywhere.
bool is_upper(char32_t cp);

}  // namespace seqtag::utf8
