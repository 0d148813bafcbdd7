#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace damsa::util {

// Decodes UTF-8 into codepoints. Invalid byte sequences decode to U+FFFD,
// one replacement per offending byte, so decoding is total.
std::vector<char32_t> decode_utf8(std::string_view text);

std::string encode_utf8(const std::vector<char32_t>& codepoints);
void append_utf8(std::string& out, char32_t cp);

// Unicode whitespace (the set Python's str.split() treats as a separator).
bool is_unicode_space(char32_t cp);

// Splits on runs of Unicode whitespace; no empty tokens.
std::vector<std::string> split_ws(std::string_view text);

// Removes every Unicode whitespace codepoint.
std::string remove_ws(std::string_view text);

// Strips leading/trailing Unicode whitespace.
std::string trim(std::string_view text);

std::size_t codepoint_count(std::string_view text);

}  // namespace damsa::util
