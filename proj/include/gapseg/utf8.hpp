#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace gapseg::utf8 {

// Strict decoder: rejects overlong forms, surrogates, code points above
// U+10FFFF and truncated sequences. Returns the byte offset of the first bad
// sequence through *error_offset when decoding fails.
std::optional<std::u32string> decode(std::string_view bytes, std::size_t* error_offset = nullptr);

void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view text);

// Word separators in segmented text: ASCII space and the ideographic space.
inline bool is_separator(char32_t c) { return c == U' ' || c == U'　'; }

// Whitespace other than the separators; stripped from input.
bool is_other_space(char32_t c);

}  // namespace gapseg::utf8
