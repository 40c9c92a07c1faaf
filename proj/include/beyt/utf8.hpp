#pragma once

#include <string>
#include <string_view>

namespace beyt::utf8 {

// Throws InputError on malformed sequences.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);

// Unicode general category P* (Unicode 13 tables).
bool is_punctuation(char32_t c);

// Unicode White_Space property.
bool is_space(char32_t c);

std::size_t length(std::string_view s);

}  // namespace beyt::utf8
