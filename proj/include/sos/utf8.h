#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sos::utf8 {

class Utf8Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decodes UTF-8 into code points. Rejects overlong forms, surrogates and
/// truncated sequences.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

/// Number of code points; throws Utf8Error on malformed input.
std::size_t length(std::string_view bytes);

std::string_view trim(std::string_view s);

}  // namespace sos::utf8
