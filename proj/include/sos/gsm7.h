#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sos::message {

enum class Charset { Gsm7, Ucs2 };

std::string_view to_string(Charset c);

enum class MessageErrorKind {
    EmptyCustom,
    MessageTooLong,
    NotRepresentable,
    MalformedPacking,
    DanglingEscape,
    TooManySegments,
};

std::string_view to_string(MessageErrorKind kind);

class MessageError : public std::runtime_error {
public:
    MessageError(MessageErrorKind kind, const std::string& detail);
    MessageErrorKind kind() const { return kind_; }

private:
    MessageErrorKind kind_;
};

inline constexpr std::uint8_t kEscape = 0x1B;

/// GSM 03.38 septet sequence for one code point: one septet for the default
/// alphabet, ESC + code for the extension table, nothing if unrepresentable.
std::optional<std::vector<std::uint8_t>> gsm7_septets(char32_t cp);

/// Septet cost of text, or nullopt when any character falls outside the
/// default alphabet and extension table.
std::optional<std::size_t> gsm7_cost(std::u32string_view text);

Charset detect_charset(std::u32string_view text);
Charset detect_charset(std::string_view utf8);

/// Packs 7-bit values LSB-first, 8 septets per 7 octets.
std::vector<std::uint8_t> pack_septets(std::span<const std::uint8_t> septets);
std::vector<std::uint8_t> unpack_septets(std::span<const std::uint8_t> packed, std::size_t septet_count);

struct Gsm7Packed {
    std::vector<std::uint8_t> bytes;
    std::size_t septet_count = 0;
};

/// Throws MessageError{NotRepresentable}.
Gsm7Packed gsm7_encode(std::string_view utf8);
Gsm7Packed gsm7_encode(std::u32string_view text);

/// Throws MessageError{MalformedPacking | DanglingEscape}.
std::string gsm7_decode(std::span<const std::uint8_t> packed, std::size_t septet_count);

/// UTF-16BE. Code points above U+FFFF become surrogate pairs.
std::vector<std::uint8_t> ucs2_encode(std::u32string_view text);
std::string ucs2_decode(std::span<const std::uint8_t> bytes);

}  // namespace sos::message
