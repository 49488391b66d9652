#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "sos/geo.h"
#include "sos/gsm7.h"

namespace sos::message {

inline constexpr std::size_t kMaxMessageChars = 1000;
inline constexpr std::size_t kMaxSegments = 255;

inline constexpr std::size_t kGsm7SingleLimit = 160;
inline constexpr std::size_t kGsm7ConcatLimit = 153;
inline constexpr std::size_t kUcs2SingleLimit = 70;
inline constexpr std::size_t kUcs2ConcatLimit = 67;

struct MessageText {
    std::string text;
    std::string custom_message;
    geo::LocationKind location_kind = geo::LocationKind::Unavailable;
};

/// "<custom> Longitude:<lon> Latitude:<lat>[ Near: <place>][ (approx., cell area)]"
/// or "<custom> Location unavailable".
MessageText compose(std::string_view custom, const geo::ResolvedLocation& location,
                    const std::optional<std::string>& place_string);

struct SmsSegment {
    /// Concatenation header 05 00 03 <ref> <total> <seq>; empty for a
    /// single-segment message.
    std::vector<std::uint8_t> udh;
    /// Septet-packed (Gsm7) or UTF-16BE (Ucs2).
    std::vector<std::uint8_t> payload;
    /// Septets (Gsm7) or 16-bit units (Ucs2) in this segment.
    std::size_t unit_count = 0;

    std::optional<std::uint8_t> concat_ref() const;
    std::uint8_t total() const;
    std::uint8_t seq() const;
};

struct EncodedSms {
    Charset charset = Charset::Gsm7;
    std::vector<SmsSegment> segments;
};

using ConcatRng = std::mt19937_64;

/// Splits text into wire segments. A concatenation reference is drawn from
/// rng only when more than one segment is needed.
EncodedSms segment_message(std::string_view utf8, ConcatRng& rng);

/// Closed-form segment count for a message costing `units`.
std::size_t expected_segment_count(Charset charset, std::size_t units);

/// Decodes the segments in seq order and concatenates the text.
std::string reassemble(const EncodedSms& sms);

}  // namespace sos::message
