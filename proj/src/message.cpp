#include "sos/message.h"

#include <algorithm>

#include "sos/utf8.h"

namespace sos::message {

namespace {

struct Limits {
    std::size_t single;
    std::size_t concat;
};

Limits limits_for(Charset c) {
    return c == Charset::Gsm7 ? Limits{kGsm7SingleLimit, kGsm7ConcatLimit}
                              : Limits{kUcs2SingleLimit, kUcs2ConcatLimit};
}

// One character's encoded units: 1-2 septets or 1-2 UTF-16 units. Groups are
// never split across segments.
using UnitGroup = std::vector<std::uint16_t>;

std::vector<UnitGroup> to_groups(std::u32string_view text, Charset charset) {
    std::vector<UnitGroup> groups;
    groups.reserve(text.size());
    for (char32_t cp : text) {
        if (charset == Charset::Gsm7) {
            const auto s = gsm7_septets(cp);
            groups.emplace_back(s->begin(), s->end());
        } else if (cp >= 0x10000) {
            const char32_t v = cp - 0x10000;
            groups.push_back({static_cast<std::uint16_t>(0xD800 + (v >> 10)),
                              static_cast<std::uint16_t>(0xDC00 + (v & 0x3FF))});
        } else {
            groups.push_back({static_cast<std::uint16_t>(cp)});
        }
    }
    return groups;
}

std::vector<std::uint8_t> encode_units(const std::vector<std::uint16_t>& units, Charset charset) {
    if (charset == Charset::Gsm7) {
        std::vector<std::uint8_t> septets(units.begin(), units.end());
        return pack_septets(septets);
    }
    std::vector<std::uint8_t> out;
    out.reserve(units.size() * 2);
    for (auto u : units) {
        out.push_back(static_cast<std::uint8_t>(u >> 8));
        out.push_back(static_cast<std::uint8_t>(u & 0xFF));
    }
    return out;
}

}  // namespace

MessageText compose(std::string_view custom, const geo::ResolvedLocation& location,
                    const std::optional<std::string>& place_string) {
    if (custom.empty()) throw MessageError(MessageErrorKind::EmptyCustom, "custom message is empty");

    MessageText out;
    out.custom_message = std::string(custom);
    out.location_kind = geo::kind_of(location);

    std::string text(custom);
    auto append_coords = [&](const geo::LatLon& p) {
        text += " Longitude:" + geo::format_coord(p.lon());
        text += " Latitude:" + geo::format_coord(p.lat());
        if (place_string && !place_string->empty()) text += " Near: " + *place_string;
    };
    if (const auto* exact = std::get_if<geo::ExactLocation>(&location)) {
        append_coords(exact->point);
    } else if (const auto* approx = std::get_if<geo::ApproximateLocation>(&location)) {
        append_coords(approx->point);
        text += " (approx., cell area)";
    } else {
        text += " Location unavailable";
    }

    const auto chars = utf8::length(text);
    if (chars > kMaxMessageChars) {
        throw MessageError(MessageErrorKind::MessageTooLong,
                           std::to_string(chars) + " characters exceeds " + std::to_string(kMaxMessageChars));
    }
    out.text = std::move(text);
    return out;
}

std::optional<std::uint8_t> SmsSegment::concat_ref() const {
    if (udh.size() < 6) return std::nullopt;
    return udh[3];
}

std::uint8_t SmsSegment::total() const { return udh.size() < 6 ? 1 : udh[4]; }

std::uint8_t SmsSegment::seq() const { return udh.size() < 6 ? 1 : udh[5]; }

std::size_t expected_segment_count(Charset charset, std::size_t units) {
    const auto lim = limits_for(charset);
    if (units <= lim.single) return 1;
    return (units + lim.concat - 1) / lim.concat;
}

EncodedSms segment_message(std::string_view utf8_text, ConcatRng& rng) {
    const std::u32string text = utf8::decode(utf8_text);
    if (text.size() > kMaxMessageChars) {
        throw MessageError(MessageErrorKind::MessageTooLong,
                           std::to_string(text.size()) + " characters exceeds " +
                               std::to_string(kMaxMessageChars));
    }

    EncodedSms sms;
    sms.charset = detect_charset(text);
    const auto lim = limits_for(sms.charset);
    const auto groups = to_groups(text, sms.charset);

    std::size_t total_units = 0;
    for (const auto& g : groups) total_units += g.size();

    if (total_units <= lim.single) {
        std::vector<std::uint16_t> units;
        for (const auto& g : groups) units.insert(units.end(), g.begin(), g.end());
        sms.segments.push_back(SmsSegment{{}, encode_units(units, sms.charset), units.size()});
        return sms;
    }

    std::vector<std::vector<std::uint16_t>> chunks(1);
    for (const auto& g : groups) {
        if (chunks.back().size() + g.size() > lim.concat) chunks.emplace_back();
        chunks.back().insert(chunks.back().end(), g.begin(), g.end());
    }
    if (chunks.size() > kMaxSegments) {
        throw MessageError(MessageErrorKind::TooManySegments,
                           std::to_string(chunks.size()) + " segments exceeds " + std::to_string(kMaxSegments));
    }

    const auto ref = static_cast<std::uint8_t>(rng() & 0xFF);
    const auto total = static_cast<std::uint8_t>(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        SmsSegment seg;
        seg.udh = {0x05, 0x00, 0x03, ref, total, static_cast<std::uint8_t>(i + 1)};
        seg.payload = encode_units(chunks[i], sms.charset);
        seg.unit_count = chunks[i].size();
        sms.segments.push_back(std::move(seg));
    }
    return sms;
}

std::string reassemble(const EncodedSms& sms) {
    std::vector<const SmsSegment*> ordered;
    for (const auto& s : sms.segments) ordered.push_back(&s);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const SmsSegment* a, const SmsSegment* b) { return a->seq() < b->seq(); });
    std::string out;
    for (const auto* s : ordered) {
        out += sms.charset == Charset::Gsm7 ? gsm7_decode(s->payload, s->unit_count) : ucs2_decode(s->payload);
    }
    return out;
}

}  // namespace sos::message
