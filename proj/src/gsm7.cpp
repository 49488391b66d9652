#include "sos/gsm7.h"

#include <array>
#include <unordered_map>

#include "sos/utf8.h"

namespace sos::message {

namespace {

// GSM 03.38 default alphabet, indexed by septet. 0x1B is the escape slot.
constexpr std::array<char32_t, 128> kDefaultAlphabet = {
    U'@',    U'£', U'$',      U'¥', U'è', U'é', U'ù', U'ì',
    U'ò', U'Ç', U'\n',   U'Ø', U'ø', U'\r',     U'Å', U'å',
    U'Δ', U'_',    U'Φ', U'Γ', U'Λ', U'Ω', U'Π', U'Ψ',
    U'Σ', U'Θ', U'Ξ', 0x1B,    U'Æ', U'æ', U'ß', U'É',
    U' ',    U'!',      U'"',      U'#',      U'¤', U'%',      U'&',      U'\'',
    U'(',    U')',      U'*',      U'+',      U',',      U'-',      U'.',      U'/',
    U'0',    U'1',      U'2',      U'3',      U'4',      U'5',      U'6',      U'7',
    U'8',    U'9',      U':',      U';',      U'<',      U'=',      U'>',      U'?',
    U'¡', U'A',    U'B',      U'C',      U'D',      U'E',      U'F',      U'G',
    U'H',    U'I',      U'J',      U'K',      U'L',      U'M',      U'N',      U'O',
    U'P',    U'Q',      U'R',      U'S',      U'T',      U'U',      U'V',      U'W',
    U'X',    U'Y',      U'Z',      U'Ä', U'Ö', U'Ñ', U'Ü', U'§',
    U'¿', U'a',    U'b',      U'c',      U'd',      U'e',      U'f',      U'g',
    U'h',    U'i',      U'j',      U'k',      U'l',      U'm',      U'n',      U'o',
    U'p',    U'q',      U'r',      U's',      U't',      U'u',      U'v',      U'w',
    U'x',    U'y',      U'z',      U'ä', U'ö', U'ñ', U'ü', U'à',
};

struct ExtensionEntry {
    std::uint8_t code;
    char32_t cp;
};

constexpr std::array<ExtensionEntry, 10> kExtension = {{
    {0x0A, U'\f'},
    {0x14, U'^'},
    {0x28, U'{'},
    {0x29, U'}'},
    {0x2F, U'\\'},
    {0x3C, U'['},
    {0x3D, U'~'},
    {0x3E, U']'},
    {0x40, U'|'},
    {0x65, U'€'},
}};

const std::unordered_map<char32_t, std::uint8_t>& default_index() {
    static const auto map = [] {
        std::unordered_map<char32_t, std::uint8_t> m;
        for (std::size_t i = 0; i < kDefaultAlphabet.size(); ++i) {
            if (i == kEscape) continue;
            m.emplace(kDefaultAlphabet[i], static_cast<std::uint8_t>(i));
        }
        return m;
    }();
    return map;
}

std::optional<char32_t> extension_char(std::uint8_t code) {
    for (const auto& e : kExtension) {
        if (e.code == code) return e.cp;
    }
    return std::nullopt;
}

std::size_t packed_size(std::size_t septets) { return (septets * 7 + 7) / 8; }

}  // namespace

std::string_view to_string(Charset c) { return c == Charset::Gsm7 ? "gsm7" : "ucs2"; }

std::string_view to_string(MessageErrorKind kind) {
    switch (kind) {
        case MessageErrorKind::EmptyCustom: return "EmptyCustom";
        case MessageErrorKind::MessageTooLong: return "MessageTooLong";
        case MessageErrorKind::NotRepresentable: return "NotRepresentable";
        case MessageErrorKind::MalformedPacking: return "MalformedPacking";
        case MessageErrorKind::DanglingEscape: return "DanglingEscape";
        case MessageErrorKind::TooManySegments: return "TooManySegments";
    }
    return "MessageError";
}

MessageError::MessageError(MessageErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

std::optional<std::vector<std::uint8_t>> gsm7_septets(char32_t cp) {
    const auto& idx = default_index();
    if (const auto it = idx.find(cp); it != idx.end()) return std::vector<std::uint8_t>{it->second};
    for (const auto& e : kExtension) {
        if (e.cp == cp) return std::vector<std::uint8_t>{kEscape, e.code};
    }
    return std::nullopt;
}

std::optional<std::size_t> gsm7_cost(std::u32string_view text) {
    std::size_t cost = 0;
    for (char32_t cp : text) {
        const auto s = gsm7_septets(cp);
        if (!s) return std::nullopt;
        cost += s->size();
    }
    return cost;
}

Charset detect_charset(std::u32string_view text) {
    return gsm7_cost(text) ? Charset::Gsm7 : Charset::Ucs2;
}

Charset detect_charset(std::string_view utf8) { return detect_charset(utf8::decode(utf8)); }

std::vector<std::uint8_t> pack_septets(std::span<const std::uint8_t> septets) {
    std::vector<std::uint8_t> out(packed_size(septets.size()), 0);
    std::size_t bit = 0;
    for (std::uint8_t s : septets) {
        const std::uint16_t v = static_cast<std::uint16_t>(s & 0x7F) << (bit % 8);
        out[bit / 8] |= static_cast<std::uint8_t>(v & 0xFF);
        if ((bit % 8) > 1) out[bit / 8 + 1] |= static_cast<std::uint8_t>(v >> 8);
        bit += 7;
    }
    return out;
}

std::vector<std::uint8_t> unpack_septets(std::span<const std::uint8_t> packed, std::size_t septet_count) {
    if (packed.size() != packed_size(septet_count)) {
        throw MessageError(MessageErrorKind::MalformedPacking,
                           std::to_string(septet_count) + " septets need " +
                               std::to_string(packed_size(septet_count)) + " bytes, got " +
                               std::to_string(packed.size()));
    }
    std::vector<std::uint8_t> out;
    out.reserve(septet_count);
    std::size_t bit = 0;
    for (std::size_t i = 0; i < septet_count; ++i, bit += 7) {
        std::uint16_t v = packed[bit / 8];
        if (bit / 8 + 1 < packed.size()) v |= static_cast<std::uint16_t>(packed[bit / 8 + 1]) << 8;
        out.push_back(static_cast<std::uint8_t>((v >> (bit % 8)) & 0x7F));
    }
    return out;
}

Gsm7Packed gsm7_encode(std::u32string_view text) {
    std::vector<std::uint8_t> septets;
    septets.reserve(text.size());
    for (char32_t cp : text) {
        const auto s = gsm7_septets(cp);
        if (!s) {
            throw MessageError(MessageErrorKind::NotRepresentable,
                               "U+" + std::to_string(static_cast<std::uint32_t>(cp)) +
                                   " is not in the GSM 03.38 alphabet");
        }
        septets.insert(septets.end(), s->begin(), s->end());
    }
    return Gsm7Packed{pack_septets(septets), septets.size()};
}

Gsm7Packed gsm7_encode(std::string_view utf8) { return gsm7_encode(utf8::decode(utf8)); }

std::string gsm7_decode(std::span<const std::uint8_t> packed, std::size_t septet_count) {
    const auto septets = unpack_septets(packed, septet_count);
    std::string out;
    for (std::size_t i = 0; i < septets.size(); ++i) {
        const std::uint8_t s = septets[i];
        if (s != kEscape) {
            utf8::append(out, kDefaultAlphabet[s]);
            continue;
        }
        if (i + 1 == septets.size()) {
            throw MessageError(MessageErrorKind::DanglingEscape, "escape septet at end of data");
        }
        const std::uint8_t code = septets[++i];
        if (const auto ext = extension_char(code)) {
            utf8::append(out, *ext);
        } else {
            // Unknown extension codes fall back to the default table; a
            // second escape reads as a space.
            utf8::append(out, code == kEscape ? U' ' : kDefaultAlphabet[code]);
        }
    }
    return out;
}

std::vector<std::uint8_t> ucs2_encode(std::u32string_view text) {
    std::vector<std::uint8_t> out;
    out.reserve(text.size() * 2);
    auto put = [&out](std::uint16_t unit) {
        out.push_back(static_cast<std::uint8_t>(unit >> 8));
        out.push_back(static_cast<std::uint8_t>(unit & 0xFF));
    };
    for (char32_t cp : text) {
        if (cp >= 0x10000) {
            const char32_t v = cp - 0x10000;
            put(static_cast<std::uint16_t>(0xD800 + (v >> 10)));
            put(static_cast<std::uint16_t>(0xDC00 + (v & 0x3FF)));
        } else {
            put(static_cast<std::uint16_t>(cp));
        }
    }
    return out;
}

std::string ucs2_decode(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 2 != 0) throw MessageError(MessageErrorKind::MalformedPacking, "odd UCS-2 byte count");
    std::u32string text;
    for (std::size_t i = 0; i < bytes.size(); i += 2) {
        const char32_t unit = (static_cast<char32_t>(bytes[i]) << 8) | bytes[i + 1];
        if (unit >= 0xD800 && unit <= 0xDBFF) {
            if (i + 2 >= bytes.size()) {
                throw MessageError(MessageErrorKind::MalformedPacking, "unpaired high surrogate");
            }
            const char32_t low = (static_cast<char32_t>(bytes[i + 2]) << 8) | bytes[i + 3];
            if (low < 0xDC00 || low > 0xDFFF) {
                throw MessageError(MessageErrorKind::MalformedPacking, "unpaired high surrogate");
            }
            text.push_back(0x10000 + ((unit - 0xD800) << 10) + (low - 0xDC00));
            i += 2;
        } else if (unit >= 0xDC00 && unit <= 0xDFFF) {
            throw MessageError(MessageErrorKind::MalformedPacking, "unpaired low surrogate");
        } else {
            text.push_back(unit);
        }
    }
    return utf8::encode(text);
}

}  // namespace sos::message
