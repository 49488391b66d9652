#include "sos/geo.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace sos::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

bool is_skippable(std::string_view line) {
    const auto first = line.find_first_not_of(" \t");
    return first == std::string_view::npos || line[first] == '#';
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Rounds a plain decimal digit string "int.frac" half away from zero to
// `places` fractional digits.
std::string round_decimal(std::string_view digits, std::size_t places) {
    std::string int_part;
    std::string frac;
    if (const auto dot = digits.find('.'); dot == std::string_view::npos) {
        int_part = std::string(digits);
    } else {
        int_part = std::string(digits.substr(0, dot));
        frac = std::string(digits.substr(dot + 1));
    }
    bool round_up = frac.size() > places && frac[places] >= '5';
    if (frac.size() > places) frac.resize(places);
    std::string all = int_part + frac;
    if (round_up) {
        int i = static_cast<int>(all.size()) - 1;
        while (i >= 0) {
            if (all[i] == '9') {
                all[i] = '0';
                --i;
            } else {
                ++all[i];
                break;
            }
        }
        if (i < 0) all.insert(all.begin(), '1');
    }
    const std::size_t int_len = all.size() - frac.size();
    std::string out = all.substr(0, int_len);
    std::string f = all.substr(int_len);
    while (!f.empty() && f.back() == '0') f.pop_back();
    if (!f.empty()) out += "." + f;
    return out;
}

}  // namespace

LatLon::LatLon(double lat, double lon) : lat_(lat), lon_(lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon)) throw GeoError("coordinate is not finite");
    if (lat < -90.0 || lat > 90.0) throw GeoError("latitude out of range");
    if (lon < -180.0 || lon > 180.0) throw GeoError("longitude out of range");
}

void CellKey::validate() const {
    if (mcc < 0 || mcc > 999) throw GeoError("mcc out of range");
    if (mnc < 0 || mnc > 999) throw GeoError("mnc out of range");
    if (lac < 0 || lac > 65535) throw GeoError("lac out of range");
    if (cid < 0) throw GeoError("cid out of range");
}

std::string render_place(const PlaceRecord& place) {
    std::string out;
    for (const std::string* part : {&place.name, &place.admin, &place.country}) {
        if (part->empty()) continue;
        if (!out.empty()) out += ", ";
        out += *part;
    }
    return out;
}

LocationKind kind_of(const ResolvedLocation& loc) {
    if (std::holds_alternative<ExactLocation>(loc)) return LocationKind::Exact;
    if (std::holds_alternative<ApproximateLocation>(loc)) return LocationKind::Approximate;
    return LocationKind::Unavailable;
}

std::string_view to_string(LocationKind kind) {
    switch (kind) {
        case LocationKind::Exact: return "exact";
        case LocationKind::Approximate: return "approximate";
        case LocationKind::Unavailable: return "unavailable";
    }
    return "unavailable";
}

double haversine_km(const LatLon& a, const LatLon& b) {
    const double phi1 = a.lat() * kDegToRad;
    const double phi2 = b.lat() * kDegToRad;
    const double dphi = (b.lat() - a.lat()) * kDegToRad;
    const double dlambda = (b.lon() - a.lon()) * kDegToRad;
    const double s1 = std::sin(dphi / 2);
    const double s2 = std::sin(dlambda / 2);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

StaleFix::StaleFix(std::int64_t age_ms, std::int64_t max_age_ms)
    : std::runtime_error("stale GPS fix: age " + std::to_string(age_ms) + " ms exceeds " +
                         std::to_string(max_age_ms) + " ms"),
      age_ms_(age_ms) {}

const GpsFix& validate_fix(const GpsFix& fix, TimestampMs now, std::int64_t max_age_ms) {
    const std::int64_t age = std::max<std::int64_t>(0, now - fix.fixed_at);
    if (age > max_age_ms) throw StaleFix(age, max_age_ms);
    return fix;
}

ParseError::ParseError(std::size_t line, std::string reason)
    : std::runtime_error("line " + std::to_string(line) + ": " + reason),
      line_(line),
      reason_(std::move(reason)) {}

Gazetteer::Gazetteer(std::vector<PlaceRecord> records) : records_(std::move(records)) {
    std::set<std::string_view> ids;
    for (const auto& r : records_) {
        if (!ids.insert(r.place_id).second) throw GeoError("duplicate place_id " + r.place_id);
    }
    by_lat_.resize(records_.size());
    for (std::size_t i = 0; i < by_lat_.size(); ++i) by_lat_[i] = i;
    std::sort(by_lat_.begin(), by_lat_.end(), [this](std::size_t x, std::size_t y) {
        return records_[x].point.lat() < records_[y].point.lat();
    });
}

std::optional<PlaceRecord> Gazetteer::nearest(const LatLon& point, double max_radius_km) const {
    if (records_.empty() || !(max_radius_km >= 0)) return std::nullopt;

    // Great-circle distance is at least R * |dlat|, so only the latitude band
    // within the radius (plus a rounding margin) can hold a match.
    const double band_deg = max_radius_km / (kEarthRadiusKm * kDegToRad) * (1 + 1e-9) + 1e-6;
    const double lo = point.lat() - band_deg;
    const double hi = point.lat() + band_deg;
    auto first = std::lower_bound(by_lat_.begin(), by_lat_.end(), lo,
                                  [this](std::size_t i, double v) { return records_[i].point.lat() < v; });

    const PlaceRecord* best = nullptr;
    double best_km = 0;
    for (auto it = first; it != by_lat_.end(); ++it) {
        const PlaceRecord& rec = records_[*it];
        if (rec.point.lat() > hi) break;
        const double d = haversine_km(point, rec.point);
        if (d > max_radius_km) continue;
        if (best == nullptr || d < best_km ||
            (d == best_km && std::tie(rec.name, rec.place_id) < std::tie(best->name, best->place_id))) {
            best = &rec;
            best_km = d;
        }
    }
    if (best == nullptr) return std::nullopt;
    return *best;
}

std::optional<PlaceRecord> reverse_geocode(const LatLon& point, const Gazetteer& gazetteer,
                                           double max_radius_km) {
    return gazetteer.nearest(point, max_radius_km);
}

Gazetteer parse_gazetteer(std::istream& in) {
    std::vector<PlaceRecord> records;
    std::set<std::string> ids;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = strip_cr(raw);
        if (is_skippable(line)) continue;
        const auto f = split(line, '\t');
        if (f.size() != 6) {
            throw ParseError(line_no, "expected 6 tab-separated fields, got " + std::to_string(f.size()));
        }
        if (f[0].empty()) throw ParseError(line_no, "empty place_id");
        if (f[1].empty()) throw ParseError(line_no, "empty name");
        const auto lat = parse_double(f[4]);
        if (!lat) throw ParseError(line_no, "non-numeric lat");
        const auto lon = parse_double(f[5]);
        if (!lon) throw ParseError(line_no, "non-numeric lon");
        if (*lat < -90 || *lat > 90) throw ParseError(line_no, "lat out of range");
        if (*lon < -180 || *lon > 180) throw ParseError(line_no, "lon out of range");
        if (!ids.emplace(f[0]).second) throw ParseError(line_no, "duplicate place_id " + std::string(f[0]));
        records.push_back(PlaceRecord{std::string(f[0]), std::string(f[1]), std::string(f[2]),
                                      std::string(f[3]), LatLon(*lat, *lon)});
    }
    return Gazetteer(std::move(records));
}

Gazetteer parse_gazetteer(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_gazetteer(in);
}

Gazetteer load_gazetteer(const std::string& path) { return parse_gazetteer(slurp(path)); }

void write_gazetteer(std::ostream& out, const Gazetteer& gazetteer) {
    char buf[64];
    auto num = [&buf](double v) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, p);
    };
    for (const auto& r : gazetteer.records()) {
        out << r.place_id << '\t' << r.name << '\t' << r.admin << '\t' << r.country << '\t'
            << num(r.point.lat()) << '\t' << num(r.point.lon()) << '\n';
    }
}

void CellDb::insert(const CellKey& key, CellInfo info) {
    key.validate();
    if (!cells_.emplace(key, std::move(info)).second) throw GeoError("duplicate cell key");
}

std::optional<CellInfo> CellDb::find(const CellKey& key) const {
    const auto it = cells_.find(key);
    if (it == cells_.end()) return std::nullopt;
    return it->second;
}

std::optional<CellInfo> resolve_cell(const CellKey& cell, const CellDb& db) { return db.find(cell); }

CellDb parse_cell_db(std::istream& in) {
    static constexpr std::string_view kHeader = "mcc,mnc,lac,cid,lat,lon,range_m,label";
    CellDb db;
    std::string raw;
    std::size_t line_no = 0;
    bool seen_header = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = strip_cr(raw);
        if (is_skippable(line)) continue;
        if (!seen_header) {
            if (line != kHeader) throw ParseError(line_no, "missing header row");
            seen_header = true;
            continue;
        }
        // The label is the remainder after the seventh comma.
        std::vector<std::string_view> f;
        std::size_t start = 0;
        for (int i = 0; i < 7; ++i) {
            const auto pos = line.find(',', start);
            if (pos == std::string_view::npos) throw ParseError(line_no, "expected 8 comma-separated fields");
            f.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        std::string_view label = line.substr(start);
        if (label.size() >= 2 && label.front() == '"' && label.back() == '"') {
            label = label.substr(1, label.size() - 2);
        }
        const auto mcc = parse_int(f[0]);
        const auto mnc = parse_int(f[1]);
        const auto lac = parse_int(f[2]);
        const auto cid = parse_int(f[3]);
        if (!mcc || !mnc || !lac || !cid) throw ParseError(line_no, "non-numeric cell key");
        const auto lat = parse_double(f[4]);
        const auto lon = parse_double(f[5]);
        if (!lat || !lon) throw ParseError(line_no, "non-numeric coordinate");
        const auto range = parse_double(f[6]);
        if (!range || *range < 0) throw ParseError(line_no, "bad range_m");
        try {
            CellKey key{static_cast<int>(*mcc), static_cast<int>(*mnc), static_cast<int>(*lac), *cid};
            if (*mcc > 999 || *mnc > 999 || *lac > 65535) throw GeoError("cell key out of range");
            db.insert(key, CellInfo{LatLon(*lat, *lon), *range, std::string(label)});
        } catch (const GeoError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    if (!seen_header) throw ParseError(line_no == 0 ? 1 : line_no, "missing header row");
    return db;
}

CellDb parse_cell_db(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_cell_db(in);
}

CellDb load_cell_db(const std::string& path) { return parse_cell_db(slurp(path)); }

std::string format_coord(double degrees) {
    if (!std::isfinite(degrees)) throw GeoError("coordinate is not finite");
    char buf[512];
    // Shortest round-trip fixed-notation digits, then decimal rounding.
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, std::fabs(degrees), std::chars_format::fixed);
    std::string out = round_decimal(std::string_view(buf, static_cast<std::size_t>(p - buf)), 6);
    if (std::signbit(degrees) && out != "0") out.insert(out.begin(), '-');
    return out;
}

}  // namespace sos::geo
