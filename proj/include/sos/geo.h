#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sos/clock.h"

namespace sos::geo {

/// IUGG mean Earth radius.
inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr std::int64_t kDefaultMaxFixAgeMs = 120'000;
inline constexpr double kDefaultGeocodeRadiusKm = 10.0;

class GeoError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class LatLon {
public:
    /// Throws GeoError for non-finite or out-of-range values.
    LatLon(double lat, double lon);

    double lat() const { return lat_; }
    double lon() const { return lon_; }

    friend bool operator==(const LatLon&, const LatLon&) = default;

private:
    double lat_;
    double lon_;
};

struct GpsFix {
    LatLon point;
    TimestampMs fixed_at;
    std::optional<double> accuracy_m;
};

struct CellKey {
    int mcc = 0;
    int mnc = 0;
    int lac = 0;
    std::int64_t cid = 0;

    /// Throws GeoError when a field is outside its range.
    void validate() const;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct PlaceRecord {
    std::string place_id;
    std::string name;
    std::string admin;
    std::string country;
    LatLon point;

    friend bool operator==(const PlaceRecord&, const PlaceRecord&) = default;
};

/// "name, admin, country" with empty parts skipped.
std::string render_place(const PlaceRecord& place);

struct CellInfo {
    LatLon point;
    double range_m;
    std::string label;
};

enum class LocationSource { Gps, CellArea };

struct ExactLocation {
    LatLon point;
    std::optional<PlaceRecord> place;
};

struct ApproximateLocation {
    LatLon point;
    std::optional<PlaceRecord> place;
    double radius_m;
    std::string cell_label;
};

struct Unavailable {};

using ResolvedLocation = std::variant<ExactLocation, ApproximateLocation, Unavailable>;

enum class LocationKind { Exact, Approximate, Unavailable };
LocationKind kind_of(const ResolvedLocation& loc);
std::string_view to_string(LocationKind kind);

/// Great-circle distance on a sphere of radius kEarthRadiusKm.
double haversine_km(const LatLon& a, const LatLon& b);

class StaleFix : public std::runtime_error {
public:
    StaleFix(std::int64_t age_ms, std::int64_t max_age_ms);
    std::int64_t age_ms() const { return age_ms_; }

private:
    std::int64_t age_ms_;
};

/// Accepts fixes whose age is at most max_age_ms (inclusive). Fixes from the
/// future count as age 0.
const GpsFix& validate_fix(const GpsFix& fix, TimestampMs now, std::int64_t max_age_ms);

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::string reason);
    std::size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

/// Offline place table with a latitude-sorted index for nearest lookups.
class Gazetteer {
public:
    Gazetteer() = default;
    /// Throws GeoError on duplicate place_id.
    explicit Gazetteer(std::vector<PlaceRecord> records);

    const std::vector<PlaceRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    /// Nearest record within max_radius_km. Ties go to the smallest name,
    /// then the smallest place_id.
    std::optional<PlaceRecord> nearest(const LatLon& point, double max_radius_km) const;

private:
    std::vector<PlaceRecord> records_;
    std::vector<std::size_t> by_lat_;
};

std::optional<PlaceRecord> reverse_geocode(const LatLon& point, const Gazetteer& gazetteer,
                                           double max_radius_km = kDefaultGeocodeRadiusKm);

/// TSV: place_id, name, admin, country, lat, lon. Blank lines and '#' lines
/// are skipped.
Gazetteer parse_gazetteer(std::istream& in);
Gazetteer parse_gazetteer(std::string_view text);
Gazetteer load_gazetteer(const std::string& path);
void write_gazetteer(std::ostream& out, const Gazetteer& gazetteer);

class CellDb {
public:
    CellDb() = default;
    /// Throws GeoError on duplicate key.
    void insert(const CellKey& key, CellInfo info);

    std::optional<CellInfo> find(const CellKey& key) const;
    std::size_t size() const { return cells_.size(); }

private:
    std::map<CellKey, CellInfo> cells_;
};

std::optional<CellInfo> resolve_cell(const CellKey& cell, const CellDb& db);

/// CSV with header: mcc,mnc,lac,cid,lat,lon,range_m,label
CellDb parse_cell_db(std::istream& in);
CellDb parse_cell_db(std::string_view text);
CellDb load_cell_db(const std::string& path);

/// Fixed-point rendering rounded half away from zero at 6 decimals with
/// trailing zeros trimmed: 91.6 -> "91.6", 12.3456789 -> "12.345679".
std::string format_coord(double degrees);

}  // namespace sos::geo
