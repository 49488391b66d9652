#pragma once

#include <optional>
#include <string>

#include "sos/geo.h"

namespace sos::geo {

struct LocationConfig {
    std::int64_t max_fix_age_ms = kDefaultMaxFixAgeMs;
    double geocode_radius_km = kDefaultGeocodeRadiusKm;
};

/// Turns a trigger's raw position inputs into a ResolvedLocation: a fresh GPS
/// fix wins, then a known serving cell, else Unavailable. A stale fix counts
/// as no fix.
class LocationResolver {
public:
    LocationResolver(const Gazetteer& gazetteer, const CellDb& cells, LocationConfig config = {})
        : gazetteer_(gazetteer), cells_(cells), config_(config) {}

    ResolvedLocation resolve(const std::optional<GpsFix>& fix, const std::optional<CellKey>& cell,
                             TimestampMs now) const;

    /// Human-readable place: the gazetteer match, else the cell label for
    /// an approximate location.
    static std::optional<std::string> place_string(const ResolvedLocation& loc);

    const LocationConfig& config() const { return config_; }

private:
    const Gazetteer& gazetteer_;
    const CellDb& cells_;
    LocationConfig config_;
};

}  // namespace sos::geo
