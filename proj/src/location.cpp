#include "sos/location.h"

namespace sos::geo {

ResolvedLocation LocationResolver::resolve(const std::optional<GpsFix>& fix, const std::optional<CellKey>& cell,
                                           TimestampMs now) const {
    if (fix) {
        try {
            validate_fix(*fix, now, config_.max_fix_age_ms);
            return ExactLocation{fix->point, reverse_geocode(fix->point, gazetteer_, config_.geocode_radius_km)};
        } catch (const StaleFix&) {
        }
    }
    if (cell) {
        if (const auto info = resolve_cell(*cell, cells_)) {
            return ApproximateLocation{info->point, reverse_geocode(info->point, gazetteer_, config_.geocode_radius_km),
                                       info->range_m, info->label};
        }
    }
    return Unavailable{};
}

std::optional<std::string> LocationResolver::place_string(const ResolvedLocation& loc) {
    if (const auto* exact = std::get_if<ExactLocation>(&loc)) {
        if (exact->place) return render_place(*exact->place);
    } else if (const auto* approx = std::get_if<ApproximateLocation>(&loc)) {
        if (approx->place) return render_place(*approx->place);
        if (!approx->cell_label.empty()) return approx->cell_label;
    }
    return std::nullopt;
}

}  // namespace sos::geo
