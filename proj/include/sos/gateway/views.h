#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "sos/alert.h"
#include "sos/registry.h"

namespace sos::gateway {

/// Length of the E.164 country code at the start of `digits` (1..3).
std::size_t country_code_length(std::string_view digits);

/// "+<cc>•••••••<last 4>". Fixed width, so the mask also hides the length.
std::string mask_msisdn(const registry::Msisdn& msisdn);

nlohmann::json location_view(const geo::ResolvedLocation& loc);
/// Public alert view: numbers masked, coordinates as format_coord strings.
nlohmann::json alert_view(const core::Alert& alert);
nlohmann::json profile_view(const registry::DeviceProfile& profile);

std::size_t delivered_count(const core::Alert& alert);

}  // namespace sos::gateway
