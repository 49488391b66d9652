#include "sos/gateway/views.h"

#include <algorithm>
#include <array>

#include "sos/location.h"

namespace sos::gateway {

using nlohmann::json;

namespace {

constexpr std::array<int, 44> kTwoDigitCodes = {20, 27, 30, 31, 32, 33, 34, 36, 39, 40, 41, 43, 44, 45, 46,
                                                47, 48, 49, 51, 52, 53, 54, 55, 56, 57, 58, 60, 61, 62, 63,
                                                64, 65, 66, 81, 82, 84, 86, 90, 91, 92, 93, 94, 95, 98};

constexpr std::string_view kMask = "•••••••";

}  // namespace

std::size_t country_code_length(std::string_view digits) {
    if (digits.empty()) return 0;
    if (digits[0] == '1' || digits[0] == '7') return 1;
    if (digits.size() >= 2) {
        const int two = (digits[0] - '0') * 10 + (digits[1] - '0');
        if (std::find(kTwoDigitCodes.begin(), kTwoDigitCodes.end(), two) != kTwoDigitCodes.end()) return 2;
    }
    return std::min<std::size_t>(3, digits.size());
}

std::string mask_msisdn(const registry::Msisdn& msisdn) {
    const std::string_view digits = std::string_view(msisdn.str()).substr(1);
    const auto cc = country_code_length(digits);
    return "+" + std::string(digits.substr(0, cc)) + std::string(kMask) + std::string(digits.substr(digits.size() - 4));
}

json location_view(const geo::ResolvedLocation& loc) {
    json out = {{"kind", geo::to_string(geo::kind_of(loc))}};
    auto point = [&](const geo::LatLon& p) {
        out["lat"] = geo::format_coord(p.lat());
        out["lon"] = geo::format_coord(p.lon());
    };
    if (const auto* e = std::get_if<geo::ExactLocation>(&loc)) {
        point(e->point);
    } else if (const auto* a = std::get_if<geo::ApproximateLocation>(&loc)) {
        point(a->point);
        out["radius_m"] = a->radius_m;
        out["cell_label"] = a->cell_label;
    }
    const auto place = geo::LocationResolver::place_string(loc);
    out["place"] = place ? json(*place) : json(nullptr);
    return out;
}

std::size_t delivered_count(const core::Alert& alert) {
    return static_cast<std::size_t>(std::count_if(alert.deliveries.begin(), alert.deliveries.end(), [](const auto& d) {
        return d.final_status == transport::DeliveryStatus::Succeeded;
    }));
}

json alert_view(const core::Alert& a) {
    json deliveries = json::array();
    for (const auto& d : a.deliveries) {
        json rec = {{"to", mask_msisdn(d.msisdn)},
                    {"status", transport::to_string(d.final_status)},
                    {"attempts", d.attempts.size()}};
        if (!d.attempts.empty()) {
            const auto& last = d.attempts.back();
            rec["last_outcome"] = transport::to_string(last.outcome.kind);
            if (!last.outcome.reason.empty()) rec["last_reason"] = last.outcome.reason;
        }
        deliveries.push_back(std::move(rec));
    }
    json history = json::array();
    for (const auto& h : a.state_history) history.push_back({{"state", core::to_string(h.state)}, {"at", h.at}});

    json out = {
        {"alert_id", a.alert_id},
        {"device_id", a.trigger.device_id},
        {"trigger_id", a.trigger.trigger_id},
        {"triggered_at", a.trigger.triggered_at},
        {"state", core::to_string(a.state)},
        {"terminal", core::is_terminal(a.state)},
        {"location", a.location ? location_view(*a.location) : json(nullptr)},
        {"message", a.message ? json(a.message->text) : json(nullptr)},
        {"deliveries", std::move(deliveries)},
        {"delivered_count", delivered_count(a)},
        {"state_history", std::move(history)},
        {"failure_reason", a.failure_reason ? json(*a.failure_reason) : json(nullptr)},
        {"acknowledged_by", nullptr},
    };
    if (a.acknowledged_by) {
        out["acknowledged_by"] = {{"responder_id", a.acknowledged_by->responder_id}, {"at", a.acknowledged_by->at}};
    }
    return out;
}

json profile_view(const registry::DeviceProfile& p) {
    json contacts = json::array();
    for (const auto& c : p.contacts) {
        contacts.push_back({{"number", mask_msisdn(c.msisdn)}, {"label", c.label}, {"added_at", c.added_at}});
    }
    return {{"device_id", p.device_id},
            {"custom_message", p.custom_message},
            {"created_at", p.created_at},
            {"contacts", std::move(contacts)}};
}

}  // namespace sos::gateway
