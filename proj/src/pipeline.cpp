#include "sos/pipeline.h"

namespace sos::core {

Pipeline::Pipeline(const geo::LocationResolver& locator, transport::SmsBackend& backend, Clock& clock,
                   PipelineOptions options)
    : locator_(locator), backend_(backend), clock_(clock), options_(std::move(options)), rng_(options_.concat_seed) {
    options_.retry.validate();
}

message::EncodedSms Pipeline::encode(const std::string& text) {
    std::lock_guard lock(rng_mu_);
    return message::segment_message(text, rng_);
}

Alert Pipeline::run(Alert alert, const registry::DeviceProfile& profile, const StateObserver& observer) {
    if (alert.state != AlertState::Triggered) {
        throw std::logic_error("pipeline needs a Triggered alert, got " + std::string(to_string(alert.state)));
    }
    auto notify = [&] {
        if (observer) observer(alert);
    };

    begin_locating(alert, clock_.now_ms());
    notify();

    const auto location = locator_.resolve(alert.trigger.fix, alert.trigger.cell, clock_.now_ms());
    alert.location = location;
    apply_event(alert,
                std::holds_alternative<geo::Unavailable>(location) ? AlertEvent::LocationUnavailable
                                                                   : AlertEvent::LocationResolved,
                clock_.now_ms());
    notify();

    message::EncodedSms encoded;
    try {
        alert.message = message::compose(profile.custom_message, location, geo::LocationResolver::place_string(location));
        encoded = encode(alert.message->text);
    } catch (const message::MessageError& e) {
        abort_alert(alert, std::string(message::to_string(e.kind())), clock_.now_ms());
        notify();
        return alert;
    }

    if (profile.contacts.empty()) {
        abort_alert(alert, std::string(kReasonNoContacts), clock_.now_ms());
        notify();
        return alert;
    }

    apply_event(alert, AlertEvent::MessageComposed, clock_.now_ms());
    std::vector<registry::Msisdn> numbers;
    numbers.reserve(profile.contacts.size());
    for (const auto& c : profile.contacts) {
        numbers.push_back(c.msisdn);
        alert.deliveries.push_back(transport::DeliveryRecord{c.msisdn, {}, transport::DeliveryStatus::Pending});
    }
    notify();

    transport::FanoutOptions fanout{options_.retry, options_.max_in_flight, alert.alert_id};
    alert.deliveries = transport::dispatch_fanout(numbers, encoded, backend_, clock_, fanout);

    std::size_t ok = 0;
    for (const auto& d : alert.deliveries) ok += d.final_status == transport::DeliveryStatus::Succeeded ? 1 : 0;
    const AlertEvent outcome = ok == alert.deliveries.size() ? AlertEvent::DispatchAllOk
                               : ok == 0                     ? AlertEvent::DispatchAllFailed
                                                             : AlertEvent::DispatchPartial;
    apply_event(alert, outcome, clock_.now_ms());
    notify();
    return alert;
}

}  // namespace sos::core
