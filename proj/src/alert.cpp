#include "sos/alert.h"

#include <algorithm>

namespace sos::core {

std::string_view to_string(AlertState s) {
    switch (s) {
        case AlertState::Triggered: return "Triggered";
        case AlertState::Locating: return "Locating";
        case AlertState::Composing: return "Composing";
        case AlertState::Dispatching: return "Dispatching";
        case AlertState::Delivered: return "Delivered";
        case AlertState::PartiallyDelivered: return "PartiallyDelivered";
        case AlertState::Failed: return "Failed";
    }
    return "Failed";
}

std::string_view to_string(AlertEvent e) {
    switch (e) {
        case AlertEvent::LocationResolved: return "LocationResolved";
        case AlertEvent::LocationUnavailable: return "LocationUnavailable";
        case AlertEvent::MessageComposed: return "MessageComposed";
        case AlertEvent::DispatchAllOk: return "DispatchAllOk";
        case AlertEvent::DispatchPartial: return "DispatchPartial";
        case AlertEvent::DispatchAllFailed: return "DispatchAllFailed";
    }
    return "DispatchAllFailed";
}

AlertState alert_state_from_string(std::string_view s) {
    for (auto st : kAllStates) {
        if (to_string(st) == s) return st;
    }
    throw std::invalid_argument("unknown alert state '" + std::string(s) + "'");
}

bool is_terminal(AlertState s) {
    return s == AlertState::Delivered || s == AlertState::PartiallyDelivered || s == AlertState::Failed;
}

IllegalTransition::IllegalTransition(AlertState state, AlertEvent event)
    : std::logic_error("illegal transition: " + std::string(to_string(state)) + " + " +
                       std::string(to_string(event))),
      state_(state),
      event_(event) {}

AlertState transition(AlertState state, AlertEvent event) {
    switch (state) {
        case AlertState::Triggered:
            if (event == AlertEvent::LocationResolved || event == AlertEvent::LocationUnavailable) {
                return AlertState::Composing;
            }
            break;
        case AlertState::Composing:
            if (event == AlertEvent::MessageComposed) return AlertState::Dispatching;
            break;
        case AlertState::Dispatching:
            if (event == AlertEvent::DispatchAllOk) return AlertState::Delivered;
            if (event == AlertEvent::DispatchPartial) return AlertState::PartiallyDelivered;
            if (event == AlertEvent::DispatchAllFailed) return AlertState::Failed;
            break;
        default:
            break;
    }
    throw IllegalTransition(state, event);
}

bool is_legal_history_step(AlertState from, AlertState to) {
    if (from == AlertState::Triggered && to == AlertState::Locating) return true;
    if (from == AlertState::Locating && to == AlertState::Composing) return true;
    if (from == AlertState::Composing && to == AlertState::Failed) return true;
    for (auto ev : kAllEvents) {
        try {
            if (transition(from, ev) == to) return true;
        } catch (const IllegalTransition&) {
        }
    }
    return false;
}

AlertError::AlertError(AlertErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(kind == AlertErrorKind::InvalidTrigger ? "InvalidTrigger" : "AlreadyAcknowledged") +
                         ": " + detail),
      kind_(kind) {}

void validate_trigger(const TriggerRequest& t) {
    if (t.trigger_id.empty()) throw AlertError(AlertErrorKind::InvalidTrigger, "empty trigger_id");
    if (t.trigger_id.size() > kMaxTriggerIdLength) {
        throw AlertError(AlertErrorKind::InvalidTrigger, "trigger_id longer than 64 characters");
    }
    if (t.device_id.empty()) throw AlertError(AlertErrorKind::InvalidTrigger, "empty device_id");
    if (t.triggered_at <= 0) throw AlertError(AlertErrorKind::InvalidTrigger, "triggered_at must be positive");
    if (t.fix && t.fix->fixed_at <= 0) throw AlertError(AlertErrorKind::InvalidTrigger, "fixed_at must be positive");
    if (t.fix && t.fix->accuracy_m && !(*t.fix->accuracy_m >= 0)) {
        throw AlertError(AlertErrorKind::InvalidTrigger, "accuracy_m must be non-negative");
    }
    if (t.cell) {
        try {
            t.cell->validate();
        } catch (const geo::GeoError& e) {
            throw AlertError(AlertErrorKind::InvalidTrigger, e.what());
        }
    }
}

Alert create_alert(TriggerRequest trigger, std::string alert_id, TimestampMs now) {
    validate_trigger(trigger);
    Alert a;
    a.alert_id = std::move(alert_id);
    a.trigger = std::move(trigger);
    a.state = AlertState::Triggered;
    a.state_history.push_back({AlertState::Triggered, now});
    return a;
}

namespace {

void record(Alert& alert, AlertState next, TimestampMs now) {
    // Timestamps never run backwards within one history.
    if (!alert.state_history.empty()) now = std::max(now, alert.state_history.back().at);
    alert.state = next;
    alert.state_history.push_back({next, now});
}

}  // namespace

void begin_locating(Alert& alert, TimestampMs now) {
    if (alert.state != AlertState::Triggered) throw IllegalTransition(alert.state, AlertEvent::LocationResolved);
    record(alert, AlertState::Locating, now);
}

void apply_event(Alert& alert, AlertEvent event, TimestampMs now) {
    const AlertState from = alert.state == AlertState::Locating ? AlertState::Triggered : alert.state;
    const AlertState next = transition(from, event);
    if (alert.state == AlertState::Triggered) record(alert, AlertState::Locating, now);
    record(alert, next, now);
}

void abort_alert(Alert& alert, std::string reason, TimestampMs now) {
    if (alert.state != AlertState::Composing) throw IllegalTransition(alert.state, AlertEvent::DispatchAllFailed);
    alert.failure_reason = std::move(reason);
    record(alert, AlertState::Failed, now);
}

Alert acknowledge(Alert alert, std::string_view responder_id, TimestampMs now) {
    if (alert.acknowledged_by) {
        throw AlertError(AlertErrorKind::AlreadyAcknowledged, "alert " + alert.alert_id + " acknowledged by " +
                                                                  alert.acknowledged_by->responder_id);
    }
    alert.acknowledged_by = Acknowledgment{std::string(responder_id), now};
    return alert;
}

bool history_is_legal(const std::vector<StateEntry>& history) {
    if (history.empty() || history.front().state != AlertState::Triggered) return false;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (!is_legal_history_step(history[i - 1].state, history[i].state)) return false;
        if (history[i].at < history[i - 1].at) return false;
    }
    return true;
}

}  // namespace sos::core
