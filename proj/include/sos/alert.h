#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sos/clock.h"
#include "sos/geo.h"
#include "sos/message.h"
#include "sos/transport.h"

namespace sos::core {

inline constexpr std::size_t kMaxTriggerIdLength = 64;

enum class AlertState { Triggered, Locating, Composing, Dispatching, Delivered, PartiallyDelivered, Failed };

inline constexpr AlertState kAllStates[] = {AlertState::Triggered,   AlertState::Locating,
                                            AlertState::Composing,   AlertState::Dispatching,
                                            AlertState::Delivered,   AlertState::PartiallyDelivered,
                                            AlertState::Failed};

enum class AlertEvent {
    LocationResolved,
    LocationUnavailable,
    MessageComposed,
    DispatchAllOk,
    DispatchPartial,
    DispatchAllFailed,
};

inline constexpr AlertEvent kAllEvents[] = {AlertEvent::LocationResolved, AlertEvent::LocationUnavailable,
                                            AlertEvent::MessageComposed,  AlertEvent::DispatchAllOk,
                                            AlertEvent::DispatchPartial,  AlertEvent::DispatchAllFailed};

std::string_view to_string(AlertState s);
std::string_view to_string(AlertEvent e);
/// Throws std::invalid_argument for an unknown name.
AlertState alert_state_from_string(std::string_view s);

bool is_terminal(AlertState s);

class IllegalTransition : public std::logic_error {
public:
    IllegalTransition(AlertState state, AlertEvent event);
    AlertState state() const { return state_; }
    AlertEvent event() const { return event_; }

private:
    AlertState state_;
    AlertEvent event_;
};

/// The legality table:
///   Triggered   + LocationResolved | LocationUnavailable -> Composing
///   Composing   + MessageComposed                        -> Dispatching
///   Dispatching + DispatchAllOk                          -> Delivered
///   Dispatching + DispatchPartial                        -> PartiallyDelivered
///   Dispatching + DispatchAllFailed                      -> Failed
/// Every other pair throws IllegalTransition.
AlertState transition(AlertState state, AlertEvent event);

/// Whether `to` may directly follow `from` in a stored history. Adds the
/// synchronous Triggered -> Locating -> Composing hop and the
/// Composing -> Failed abort (no contacts, unsendable message) to the table.
bool is_legal_history_step(AlertState from, AlertState to);

struct TriggerRequest {
    std::string trigger_id;
    std::string device_id;
    std::optional<geo::GpsFix> fix;
    std::optional<geo::CellKey> cell;
    TimestampMs triggered_at = 0;
};

struct StateEntry {
    AlertState state;
    TimestampMs at;

    friend bool operator==(const StateEntry&, const StateEntry&) = default;
};

struct Acknowledgment {
    std::string responder_id;
    TimestampMs at;
};

struct Alert {
    std::string alert_id;
    TriggerRequest trigger;
    AlertState state = AlertState::Triggered;
    std::optional<geo::ResolvedLocation> location;
    std::optional<message::MessageText> message;
    std::vector<transport::DeliveryRecord> deliveries;
    std::optional<Acknowledgment> acknowledged_by;
    std::vector<StateEntry> state_history;
    /// Set when the pipeline aborts before dispatch.
    std::optional<std::string> failure_reason;
};

enum class AlertErrorKind { InvalidTrigger, AlreadyAcknowledged };

class AlertError : public std::runtime_error {
public:
    AlertError(AlertErrorKind kind, const std::string& detail);
    AlertErrorKind kind() const { return kind_; }

private:
    AlertErrorKind kind_;
};

/// Throws AlertError{InvalidTrigger}.
void validate_trigger(const TriggerRequest& trigger);

Alert create_alert(TriggerRequest trigger, std::string alert_id, TimestampMs now);

/// Applies an event. A location event arriving in Triggered records the
/// Locating hop before Composing; one arriving in Locating is looked up as
/// if from Triggered.
void apply_event(Alert& alert, AlertEvent event, TimestampMs now);

/// Enters Locating from Triggered.
void begin_locating(Alert& alert, TimestampMs now);

/// Composing -> Failed with a reason; the only non-table edge.
void abort_alert(Alert& alert, std::string reason, TimestampMs now);

/// Acknowledgment is metadata and leaves the state untouched.
Alert acknowledge(Alert alert, std::string_view responder_id, TimestampMs now);

/// True when the history starts with Triggered and every step is legal.
bool history_is_legal(const std::vector<StateEntry>& history);

}  // namespace sos::core
