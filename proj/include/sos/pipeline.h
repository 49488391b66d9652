#pragma once

#include <cstdint>
#include <functional>
#include <mutex>

#include "sos/alert.h"
#include "sos/clock.h"
#include "sos/location.h"
#include "sos/message.h"
#include "sos/registry.h"
#include "sos/transport.h"

namespace sos::core {

inline constexpr std::string_view kReasonNoContacts = "NoContactsRegistered";

/// Called after every state change with the updated alert.
using StateObserver = std::function<void(const Alert&)>;

struct PipelineOptions {
    transport::RetryPolicy retry;
    std::size_t max_in_flight = 8;
    std::uint64_t concat_seed = 0x5052;
};

/// Trigger -> locate -> compose -> dispatch. One run owns its alert until the
/// alert is terminal; distinct alerts may run concurrently.
class Pipeline {
public:
    Pipeline(const geo::LocationResolver& locator, transport::SmsBackend& backend, Clock& clock,
             PipelineOptions options = {});

    /// `profile` is the device's registry view at trigger time. Zero contacts
    /// end the alert in Failed with reason NoContactsRegistered.
    Alert run(Alert alert, const registry::DeviceProfile& profile, const StateObserver& observer = {});

private:
    message::EncodedSms encode(const std::string& text);

    const geo::LocationResolver& locator_;
    transport::SmsBackend& backend_;
    Clock& clock_;
    PipelineOptions options_;
    std::mutex rng_mu_;
    message::ConcatRng rng_;
};

}  // namespace sos::core
