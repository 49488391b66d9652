#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sos/clock.h"

namespace sos::registry {

inline constexpr std::size_t kMaxContacts = 20;
inline constexpr std::size_t kMaxCustomMessageChars = 200;
inline constexpr std::string_view kDefaultCustomMessage = "EMERGENCY! I need help.";
inline constexpr int kSnapshotVersion = 1;

enum class RegistryErrorKind {
    MissingPlus,
    BadLength,
    BadCharacter,
    BadDeviceId,
    UnknownDevice,
    DuplicateContact,
    ContactLimitReached,
    UnknownContact,
    EmptyMessage,
    MessageTooLong,
    IoError,
    CorruptSnapshot,
};

std::string_view to_string(RegistryErrorKind kind);

class RegistryError : public std::runtime_error {
public:
    RegistryError(RegistryErrorKind kind, const std::string& detail);
    RegistryErrorKind kind() const { return kind_; }

private:
    RegistryErrorKind kind_;
};

/// E.164 number in canonical "+<8..15 digits>" form.
class Msisdn {
public:
    /// Strips spaces, hyphens and parentheses, then validates.
    static Msisdn parse(std::string_view raw);

    const std::string& str() const { return normalized_; }

    friend auto operator<=>(const Msisdn&, const Msisdn&) = default;

private:
    explicit Msisdn(std::string normalized) : normalized_(std::move(normalized)) {}
    std::string normalized_;
};

inline Msisdn validate_msisdn(std::string_view raw) { return Msisdn::parse(raw); }

struct Contact {
    Msisdn msisdn;
    std::string label;
    TimestampMs added_at = 0;

    friend bool operator==(const Contact&, const Contact&) = default;
};

struct DeviceProfile {
    std::string device_id;
    std::vector<Contact> contacts;
    std::string custom_message{kDefaultCustomMessage};
    TimestampMs created_at = 0;

    friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

bool is_valid_device_id(std::string_view id);

/// Device and contact store. Mutations are serialized; readers get copies.
class Registry {
public:
    Registry() = default;
    /// Throws RegistryError{CorruptSnapshot} if the profiles break an
    /// invariant.
    explicit Registry(std::vector<DeviceProfile> devices);
    Registry(Registry&& other) noexcept;
    Registry& operator=(Registry&& other) noexcept;
    Registry(const Registry&) = delete;
    Registry& operator=(const Registry&) = delete;

    /// Idempotent: an existing id returns the stored profile unchanged.
    DeviceProfile register_device(std::string_view device_id, TimestampMs now);
    Contact add_contact(std::string_view device_id, std::string_view raw_number, std::string_view label,
                        TimestampMs now);
    Contact remove_contact(std::string_view device_id, std::string_view msisdn);
    /// Stores the text with surrounding whitespace trimmed.
    void set_custom_message(std::string_view device_id, std::string_view text);

    std::optional<DeviceProfile> find(std::string_view device_id) const;
    /// All profiles ordered by device_id.
    std::vector<DeviceProfile> devices() const;
    std::size_t size() const;

    friend bool operator==(const Registry& a, const Registry& b) { return a.devices() == b.devices(); }

private:
    DeviceProfile& require(std::string_view device_id);

    mutable std::shared_mutex mu_;
    std::map<std::string, DeviceProfile, std::less<>> devices_;
};

std::string to_json(const Registry& store);
/// Ignores unknown fields. Throws RegistryError{CorruptSnapshot}.
Registry from_json(std::string_view text);

/// Write-to-temp then rename, so readers see either the old or the new file.
void save_snapshot(const Registry& store, const std::string& path);
Registry load_snapshot(const std::string& path);

}  // namespace sos::registry
