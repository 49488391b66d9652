#include "sos/registry.h"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "sos/utf8.h"

namespace sos::registry {

using json = nlohmann::json;

std::string_view to_string(RegistryErrorKind kind) {
    switch (kind) {
        case RegistryErrorKind::MissingPlus: return "MissingPlus";
        case RegistryErrorKind::BadLength: return "BadLength";
        case RegistryErrorKind::BadCharacter: return "BadCharacter";
        case RegistryErrorKind::BadDeviceId: return "BadDeviceId";
        case RegistryErrorKind::UnknownDevice: return "UnknownDevice";
        case RegistryErrorKind::DuplicateContact: return "DuplicateContact";
        case RegistryErrorKind::ContactLimitReached: return "ContactLimitReached";
        case RegistryErrorKind::UnknownContact: return "UnknownContact";
        case RegistryErrorKind::EmptyMessage: return "EmptyMessage";
        case RegistryErrorKind::MessageTooLong: return "MessageTooLong";
        case RegistryErrorKind::IoError: return "IoError";
        case RegistryErrorKind::CorruptSnapshot: return "CorruptSnapshot";
    }
    return "RegistryError";
}

RegistryError::RegistryError(RegistryErrorKind kind, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

Msisdn Msisdn::parse(std::string_view raw) {
    std::string s;
    for (char c : raw) {
        if (c == ' ' || c == '-' || c == '(' || c == ')') continue;
        s.push_back(c);
    }
    if (s.empty() || s.front() != '+') throw RegistryError(RegistryErrorKind::MissingPlus, std::string(raw));
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw RegistryError(RegistryErrorKind::BadCharacter, std::string(raw));
    }
    const std::size_t digits = s.size() - 1;
    if (digits < 8 || digits > 15) {
        throw RegistryError(RegistryErrorKind::BadLength,
                            std::string(raw) + " has " + std::to_string(digits) + " digits");
    }
    return Msisdn(std::move(s));
}

bool is_valid_device_id(std::string_view id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-';
        if (!ok) return false;
    }
    return true;
}

namespace {

void check_profile(const DeviceProfile& p) {
    auto corrupt = [&p](const std::string& why) {
        throw RegistryError(RegistryErrorKind::CorruptSnapshot, "device '" + p.device_id + "': " + why);
    };
    if (!is_valid_device_id(p.device_id)) corrupt("bad device_id");
    if (p.contacts.size() > kMaxContacts) corrupt("too many contacts");
    std::set<std::string> seen;
    for (const auto& c : p.contacts) {
        if (!seen.insert(c.msisdn.str()).second) corrupt("duplicate contact " + c.msisdn.str());
    }
    std::size_t len = 0;
    try {
        len = utf8::length(p.custom_message);
    } catch (const utf8::Utf8Error& e) {
        corrupt(e.what());
    }
    if (len == 0 || len > kMaxCustomMessageChars) corrupt("bad custom_message length");
}

}  // namespace

Registry::Registry(std::vector<DeviceProfile> devices) {
    for (auto& d : devices) {
        check_profile(d);
        const std::string id = d.device_id;
        if (!devices_.emplace(id, std::move(d)).second) {
            throw RegistryError(RegistryErrorKind::CorruptSnapshot, "duplicate device_id " + id);
        }
    }
}

Registry::Registry(Registry&& other) noexcept {
    std::unique_lock lock(other.mu_);
    devices_ = std::move(other.devices_);
}

Registry& Registry::operator=(Registry&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mu_, other.mu_);
        devices_ = std::move(other.devices_);
    }
    return *this;
}

DeviceProfile& Registry::require(std::string_view device_id) {
    const auto it = devices_.find(device_id);
    if (it == devices_.end()) throw RegistryError(RegistryErrorKind::UnknownDevice, std::string(device_id));
    return it->second;
}

DeviceProfile Registry::register_device(std::string_view device_id, TimestampMs now) {
    if (!is_valid_device_id(device_id)) {
        throw RegistryError(RegistryErrorKind::BadDeviceId, "'" + std::string(device_id) + "'");
    }
    std::unique_lock lock(mu_);
    if (const auto it = devices_.find(device_id); it != devices_.end()) return it->second;
    DeviceProfile p;
    p.device_id = std::string(device_id);
    p.created_at = now;
    devices_.emplace(p.device_id, p);
    return p;
}

Contact Registry::add_contact(std::string_view device_id, std::string_view raw_number, std::string_view label,
                              TimestampMs now) {
    std::unique_lock lock(mu_);
    DeviceProfile& p = require(device_id);
    Contact c{Msisdn::parse(raw_number), std::string(label), now};
    for (const auto& existing : p.contacts) {
        if (existing.msisdn == c.msisdn) throw RegistryError(RegistryErrorKind::DuplicateContact, c.msisdn.str());
    }
    if (p.contacts.size() >= kMaxContacts) {
        throw RegistryError(RegistryErrorKind::ContactLimitReached, std::to_string(kMaxContacts) + " contacts");
    }
    p.contacts.push_back(c);
    return c;
}

Contact Registry::remove_contact(std::string_view device_id, std::string_view msisdn) {
    std::unique_lock lock(mu_);
    DeviceProfile& p = require(device_id);
    const Msisdn key = Msisdn::parse(msisdn);
    const auto it = std::find_if(p.contacts.begin(), p.contacts.end(),
                                 [&key](const Contact& c) { return c.msisdn == key; });
    if (it == p.contacts.end()) throw RegistryError(RegistryErrorKind::UnknownContact, key.str());
    Contact removed = *it;
    p.contacts.erase(it);
    return removed;
}

void Registry::set_custom_message(std::string_view device_id, std::string_view text) {
    const std::string_view trimmed = utf8::trim(text);
    std::size_t len = 0;
    try {
        len = utf8::length(trimmed);
    } catch (const utf8::Utf8Error& e) {
        throw RegistryError(RegistryErrorKind::EmptyMessage, e.what());
    }
    std::unique_lock lock(mu_);
    DeviceProfile& p = require(device_id);
    if (len == 0) throw RegistryError(RegistryErrorKind::EmptyMessage, "message is blank");
    if (len > kMaxCustomMessageChars) {
        throw RegistryError(RegistryErrorKind::MessageTooLong,
                            std::to_string(len) + " characters exceeds " + std::to_string(kMaxCustomMessageChars));
    }
    p.custom_message = std::string(trimmed);
}

std::optional<DeviceProfile> Registry::find(std::string_view device_id) const {
    std::shared_lock lock(mu_);
    const auto it = devices_.find(device_id);
    if (it == devices_.end()) return std::nullopt;
    return it->second;
}

std::vector<DeviceProfile> Registry::devices() const {
    std::shared_lock lock(mu_);
    std::vector<DeviceProfile> out;
    out.reserve(devices_.size());
    for (const auto& [_, p] : devices_) out.push_back(p);
    return out;
}

std::size_t Registry::size() const {
    std::shared_lock lock(mu_);
    return devices_.size();
}

std::string to_json(const Registry& store) {
    json devices = json::array();
    for (const auto& p : store.devices()) {
        json contacts = json::array();
        for (const auto& c : p.contacts) {
            contacts.push_back({{"msisdn", c.msisdn.str()}, {"label", c.label}, {"added_at", c.added_at}});
        }
        devices.push_back({{"device_id", p.device_id},
                           {"custom_message", p.custom_message},
                           {"created_at", p.created_at},
                           {"contacts", std::move(contacts)}});
    }
    json doc = {{"v", kSnapshotVersion}, {"devices", std::move(devices)}};
    return doc.dump(2) + "\n";
}

Registry from_json(std::string_view text) {
    try {
        const json doc = json::parse(text);
        if (!doc.is_object()) throw RegistryError(RegistryErrorKind::CorruptSnapshot, "top level is not an object");
        if (doc.value("v", 0) != kSnapshotVersion) {
            throw RegistryError(RegistryErrorKind::CorruptSnapshot, "unsupported version");
        }
        std::vector<DeviceProfile> devices;
        for (const auto& d : doc.at("devices")) {
            DeviceProfile p;
            p.device_id = d.at("device_id").get<std::string>();
            p.custom_message = d.at("custom_message").get<std::string>();
            p.created_at = d.at("created_at").get<TimestampMs>();
            for (const auto& c : d.at("contacts")) {
                p.contacts.push_back(Contact{Msisdn::parse(c.at("msisdn").get<std::string>()),
                                             c.value("label", std::string{}), c.at("added_at").get<TimestampMs>()});
            }
            devices.push_back(std::move(p));
        }
        return Registry(std::move(devices));
    } catch (const json::exception& e) {
        throw RegistryError(RegistryErrorKind::CorruptSnapshot, e.what());
    } catch (const RegistryError& e) {
        if (e.kind() == RegistryErrorKind::CorruptSnapshot) throw;
        throw RegistryError(RegistryErrorKind::CorruptSnapshot, e.what());
    }
}

void save_snapshot(const Registry& store, const std::string& path) {
    namespace fs = std::filesystem;
    static std::atomic<unsigned> counter{0};
    const std::string body = to_json(store);
    const std::string tmp = path + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);

    auto io_fail = [&](const std::string& what) {
        const int err = errno;
        ::unlink(tmp.c_str());
        throw RegistryError(RegistryErrorKind::IoError, what + " " + tmp + ": " + std::strerror(err));
    };

    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("open");
    std::size_t written = 0;
    while (written < body.size()) {
        const ssize_t n = ::write(fd, body.data() + written, body.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            io_fail("write");
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        io_fail("fsync");
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) io_fail("rename");

    const fs::path dir = fs::path(path).parent_path().empty() ? fs::path(".") : fs::path(path).parent_path();
    if (const int dfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC); dfd >= 0) {
        ::fsync(dfd);
        ::close(dfd);
    }
}

Registry load_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RegistryError(RegistryErrorKind::IoError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw RegistryError(RegistryErrorKind::IoError, "read failed for " + path);
    return from_json(ss.str());
}

}  // namespace sos::registry
