#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace stdgn {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration. Lines starting with '#' are comments.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    [[nodiscard]] bool contains(const std::string& key) const { return values_.count(key) != 0; }
    [[nodiscard]] std::optional<std::string> raw(const std::string& key) const;

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;

    /// Later entries win.
    void merge(const KeyValueConfig& other);
    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return values_; }
    [[nodiscard]] std::string dump() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace stdgn
