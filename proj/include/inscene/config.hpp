#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "inscene/errors.hpp"

namespace inscene {

// Plain-text `key = value` configuration, '#' comments. Values keep their raw
// spelling so the config hash does not depend on float formatting.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    long get_long(const std::string& key, long fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    std::array<double, 3> get_rgb(const std::string& key, const std::array<double, 3>& fallback) const;

    void set(const std::string& key, const std::string& value);

    // Sorted `key=value` lines; the basis for the config hash.
    std::string canonical() const;
    uint64_t hash() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::string hash_hex(uint64_t h);

} // namespace inscene
