#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gmarl {

/// Flat `key = value` configuration. `#` starts a comment; a line
/// `include = path` (or `@include path`) splices another file in place,
/// relative to the including file. Later assignments override earlier ones.
class Config {
public:
    Config() = default;

    static Config parse(std::string_view text, const std::filesystem::path& base_dir = {});
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    /// Applies every entry of `other` on top of this one.
    void merge(const Config& other);
    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::string> get_strings(const std::string& key, std::vector<std::string> fallback) const;
    /// Rows separated by ';', values by ','.
    std::vector<std::vector<double>> get_matrix(const std::string& key) const;

    /// Canonical sorted text of every entry; parsing it back yields the same config.
    std::string resolved_text() const;
    /// 64-bit FNV-1a of resolved_text() without study.workers, as 16 hex digits.
    std::string digest() const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    void parse_into(std::string_view text, const std::filesystem::path& base_dir, int depth);

    std::map<std::string, std::string> entries_;
};

std::string fnv1a_hex(std::string_view text);

/// Deterministic 64-bit seed derivation (splitmix64 mixing of the inputs).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

} // namespace gmarl
