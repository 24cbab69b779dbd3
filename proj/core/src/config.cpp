#include "gmarl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gmarl/error.hpp"

namespace gmarl {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
    }
}

std::filesystem::path read_path(const std::filesystem::path& path, std::string& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    out = buf.str();
    return path.parent_path();
}

} // namespace

Config Config::parse(std::string_view text, const std::filesystem::path& base_dir) {
    Config c;
    c.parse_into(text, base_dir, 0);
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::string text;
    const auto dir = read_path(path, text);
    Config c;
    c.parse_into(text, dir, 0);
    return c;
}

void Config::parse_into(std::string_view text, const std::filesystem::path& base_dir, int depth) {
    if (depth > 16) throw ConfigError("config include nesting too deep (cycle?)");
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        std::string key, value;
        if (line.rfind("@include", 0) == 0) {
            key = "include";
            value = trim(std::string_view(line).substr(8));
        } else {
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
            }
            key = trim(std::string_view(line).substr(0, eq));
            value = trim(std::string_view(line).substr(eq + 1));
        }
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (key == "include") {
            std::string sub;
            const auto dir = read_path(base_dir / value, sub);
            parse_into(sub, dir, depth + 1);
            continue;
        }
        entries_[key] = value;
    }
}

void Config::merge(const Config& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : to_double(key, it->second);
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::int64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not an integer");
    }
    return v;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::uint64_t v = 0;
    const auto& s = it->second;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError("config key '" + key + "': '" + s + "' is not a non-negative integer");
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const auto& s = it->second;
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key, std::vector<double> fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    for (const auto& part : split(it->second, ',')) {
        if (!part.empty()) out.push_back(to_double(key, part));
    }
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& key, std::vector<std::string> fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<std::string> out;
    for (auto& part : split(it->second, ','))
        if (!part.empty()) out.push_back(std::move(part));
    return out;
}

std::vector<std::vector<double>> Config::get_matrix(const std::string& key) const {
    std::vector<std::vector<double>> out;
    auto it = entries_.find(key);
    if (it == entries_.end()) return out;
    for (const auto& row : split(it->second, ';')) {
        if (row.empty()) continue;
        std::vector<double> r;
        for (const auto& part : split(row, ','))
            if (!part.empty()) r.push_back(to_double(key, part));
        out.push_back(std::move(r));
    }
    return out;
}

std::string Config::resolved_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
    return out;
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string Config::digest() const {
    // The worker count changes scheduling only, never results.
    std::string text;
    for (const auto& [k, v] : entries_)
        if (k != "study.workers") text += k + " = " + v + "\n";
    return fnv1a_hex(text);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ stream) ^ index);
}

} // namespace gmarl
