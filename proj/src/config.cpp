#include "blowup/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blowup {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::parse_text(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(lineno) +
                                     " has no '=': " + stripped);
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config: line " + std::to_string(lineno) +
                                     " has an empty key");
        cfg.kv[key] = value;
    }
    return cfg;
}

Config Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

bool Config::has(const std::string& key) const { return kv.count(key) != 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size())
        throw std::runtime_error("config: key " + key + " is not a number: " + it->second);
    return v;
}

long Config::get_long(const std::string& key, long fallback) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size())
        throw std::runtime_error("config: key " + key + " is not an integer: " + it->second);
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::runtime_error("config: key " + key + " is not a boolean: " + v);
}

void Config::set(const std::string& key, const std::string& value) { kv[key] = value; }

void Config::set_double(const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    kv[key] = buf;
}

void Config::set_long(const std::string& key, long value) { kv[key] = std::to_string(value); }

std::string Config::canonical() const {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

std::uint64_t Config::hash() const {
    // FNV-1a 64
    std::uint64_t h = 1469598103934665603ull;
    for (const char ch : canonical()) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace blowup
