#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace blowup {

// Flat key = value configuration with dotted section prefixes, e.g.
//   model.p = 3
//   solver.safety = 0.05
// Lines starting with '#' and blank lines are ignored; later keys win.
struct Config {
    std::map<std::string, std::string> kv;

    static Config parse_text(const std::string& text);
    static Config load_file(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);
    void set_long(const std::string& key, long value);

    // sorted "key = value\n" lines; the hashing and persistence form
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a 64 over canonical()
};

}  // namespace blowup
