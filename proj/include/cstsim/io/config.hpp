#ifndef CSTSIM_IO_CONFIG_HPP
#define CSTSIM_IO_CONFIG_HPP

// Flat INI-like run configuration:
//
//   # comment
//   [section]
//   key = value   # trailing comment
//
// Keys are checked against a schema; unknown sections or keys, duplicates
// and malformed lines raise ConfigError with the line number.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cstsim/errors.hpp"
#include "cstsim/linalg.hpp"

namespace cstsim::io {

struct ConfigEntry {
    std::string value;
    int line = 0;
};

using Schema = std::map<std::string, std::set<std::string>>;

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline double parse_double(const std::string& text, int line, const std::string& what) {
    double v = 0.0;
    const auto t = trim(text);
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (!t.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || t.empty()) throw ConfigError(what + ": '" + t + "' is not a number", line);
    return v;
}

class Config {
public:
    static Config parse(std::string_view text) {
        Config c;
        std::string section;
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++line_no;
            const auto hash = raw.find('#');
            const std::string line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("unterminated section header", line_no);
                section = trim(std::string_view(line).substr(1, line.size() - 2));
                if (section.empty()) throw ConfigError("empty section name", line_no);
                c.sections_[section];
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
            if (section.empty()) throw ConfigError("key outside any [section]", line_no);
            const std::string key = trim(std::string_view(line).substr(0, eq));
            const std::string value = trim(std::string_view(line).substr(eq + 1));
            if (key.empty()) throw ConfigError("empty key", line_no);
            auto& sec = c.sections_[section];
            if (sec.contains(key)) throw ConfigError("duplicate key '" + section + "." + key + "'", line_no);
            sec[key] = {value, line_no};
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    /// Rejects sections and keys the schema does not list.
    void check(const Schema& schema) const {
        for (const auto& [name, entries] : sections_) {
            auto it = schema.find(name);
            if (it == schema.end()) {
                const int line = entries.empty() ? 0 : entries.begin()->second.line;
                throw ConfigError("unknown section [" + name + "]", line);
            }
            for (const auto& [key, e] : entries)
                if (!it->second.contains(key)) throw ConfigError("unknown key '" + name + "." + key + "'", e.line);
        }
    }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.contains(key);
    }

    const ConfigEntry* find(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end()) return nullptr;
        auto k = it->second.find(key);
        return k == it->second.end() ? nullptr : &k->second;
    }

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
        const auto* e = find(section, key);
        return e ? e->value : fallback;
    }

    std::string require_string(const std::string& section, const std::string& key) const {
        const auto* e = find(section, key);
        if (!e) throw ConfigError("missing required key '" + section + "." + key + "'");
        return e->value;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        const auto* e = find(section, key);
        return e ? parse_double(e->value, e->line, section + "." + key) : fallback;
    }

    double require_double(const std::string& section, const std::string& key) const {
        const auto* e = find(section, key);
        if (!e) throw ConfigError("missing required key '" + section + "." + key + "'");
        return parse_double(e->value, e->line, section + "." + key);
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        const auto* e = find(section, key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
        if (e->value == "false" || e->value == "no" || e->value == "0") return false;
        throw ConfigError(section + "." + key + ": expected true or false", e->line);
    }

    Vec3 get_vec3(const std::string& section, const std::string& key, const Vec3& fallback) const {
        const auto* e = find(section, key);
        if (!e) return fallback;
        const auto parts = split(e->value, ',');
        if (parts.size() != 3) throw ConfigError(section + "." + key + ": expected three comma-separated numbers", e->line);
        return {parse_double(parts[0], e->line, key), parse_double(parts[1], e->line, key),
                parse_double(parts[2], e->line, key)};
    }

    /// Line number for diagnostics, 0 if absent.
    int line_of(const std::string& section, const std::string& key) const {
        const auto* e = find(section, key);
        return e ? e->line : 0;
    }

    /// Sorted sections and keys, one `key = value` per line.
    std::string canonical() const {
        std::string out;
        for (const auto& [name, entries] : sections_) {
            out += "[" + name + "]\n";
            for (const auto& [key, e] : entries) out += key + " = " + e.value + "\n";
        }
        return out;
    }

    /// 64-bit FNV-1a of the canonical text, as 16 hex digits.
    std::string hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char ch : canonical()) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

private:
    std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
};

}  // namespace cstsim::io

#endif
