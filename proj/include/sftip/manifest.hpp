#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sftip/image_io.hpp"
#include "sftip/version.hpp"

namespace sftip {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Ordered key = value pairs. Written next to every command's outputs; the
/// same text doubles as a config file, so a past run can be replayed with
/// --config <manifest>.
struct RunManifest {
    std::vector<std::pair<std::string, std::string>> entries;

    void set(const std::string& key, const std::string& value) {
        for (auto& kv : entries)
            if (kv.first == key) {
                kv.second = value;
                return;
            }
        entries.emplace_back(key, value);
    }

    const std::string* find(const std::string& key) const {
        for (const auto& kv : entries)
            if (kv.first == key) return &kv.second;
        return nullptr;
    }

    std::string to_text() const {
        std::string out;
        for (const auto& kv : entries) out += kv.first + " = " + kv.second + "\n";
        return out;
    }

    void save(const std::string& path) const { detail::write_file_atomic(path, to_text()); }
};

inline RunManifest make_manifest(const std::string& command) {
    RunManifest m;
    m.set("format_version", std::to_string(kFormatVersion));
    m.set("tool_version", kToolVersion);
    m.set("command", command);
    return m;
}

/// key = value lines; '#' starts a comment; blank lines skipped. Order is
/// preserved, duplicate keys keep the last value.
inline RunManifest load_key_values(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file: " + path);
    RunManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw IoError(path + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty())
            throw IoError(path + ":" + std::to_string(lineno) + ": empty key");
        m.set(key, value);
    }
    return m;
}

}  // namespace sftip
