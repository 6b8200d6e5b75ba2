#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kwlab/errors.hpp"

namespace kw {

// Flat run configuration: one `section.key = value` per line, `#` comments,
// blank lines ignored. Keys must come from the known-key registry; a typo
// is an error with its line number, never a silently ignored setting.
class Config {
public:
    static Config parse_file(const std::string& path, const std::set<std::string>& known) {
        std::ifstream in(path);
        if (!in) throw error(errc::io_error, "cannot open config: " + path);
        return parse_stream(in, known, path);
    }

    static Config parse_stream(std::istream& in, const std::set<std::string>& known,
                               const std::string& name = "<config>") {
        Config cfg;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            if (trim(line).empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw error(errc::parse_error,
                            name + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw error(errc::parse_error,
                            name + ":" + std::to_string(lineno) + ": empty key or value");
            if (!known.count(key))
                throw error(errc::parse_error,
                            name + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
            if (cfg.values_.count(key))
                throw error(errc::parse_error,
                            name + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw error(errc::invalid_argument, "missing required config key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    double require_double(const std::string& key) const {
        return to_double(key, require_string(key));
    }

    long get_long(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const double v = to_double(key, it->second);
        if (v != static_cast<double>(static_cast<long>(v)))
            throw error(errc::invalid_argument, "config key '" + key + "' must be an integer");
        return static_cast<long>(v);
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw error(errc::invalid_argument, "config key '" + key + "' must be true or false");
    }

    std::vector<double> require_double_list(const std::string& key) const {
        const std::string raw = require_string(key);
        std::vector<double> out;
        std::string item;
        std::istringstream ss(raw);
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty())
                throw error(errc::invalid_argument, "config key '" + key + "' has an empty item");
            out.push_back(to_double(key, item));
        }
        if (out.empty())
            throw error(errc::invalid_argument, "config key '" + key + "' is an empty list");
        return out;
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        auto b = s.begin(), e = s.end();
        while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
        while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
        return std::string(b, e);
    }

    static double to_double(const std::string& key, const std::string& raw) {
        try {
            std::size_t used = 0;
            const double v = std::stod(raw, &used);
            if (used != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw error(errc::invalid_argument,
                        "config key '" + key + "' has a non-numeric value '" + raw + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

} // namespace kw
