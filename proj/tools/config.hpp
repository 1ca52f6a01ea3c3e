#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace hypam::cli {

enum class KeyType { Int, UInt, Double, String, List, Bool };

struct KeySpec {
    KeyType type;
    std::string fallback;  // default, in config syntax
    std::string help;
};

// Parse errors carry the line (0 for env / command line / manifest) and the key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& key, const std::string& msg);
};

// Flat key = value configuration with a fixed, typed schema. Values are kept as
// text; typed getters validate on read and setters validate on write.
class Config {
public:
    Config();

    static const std::map<std::string, KeySpec>& schema();

    // "key = value" lines, '#' comments; a .json file is read as a manifest
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& source);
    void load_manifest(const nlohmann::json& manifest, const std::string& source);
    // HYPAM_<KEY> variables, key upper-cased
    void load_env();
    void set(const std::string& key, const std::string& value, const std::string& source = "command line",
             int line = 0);

    long long integer(const std::string& key) const;
    std::uint64_t uinteger(const std::string& key) const;
    double real(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    bool flag(const std::string& key) const;
    bool is_default(const std::string& key) const;

    nlohmann::json to_json() const;

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

// shortest round-trip decimal, independent of the locale
std::string fmt(double x);

}  // namespace hypam::cli
