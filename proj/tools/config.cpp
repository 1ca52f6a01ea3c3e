#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hypam::cli {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

template <class T>
bool parse_int(const std::string& s, T& out) {
    auto r = std::from_chars(s.data(), s.data() + s.size(), out);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

const char* type_name(KeyType t) {
    switch (t) {
        case KeyType::Int: return "an integer";
        case KeyType::UInt: return "a non-negative integer";
        case KeyType::Double: return "a number";
        case KeyType::String: return "a string";
        case KeyType::List: return "a comma-separated list of numbers";
        case KeyType::Bool: return "true or false";
    }
    return "?";
}

bool valid(KeyType t, const std::string& v) {
    switch (t) {
        case KeyType::Int: {
            long long x;
            return parse_int(v, x);
        }
        case KeyType::UInt: {
            std::uint64_t x;
            return parse_int(v, x);
        }
        case KeyType::Double: {
            double x;
            return parse_double(v, x);
        }
        case KeyType::String: return true;
        case KeyType::List: {
            double x;
            for (const auto& item : split_list(v))
                if (!parse_double(item, x)) return false;
            return true;
        }
        case KeyType::Bool: return v == "true" || v == "false" || v == "1" || v == "0";
    }
    return false;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& key, const std::string& msg)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : "") +
                         (key.empty() ? "" : ": key '" + key + "'") + ": " + msg) {}

const std::map<std::string, KeySpec>& Config::schema() {
    static const std::map<std::string, KeySpec> s = {
        {"d", {KeyType::Int, "2", "dimension of H^d"}},
        {"sigma2", {KeyType::Double, "1", "field variance"}},
        {"R0", {KeyType::Double, "1", "correlation length"}},
        {"shape", {KeyType::String, "poly3", "covariance bump: poly3 or poly4"}},
        {"t", {KeyType::Double, "1", "time horizon"}},
        {"t_list", {KeyType::List, "", "time horizons for trend runs (empty: t)"}},
        {"dt", {KeyType::Double, "0.005", "time step"}},
        {"n_paths", {KeyType::Int, "1000", "Monte Carlo paths"}},
        {"delta", {KeyType::Double, "0.5", "island level and deviation scale"}},
        {"eta", {KeyType::Double, "0.02", "cluster link parameter"}},
        {"lambda", {KeyType::Double, "0.01", "route cluster parameter"}},
        {"alpha", {KeyType::Double, "0.1", "split of the energy in the route bound"}},
        {"mu", {KeyType::Double, "0", "field level factor (0: mu0)"}},
        {"K0", {KeyType::Double, "1", "localisation radius factor"}},
        {"C_R0_hat", {KeyType::Double, "1", "field tail constant"}},
        {"seed", {KeyType::UInt, "1", "master seed"}},
        {"out", {KeyType::String, "out", "output directory"}},
        {"mode", {KeyType::String, "quenched", "quenched or annealed"}},
        {"potential", {KeyType::String, "field", "fk potential: field, constant, peak"}},
        {"c", {KeyType::Double, "0", "constant potential value"}},
        {"h", {KeyType::Double, "1", "planted peak height"}},
        {"K", {KeyType::Double, "1", "fk-localized / peak: distance of the peak / t^{4/3}"}},
        {"eps", {KeyType::Double, "0.2", "entering-time fraction"}},
        {"tube", {KeyType::Double, "0.5", "tube radius around the geodesic"}},
        {"peak_radius", {KeyType::Double, "0.5", "peak ball radius"}},
        {"resolution", {KeyType::Double, "0.125", "lazy field resolution"}},
        {"max_sites", {KeyType::Int, "200000", "lazy field site cap"}},
        {"n_fields", {KeyType::Int, "50", "annealed field draws"}},
        {"paths_per_field", {KeyType::Int, "10", "annealed paths per field"}},
        {"routes", {KeyType::Bool, "false", "fk: extract routes on the final field"}},
        {"zeta", {KeyType::Double, "0.001", "endpoint slack factor"}},
        {"n_trials", {KeyType::Int, "32", "optimiser restarts"}},
        {"distance", {KeyType::Double, "2", "bridge endpoint distance"}},
        {"s_list", {KeyType::List, "0.4,0.2,0.1,0.05", "bridge durations"}},
        {"dt_fraction", {KeyType::Double, "0.005", "bridge step / duration"}},
        {"R_list", {KeyType::List, "5,10,20", "radii"}},
        {"spacing", {KeyType::Double, "0.25", "lattice spacing"}},
        {"n_reps", {KeyType::Int, "100", "field replicates"}},
        {"scan_eps", {KeyType::Double, "0.5", "max-scan threshold excess"}},
        {"site_cap", {KeyType::Int, "2500", "site cap per region"}},
        {"region_radius", {KeyType::Double, "3", "clusters: radius of the sampled ball"}},
        {"link_h", {KeyType::Double, "0.15", "island link half-distance"}},
        {"t0", {KeyType::Double, "0.1", "calibration grid: first t"}},
        {"t1", {KeyType::Double, "10", "calibration grid: last t"}},
        {"n_t", {KeyType::Int, "25", "calibration grid: t points"}},
        {"rho0", {KeyType::Double, "0", "calibration grid: first rho"}},
        {"rho1", {KeyType::Double, "20", "calibration grid: last rho"}},
        {"n_rho", {KeyType::Int, "81", "calibration grid: rho points"}},
        {"ratio_cap", {KeyType::Double, "100", "calibration C2/C1 cap"}},
        {"gaps", {KeyType::List, "", "route gaps D_i / t^{4/3}"}},
        {"word", {KeyType::String, "", "route word, one letter per hop"}},
        {"K_star", {KeyType::Double, "1", "route-budget K*; energy-bound endpoint distance"}},
        {"N_list", {KeyType::List, "1,2,4,8", "route lengths"}},
    };
    return s;
}

Config::Config() {
    for (const auto& [k, spec] : schema()) {
        values_[k] = spec.fallback;
        explicit_[k] = false;
    }
}

void Config::set(const std::string& key, const std::string& value, const std::string& source, int line) {
    auto it = schema().find(key);
    if (it == schema().end()) throw ConfigError(source, line, key, "unknown key");
    std::string v = trim(value);
    if (!valid(it->second.type, v))
        throw ConfigError(source, line, key, std::string("expected ") + type_name(it->second.type) + ", got '" + v + "'");
    values_[key] = v;
    explicit_[key] = true;
}

void Config::load_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line, "", "expected 'key = value'");
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError(source, line, "", "empty key");
        set(key, s.substr(eq + 1), source, line);
    }
}

void Config::load_manifest(const nlohmann::json& manifest, const std::string& source) {
    if (!manifest.contains("config") || !manifest["config"].is_object())
        throw ConfigError(source, 0, "", "manifest has no 'config' object");
    for (const auto& [k, v] : manifest["config"].items()) {
        std::string s;
        if (v.is_string()) s = v.get<std::string>();
        else if (v.is_boolean()) s = v.get<bool>() ? "true" : "false";
        else if (v.is_number_unsigned()) s = std::to_string(v.get<std::uint64_t>());
        else if (v.is_number_integer()) s = std::to_string(v.get<long long>());
        else if (v.is_number()) s = fmt(v.get<double>());
        else if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i].get<double>());
        } else {
            throw ConfigError(source, 0, k, "unsupported value");
        }
        set(k, s, source);
    }
}

void Config::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path, 0, "", "cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(ss.str());
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path, 0, "", e.what());
        }
        load_manifest(j, path);
    } else {
        load_text(ss.str(), path);
    }
}

void Config::load_env() {
    for (const auto& [k, spec] : schema()) {
        std::string name = "HYPAM_" + k;
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char ch) { return std::toupper(ch); });
        if (const char* v = std::getenv(name.c_str())) set(k, v, name);
    }
}

long long Config::integer(const std::string& key) const {
    long long x = 0;
    parse_int(values_.at(key), x);
    return x;
}

std::uint64_t Config::uinteger(const std::string& key) const {
    std::uint64_t x = 0;
    parse_int(values_.at(key), x);
    return x;
}

double Config::real(const std::string& key) const {
    double x = 0.0;
    parse_double(values_.at(key), x);
    return x;
}

const std::string& Config::text(const std::string& key) const { return values_.at(key); }

std::vector<double> Config::list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(values_.at(key))) {
        double x = 0.0;
        parse_double(item, x);
        out.push_back(x);
    }
    return out;
}

bool Config::flag(const std::string& key) const {
    const auto& v = values_.at(key);
    return v == "true" || v == "1";
}

bool Config::is_default(const std::string& key) const { return !explicit_.at(key); }

nlohmann::json Config::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, spec] : schema()) {
        switch (spec.type) {
            case KeyType::Int: j[k] = integer(k); break;
            case KeyType::UInt: j[k] = uinteger(k); break;
            case KeyType::Double: j[k] = real(k); break;
            case KeyType::String: j[k] = text(k); break;
            case KeyType::List: j[k] = list(k); break;
            case KeyType::Bool: j[k] = flag(k); break;
        }
    }
    return j;
}

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

}  // namespace hypam::cli
