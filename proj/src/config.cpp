#include "colddamp/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "colddamp/csv.hpp"
#include "colddamp/model.hpp"

namespace colddamp {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& token, const std::string& context) {
    try {
        size_t pos = 0;
        const double v = std::stod(token, &pos);
        if (pos != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(context + ": '" + token + "' is not a number");
    }
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (cfg.entries_.count(key))
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");

        Entry e;
        e.line = lineno;
        if (value.front() == '[') {
            if (value.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated array");
            e.is_array = true;
            std::string body = value.substr(1, value.size() - 2);
            std::string token;
            std::istringstream items(body);
            while (std::getline(items, token, ',')) {
                token = trim(token);
                if (!token.empty()) e.array.push_back(token);
            }
        }
        e.raw = value;
        cfg.entries_.emplace(key, std::move(e));
    }
    return cfg;
}

const Config::Entry* Config::find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
}

const Config::Entry& Config::entry(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) throw ConfigError(origin_ + ": missing required key '" + key + "'");
    return *e;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

double Config::number(const std::string& key) const {
    const Entry& e = entry(key);
    if (e.is_array) throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + key + "' must be a scalar");
    return parse_number(e.raw, origin_ + ":" + std::to_string(e.line));
}

double Config::number_or(const std::string& key, double fallback) const {
    return find(key) ? number(key) : fallback;
}

long Config::integer_or(const std::string& key, long fallback) const {
    if (!find(key)) return fallback;
    const double v = number(key);
    const long n = std::lround(v);
    if (std::abs(v - n) > 1e-9)
        throw ConfigError(origin_ + ": '" + key + "' must be an integer");
    return n;
}

bool Config::flag_or(const std::string& key, bool fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->raw == "true" || e->raw == "1") return true;
    if (e->raw == "false" || e->raw == "0") return false;
    throw ConfigError(origin_ + ":" + std::to_string(e->line) + ": '" + key + "' must be true or false");
}

std::string Config::text(const std::string& key) const { return entry(key).raw; }

std::string Config::text_or(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    return e ? e->raw : fallback;
}

std::vector<double> Config::numbers(const std::string& key) const {
    const Entry& e = entry(key);
    if (!e.is_array)
        throw ConfigError(origin_ + ":" + std::to_string(e.line) + ": '" + key + "' must be an array");
    std::vector<double> out;
    out.reserve(e.array.size());
    for (const std::string& t : e.array)
        out.push_back(parse_number(t, origin_ + ":" + std::to_string(e.line)));
    return out;
}

bool Config::has_grid(const std::string& prefix) const {
    return has(prefix) || has(prefix + "_min");
}

std::vector<double> Config::grid(const std::string& prefix) const {
    if (has(prefix)) return numbers(prefix);
    const double lo = number(prefix + "_min");
    const double hi = number(prefix + "_max");
    const long n = integer_or(prefix + "_points", 0);
    if (n < 1) throw ConfigError(origin_ + ": '" + prefix + "_points' must be >= 1");
    if (n == 1 && hi != lo)
        throw ConfigError(origin_ + ": single-point grid needs " + prefix + "_min == " + prefix + "_max");
    std::vector<double> out(n);
    for (long i = 0; i < n; ++i)
        out[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0);
    return out;
}

SystemSpec Config::build_spec() const {
    SystemSpec spec;

    int n = 0;
    while (has("modes." + std::to_string(n + 1) + ".omega")) ++n;
    if (n == 0) throw ConfigError(origin_ + ": no modes found (expected modes.1.omega, ...)");

    int with_g = 0, with_gom = 0;
    for (int k = 1; k <= n; ++k) {
        const std::string p = "modes." + std::to_string(k) + ".";
        MechanicalMode m;
        m.omega = number(p + "omega");
        m.gamma = number(p + "gamma");
        m.nbar = number(p + "nbar");
        m.g_cd = number_or(p + "g_cd", 0.0);
        if (has(p + "G")) {
            m.G = number(p + "G");
            ++with_g;
        }
        if (has(p + "g_om")) {
            m.g_om = number(p + "g_om");
            ++with_gom;
        }
        spec.modes.push_back(m);
    }
    if (with_g == n && with_gom == 0) {
        spec.coupling_source = CouplingSource::direct;
        spec.linearized = true;
    } else if (with_gom == n && with_g == 0) {
        spec.coupling_source = CouplingSource::mean_field;
        spec.linearized = false;
    } else {
        throw ConfigError(origin_ + ": give either G for every mode or g_om for every mode");
    }

    spec.cavity.kappa = number("cavity.kappa");
    spec.cavity.delta0 = number_or("cavity.delta0", 0.0);
    if (has("cavity.epsilon")) spec.cavity.epsilon = number("cavity.epsilon");
    spec.cavity.eta = number_or("cavity.eta", 1.0);

    spec.feedback.omega_fb = number("feedback.omega_fb");
    spec.feedback.tau = number_or("feedback.tau", 0.0);
    spec.feedback.regime = regime_from_string(text_or("feedback.regime", "sfflc"));

    validate(spec);
    return spec;
}

void Config::ensure_all_consumed() const {
    std::vector<std::string> leftovers;
    for (const auto& [key, e] : entries_)
        if (!e.consumed)
            leftovers.push_back("'" + key + "' (line " + std::to_string(e.line) + ")");
    if (!leftovers.empty()) {
        std::string msg = origin_ + ": unknown key(s): ";
        for (size_t i = 0; i < leftovers.size(); ++i) {
            if (i) msg += ", ";
            msg += leftovers[i];
        }
        throw ConfigError(msg);
    }
}

nlohmann::json Config::dump() const {
    nlohmann::json j;
    for (const auto& [key, e] : entries_) j[key] = e.raw;
    return j;
}

std::string serialize(const SystemSpec& spec) {
    std::ostringstream out;
    for (int k = 0; k < spec.size(); ++k) {
        const auto& m = spec.modes[k];
        const std::string p = "modes." + std::to_string(k + 1) + ".";
        out << p << "omega = " << format_g17(m.omega) << '\n';
        out << p << "gamma = " << format_g17(m.gamma) << '\n';
        out << p << "nbar = " << format_g17(m.nbar) << '\n';
        if (spec.coupling_source == CouplingSource::direct)
            out << p << "G = " << format_g17(m.G) << '\n';
        if (m.g_om) out << p << "g_om = " << format_g17(*m.g_om) << '\n';
        out << p << "g_cd = " << format_g17(m.g_cd) << '\n';
    }
    out << "cavity.kappa = " << format_g17(spec.cavity.kappa) << '\n';
    out << "cavity.delta0 = " << format_g17(spec.cavity.delta0) << '\n';
    if (spec.cavity.epsilon)
        out << "cavity.epsilon = " << format_g17(*spec.cavity.epsilon) << '\n';
    out << "cavity.eta = " << format_g17(spec.cavity.eta) << '\n';
    out << "feedback.omega_fb = " << format_g17(spec.feedback.omega_fb) << '\n';
    out << "feedback.tau = " << format_g17(spec.feedback.tau) << '\n';
    out << "feedback.regime = " << to_string(spec.feedback.regime) << '\n';
    return out.str();
}

nlohmann::json to_json(const SystemSpec& spec) {
    nlohmann::json j;
    j["modes"] = nlohmann::json::array();
    for (const auto& m : spec.modes) {
        nlohmann::json jm{{"omega", m.omega}, {"gamma", m.gamma}, {"nbar", m.nbar},
                          {"G", m.G},         {"g_cd", m.g_cd}};
        if (m.g_om) jm["g_om"] = *m.g_om;
        j["modes"].push_back(jm);
    }
    j["cavity"] = {{"kappa", spec.cavity.kappa},
                   {"delta0", spec.cavity.delta0},
                   {"eta", spec.cavity.eta}};
    if (spec.cavity.epsilon) j["cavity"]["epsilon"] = *spec.cavity.epsilon;
    j["feedback"] = {{"omega_fb", spec.feedback.omega_fb},
                     {"tau", spec.feedback.tau},
                     {"regime", to_string(spec.feedback.regime)}};
    return j;
}

}  // namespace colddamp
