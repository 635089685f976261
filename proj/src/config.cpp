#include "gravipanel/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gravipanel {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str());
}

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ValidationError("config line " + std::to_string(line_no) +
                                      ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError("config line " + std::to_string(line_no) + ": empty key");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.kv_.count(full)) {
            throw ValidationError("config: duplicate key '" + full + "'");
        }
        cfg.kv_[full] = value;
    }
    return cfg;
}

std::string ConfigFile::str(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

std::string ConfigFile::require(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ValidationError("config: missing required key '" + key + "'");
    return it->second;
}

long ConfigFile::integer(const std::string& key, long fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    long v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size()) {
        throw ValidationError("config: key '" + key + "' is not an integer: " + it->second);
    }
    return v;
}

std::uint64_t ConfigFile::uint64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size()) {
        throw ValidationError("config: key '" + key + "' is not an unsigned integer: " +
                              it->second);
    }
    return v;
}

double ConfigFile::real(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    double v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size()) {
        throw ValidationError("config: key '" + key + "' is not a number: " + it->second);
    }
    return v;
}

bool ConfigFile::boolean(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ValidationError("config: key '" + key + "' is not a boolean: " + it->second);
}

std::vector<std::string> ConfigFile::list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = kv_.find(key);
    if (it == kv_.end()) return out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

PipelineConfig PipelineConfig::from_config(const ConfigFile& cfg) {
    PipelineConfig pc;
    pc.input = cfg.require("data.input");
    pc.reporter = cfg.str("data.reporter");
    pc.partners = cfg.list("data.partners");
    pc.cee_partners = cfg.list("data.cee_partners");
    if (cfg.has("data.year_min") || cfg.has("data.year_max")) {
        pc.years = {static_cast<int>(cfg.integer("data.year_min", 0)),
                    static_cast<int>(cfg.integer("data.year_max", 0))};
    }
    pc.max_gap = static_cast<int>(cfg.integer("data.max_gap", 1));
    if (cfg.has("data.totals_input")) pc.totals_input = cfg.str("data.totals_input");

    if (cfg.has("model.relations")) {
        pc.relations.clear();
        for (const auto& id : cfg.list("model.relations")) pc.relations.push_back(Relation::parse(id));
    }
    pc.unit_root_lags = static_cast<int>(cfg.integer("model.lag_order", 2));
    pc.trend_vars = cfg.list("model.trend_vars");
    if (cfg.has("model.endogenous")) pc.endogenous = cfg.list("model.endogenous");
    pc.instrument_lags = static_cast<int>(cfg.integer("model.instrument_lags", 1));
    pc.growth_shift = cfg.real("model.growth_shift", 10.0);
    pc.robust_alpha = cfg.real("model.robust_alpha", 0.05);
    pc.robust_mode = cfg.str("model.robust_mode", "auto");
    pc.hausman_alpha = cfg.real("model.hausman_alpha", 0.05);
    pc.cd_residuals = cfg.str("model.cd_residuals", "fe");

    pc.out_dir = cfg.str("output.out_dir", "out");
    pc.seed = cfg.uint64("output.seed", 1);
    pc.validate();
    return pc;
}

void PipelineConfig::validate() const {
    if (!partners.empty() && partners.size() < 2) {
        throw ValidationError("config: partner set must have at least 2 members");
    }
    for (const auto& c : cee_partners) {
        if (!partners.empty() &&
            std::find(partners.begin(), partners.end(), c) == partners.end()) {
            throw ValidationError("config: cee partner '" + c + "' is not in the partner set");
        }
    }
    if (years && years->second - years->first + 1 < 4) {
        throw ValidationError("config: year range must cover at least 4 periods");
    }
    if (relations.empty()) throw ValidationError("config: relation list is empty");
    if (robust_mode != "auto" && robust_mode != "always" && robust_mode != "never") {
        throw ValidationError("config: robust_mode must be auto, always or never");
    }
    if (cd_residuals != "fe" && cd_residuals != "pooled") {
        throw ValidationError("config: cd_residuals must be fe or pooled");
    }
    if (instrument_lags < 1) throw ValidationError("config: instrument_lags must be >= 1");
    if (!(robust_alpha > 0 && robust_alpha < 1) || !(hausman_alpha > 0 && hausman_alpha < 1)) {
        throw ValidationError("config: significance thresholds must lie in (0,1)");
    }
}

std::string PipelineConfig::fingerprint() const {
    // Covers the input bytes and the semantic settings, never paths, so the
    // same data and configuration hash identically wherever the files live.
    std::ostringstream os;
    for (const auto* path : {&input, totals_input ? &*totals_input : nullptr}) {
        if (!path) continue;
        std::ifstream in(*path, std::ios::binary);
        if (in) os << in.rdbuf();
        os << '|';
    }
    os << reporter << '|';
    for (const auto& p : partners) os << p << ',';
    os << '|';
    for (const auto& p : cee_partners) os << p << ',';
    os << '|';
    if (years) os << years->first << '-' << years->second;
    os << '|' << max_gap << '|';
    for (const auto& r : relations) os << r.id() << ',';
    os << '|' << unit_root_lags << '|';
    for (const auto& v : trend_vars) os << v << ',';
    os << '|';
    for (const auto& v : endogenous) os << v << ',';
    os << '|' << instrument_lags << '|' << growth_shift << '|' << robust_alpha << '|'
       << robust_mode << '|' << hausman_alpha << '|' << cd_residuals << '|' << seed;

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

DgpSpec dgp_from_config(const ConfigFile& cfg) {
    DgpSpec spec;
    spec.n_entities = static_cast<int>(cfg.integer("mc.n_entities", spec.n_entities));
    spec.n_periods = static_cast<int>(cfg.integer("mc.n_periods", spec.n_periods));
    spec.n_cee = static_cast<int>(cfg.integer("mc.n_cee", spec.n_cee));
    spec.intercept = cfg.real("mc.intercept", spec.intercept);
    for (const auto& key : {"fdi", "gdpav", "gdpdif", "gdpcav", "gdpcdif", "gdpg", "popav",
                            "bexr", "dist", "dummy"}) {
        const std::string k = std::string("mc.beta_") + key;
        if (cfg.has(k)) spec.beta[key] = cfg.real(k, 0.0);
    }
    spec.effect_mode = cfg.str("mc.effect_mode", spec.effect_mode);
    spec.rho_effect = cfg.real("mc.rho_effect", spec.rho_effect);
    spec.sigma_effect = cfg.real("mc.sigma_effect", spec.sigma_effect);
    spec.sigma_eps = cfg.real("mc.sigma_eps", spec.sigma_eps);
    if (cfg.has("mc.endogeneity_fdi")) {
        spec.endogeneity["fdi"] = cfg.real("mc.endogeneity_fdi", 0.0);
    }
    spec.heteroskedasticity = cfg.str("mc.heteroskedasticity", spec.heteroskedasticity);
    spec.cross_dependence = cfg.real("mc.cross_dependence", spec.cross_dependence);
    spec.persistence = cfg.real("mc.persistence", spec.persistence);
    spec.seed = cfg.uint64("mc.seed", spec.seed);
    spec.validate();
    return spec;
}

}  // namespace gravipanel
