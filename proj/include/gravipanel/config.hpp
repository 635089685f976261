#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gravipanel/dgp.hpp"
#include "gravipanel/gravity.hpp"

namespace gravipanel {

/**
 * Flat structured-text configuration: `[section]` headers over `key = value`
 * lines; '#' starts a comment. Keys are addressed as "section.key".
 */
class ConfigFile {
public:
    static ConfigFile parse_file(const std::filesystem::path& path);
    static ConfigFile parse_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string str(const std::string& key, const std::string& fallback = "") const;
    std::string require(const std::string& key) const;
    long integer(const std::string& key, long fallback) const;
    std::uint64_t uint64(const std::string& key, std::uint64_t fallback) const;
    double real(const std::string& key, double fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::vector<std::string> list(const std::string& key) const;  // comma separated

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

/// Everything the pipeline needs; see the repository README for the key list.
struct PipelineConfig {
    std::filesystem::path input;
    std::string reporter;                  ///< empty means the file's only reporter
    std::vector<std::string> partners;     ///< empty means all partners in the file
    std::vector<std::string> cee_partners; ///< empty means the file's cee_partner flags
    std::optional<std::pair<int, int>> years;
    int max_gap = 1;

    std::vector<Relation> relations = Relation::all();
    int unit_root_lags = 2;
    std::vector<std::string> trend_vars;   ///< variables tested with a trend term
    std::vector<std::string> endogenous = {"fdi", "gdpg", "bexr"};
    int instrument_lags = 1;
    double growth_shift = 10.0;

    double robust_alpha = 0.05;
    std::string robust_mode = "auto";      ///< auto | always | never
    double hausman_alpha = 0.05;
    std::string cd_residuals = "fe";       ///< fe | pooled

    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> totals_input;

    static PipelineConfig from_config(const ConfigFile& cfg);
    void validate() const;
    /// FNV-1a hash over the canonical key=value serialization.
    std::string fingerprint() const;
};

/// Reads a DgpSpec from the [mc] section.
DgpSpec dgp_from_config(const ConfigFile& cfg);

}  // namespace gravipanel
