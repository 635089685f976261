#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gravipanel/panel.hpp"

namespace gravipanel {

enum class Deterministic { Constant, ConstantTrend };

std::string deterministic_name(Deterministic d);

/// Specification of an (augmented) Dickey-Fuller regression.
struct AdfSpec {
    Deterministic det = Deterministic::Constant;
    int lags = 2;

    void validate(int T) const;  // lags in [0, T-4]
};

/**
 * t-statistic of the level coefficient in
 *   dy_t = a (+ b t) + rho y_{t-1} + sum_l c_l dy_{t-l} + e_t
 * fitted by least squares on the T-1-p usable rows.
 */
double adf_t(const Eigen::VectorXd& y, const AdfSpec& spec);

struct UnitRootResult {
    std::string test;  ///< "IPS" or "CADF"
    AdfSpec spec;
    std::vector<double> per_entity_t;
    double tbar = 0.0;
    std::optional<double> standardized;  ///< IPS only
    std::optional<double> p_value;
    std::map<double, double> critical_values;  ///< level -> tbar critical value
    std::string provenance;                     ///< "embedded-table" or "simulated(...)"
};

/// Default master seeds of the null-distribution simulations.
inline constexpr std::uint64_t kIpsMomentSeed = 0x49505331u;
inline constexpr std::uint64_t kCipsSeed = 0x43495053u;

/// Null-distribution moments of the single-series ADF t statistic, obtained
/// by seeded simulation and cached per (T, lags, deterministic, seed).
struct TbarMoments {
    double mean = 0.0;
    double variance = 0.0;
    std::string provenance;
};
TbarMoments ips_tbar_moments(int T, const AdfSpec& spec,
                             std::uint64_t seed = kIpsMomentSeed);

/**
 * Im-Pesaran-Shin t-bar test: averages the entity ADF t statistics and
 * standardises with the simulated moments; one-sided lower-tail p-value
 * from the standard normal.
 */
UnitRootResult ips_test(const PanelSeries& panel, const AdfSpec& spec,
                        std::uint64_t seed = kIpsMomentSeed);

/// Simulated null distribution of the CIPS statistic (sorted), cached per
/// (N, T, lags, deterministic, seed). Simulated under a cross-sectionally
/// correlated random-walk null.
const std::vector<double>& cips_null_distribution(int N, int T, const AdfSpec& spec,
                                                  std::string* provenance = nullptr,
                                                  std::uint64_t seed = kCipsSeed);

/**
 * Pesaran CADF/CIPS test: every entity regression is augmented with the
 * lagged cross-section average and current plus p lags of its difference;
 * the CIPS statistic is the mean CADF t. p-values and critical values come
 * from the seeded null simulation.
 */
UnitRootResult cadf_test(const PanelSeries& panel, const AdfSpec& spec,
                         std::uint64_t seed = kCipsSeed);

}  // namespace gravipanel
