#pragma once

#include <map>
#include <optional>
#include <string>

namespace gravipanel {

// Thin wrappers around the reference distributions used for p-values.
// Upper-tail ("sf") forms are provided where tests are one-sided.

double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

double chi2_sf(double x, int df);
double chi2_quantile(double p, int df);

/// Two-sided p-value of a t statistic with the given residual df.
double t_two_sided_p(double t, long df);

double f_sf(double x, int df1, int df2);

/// Reference distribution of a test statistic.
enum class RefDist {
    StandardNormal,
    ChiSquare,
    FDist,
    FreesQ,  // tabulated/simulated critical values only, no closed-form CDF
};

/**
 * A named test statistic with its reference distribution and either a
 * p-value or a set of critical values (level -> value) when the reference
 * distribution has no closed-form CDF.
 */
struct TestResult {
    std::string name;
    double statistic = 0.0;
    RefDist ref = RefDist::StandardNormal;
    std::optional<int> df;                       // chi-square df
    std::optional<std::pair<int, int>> f_df;     // F numerator/denominator df
    std::optional<double> p_value;
    std::optional<std::map<double, double>> critical_values;
    std::string null_hypothesis;
    /// Where critical values came from: "embedded-table" or "simulated(...)".
    std::string provenance;
    /// Optional verdict string, e.g. the Hausman "Fixed"/"Random" annotation.
    std::optional<std::string> decision;
    /// Set when a degenerate case was clamped (e.g. negative Hausman form).
    bool clamped = false;
};

}  // namespace gravipanel
