#pragma once

#include <Eigen/Dense>
#include <map>

#include "gravipanel/estimators.hpp"
#include "gravipanel/panel.hpp"
#include "gravipanel/stats.hpp"

namespace gravipanel {

/// Residuals of a prior panel regression, reshaped to N x T.
struct ResidualPanel {
    PanelIndex index;
    Eigen::MatrixXd residuals;

    int n_entities() const { return static_cast<int>(residuals.rows()); }
    int n_periods() const { return static_cast<int>(residuals.cols()); }
};

/// Reshapes a full-sample estimation result into a residual panel.
ResidualPanel residual_panel(const EstimationResult& r, const PanelIndex& idx);

/// Pesaran CD: scaled sum of pairwise Pearson correlations, standard normal
/// under cross-sectional independence (two-sided p-value).
TestResult pesaran_cd(const ResidualPanel& r);

/// Friedman test: (N-1)[(T-1)*Rbar + 1] from average pairwise Spearman rank
/// correlations, chi-square with T-1 df (upper tail).
TestResult friedman_cd(const ResidualPanel& r);

/// Frees test: N*(Rbar^2 - 1/(T-1)) from squared Spearman correlations,
/// compared against critical values of the Frees Q distribution.
TestResult frees_cd(const ResidualPanel& r);

/// Critical values of the Frees Q distribution at the 10/5/1% levels for a
/// given T: the embedded table where available, otherwise a seeded
/// simulation of the weighted chi-square representation of Q.
std::map<double, double> frees_critical_values(int T, std::string* provenance = nullptr);

/// Average ranks (ties averaged), 1-based.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& v);

}  // namespace gravipanel
