#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gravipanel/panel.hpp"
#include "gravipanel/stats.hpp"

namespace gravipanel {

enum class Method { OLS, FixedEffects, RandomEffects, TwoSLS };

std::string method_name(Method m);

/// Random-effects variance components.
struct VarianceComponents {
    double sigma2_e = 0.0;  ///< idiosyncratic
    double sigma2_u = 0.0;  ///< entity effect
    double theta = 0.0;     ///< quasi-demeaning weight
    std::string method;     ///< "swamy-arora" or "nerlove"
};

/// Grand-mean-restored constant reported for fixed effects.
struct FeConstant {
    double value = 0.0;
    double se = 0.0;
    double t = 0.0;
    double p = 1.0;
};

struct EstimationResult {
    Method method = Method::OLS;
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::MatrixXd vcov;
    Eigen::VectorXd se, t, p;
    long n_obs = 0;
    long df_resid = 0;
    std::vector<std::string> dropped;  ///< regressors removed (time-invariant under FE)
    bool robust = false;
    std::optional<VarianceComponents> variance_components;
    std::optional<FeConstant> fe_constant;
    Eigen::VectorXd residuals;  ///< structural-scale residuals on the estimation sample
    std::vector<std::int32_t> entity_of_row, period_of_row;
    long rows_dropped = 0;  ///< rows lost to lag construction (2SLS)
    std::vector<EstimationResult> first_stage;

    int index(const std::string& name) const;  ///< -1 when absent
    double coef_of(const std::string& name) const;
    double se_of(const std::string& name) const;
};

/// Pooled OLS with intercept; classical or HC1 sandwich covariance.
EstimationResult ols(const DesignMatrix& m, bool robust = false);

/**
 * Within (fixed-effects) estimator. Time-invariant regressors are dropped
 * and reported; the constant is restored at the grand mean and kept out of
 * the coefficient vector. Residual df is n - N - k.
 */
EstimationResult fixed_effects(const DesignMatrix& m, bool robust = false);

/// Per-entity intercepts implied by a fixed-effects fit.
std::vector<double> entity_effects(const DesignMatrix& m, const EstimationResult& fe);

enum class ReVariance {
    SwamyArora,  ///< between-regression components; errors when under-identified
    Nerlove,     ///< dispersion of the fixed-effect intercepts
    Auto,        ///< Swamy-Arora, falling back to Nerlove when under-identified
};

/**
 * Random-effects GLS via quasi-demeaning. theta_override pins theta
 * directly (0 = pooled OLS, 1 = within) and is meant for limit checks.
 */
EstimationResult random_effects(const DesignMatrix& m,
                                std::optional<double> theta_override = {},
                                ReVariance variance = ReVariance::SwamyArora);

/**
 * Hausman specification test on the coefficients present in both results
 * (time-varying only), using a pseudo-inverse of the covariance difference
 * and its rank as df. The decision annotation is "Fixed" when p <= alpha.
 */
TestResult hausman_test(const EstimationResult& fe, const EstimationResult& re,
                        double alpha = 0.05);

/// Instrumenting rule: lags 1..instrument_lags of every endogenous
/// regressor, plus all exogenous regressors, plus any columns of the design
/// matrix listed as excluded instruments.
struct IvSpec {
    std::vector<std::string> endogenous;
    int instrument_lags = 1;
    std::vector<std::string> extra_instruments;
};

/// The common 2SLS estimation frame shared with the diagnostic battery.
struct IvFrame {
    Eigen::MatrixXd X;  ///< [const | regressors] on the estimation sample
    Eigen::MatrixXd Z;  ///< [const | exogenous | lag instruments | extra]
    Eigen::VectorXd y;
    std::vector<std::string> x_names, z_names;
    std::vector<int> endog_cols;  ///< positions of endogenous columns in X
    int n_excluded = 0;           ///< excluded instruments (lags + extra)
    long rows_dropped = 0;
    std::vector<std::int32_t> entity_of_row, period_of_row;

    long n() const { return X.rows(); }
    int k() const { return static_cast<int>(X.cols()); }
    int n_instruments() const { return static_cast<int>(Z.cols()); }
    int overid_df() const { return n_excluded - static_cast<int>(endog_cols.size()); }
};

IvFrame build_iv_frame(const DesignMatrix& m, const IvSpec& iv);

/// Two-stage least squares with classical or HC1 sandwich covariance.
EstimationResult two_sls(const DesignMatrix& m, const IvSpec& iv, bool robust = false);

}  // namespace gravipanel
