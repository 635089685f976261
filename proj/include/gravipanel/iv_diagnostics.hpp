#pragma once

#include "gravipanel/estimators.hpp"
#include "gravipanel/stats.hpp"

namespace gravipanel {

/// Wu-Hausman endogeneity test, F form: joint significance of the
/// first-stage residuals appended to the structural regression.
TestResult wu_hausman(const DesignMatrix& m, const IvSpec& iv);

/// Durbin-Wu-Hausman endogeneity test, score (chi-square) form.
TestResult durbin_wu_hausman(const DesignMatrix& m, const IvSpec& iv);

/**
 * Pagan-Hall general heteroskedasticity test on 2SLS residuals with the
 * instruments as indicator set. The fourth-moment studentisation keeps the
 * statistic valid under non-normal disturbances. Chi-square with df equal
 * to the number of indicators (constant excluded).
 */
TestResult pagan_hall(const DesignMatrix& m, const IvSpec& iv);

/// Sargan over-identification statistic u'P_Z u / (u'u/n); exactly 0 for an
/// exactly identified equation.
TestResult sargan(const DesignMatrix& m, const IvSpec& iv);

/// Hansen J: the two-step efficient GMM criterion with a
/// heteroskedasticity-robust weighting matrix.
TestResult hansen_j(const DesignMatrix& m, const IvSpec& iv);

/// The full battery plus the automated robust-path decision: when
/// Pagan-Hall rejects at `robust_alpha`, the bundle recommends robust 2SLS
/// errors and reports Hansen J instead of Sargan.
struct DiagnosticsBundle {
    TestResult wu_hausman;
    TestResult durbin_wu_hausman;
    TestResult pagan_hall;
    TestResult overid;
    bool used_hansen = false;
    bool robust_recommended = false;
    std::string notes;
};

DiagnosticsBundle run_iv_diagnostics(const DesignMatrix& m, const IvSpec& iv,
                                     double robust_alpha = 0.05);

}  // namespace gravipanel
