#include "gravipanel/iv_diagnostics.hpp"

#include <cmath>

#include "gravipanel/regression.hpp"

namespace gravipanel {

namespace {

// First-stage residuals of every endogenous column on the full instrument set.
Eigen::MatrixXd first_stage_residuals(const IvFrame& f) {
    Eigen::MatrixXd V(f.n(), static_cast<long>(f.endog_cols.size()));
    for (std::size_t j = 0; j < f.endog_cols.size(); ++j) {
        const LinearFit fit = least_squares(f.Z, f.X.col(f.endog_cols[j]), &f.z_names);
        V.col(static_cast<long>(j)) = fit.residuals;
    }
    return V;
}

Eigen::VectorXd tsls_residuals(const IvFrame& f) {
    const long n = f.n();
    const int L = f.n_instruments();
    if (L < f.k()) {
        throw EstimationError("iv diagnostics: under-identified equation");
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> zqr(f.Z);
    const Eigen::MatrixXd Q = zqr.householderQ() * Eigen::MatrixXd::Identity(n, L);
    const Eigen::MatrixXd W = Q.transpose() * f.X;
    const Eigen::VectorXd wy = Q.transpose() * f.y;
    const LinearFit fit = least_squares(W, wy, &f.x_names);
    return f.y - f.X * fit.beta;
}

struct EndogeneityParts {
    double rss_restricted = 0.0;
    double rss_unrestricted = 0.0;
    long n = 0;
    int k = 0;       // structural coefficients incl. constant
    int n_endog = 0;
};

EndogeneityParts endogeneity_parts(const DesignMatrix& m, const IvSpec& iv) {
    if (iv.endogenous.empty()) {
        throw ValidationError("endogeneity tests are undefined with no endogenous regressors");
    }
    const IvFrame f = build_iv_frame(m, iv);
    const Eigen::MatrixXd V = first_stage_residuals(f);

    EndogeneityParts parts;
    parts.n = f.n();
    parts.k = f.k();
    parts.n_endog = static_cast<int>(f.endog_cols.size());

    parts.rss_restricted = least_squares(f.X, f.y, &f.x_names).ssr;

    Eigen::MatrixXd XV(f.n(), f.k() + V.cols());
    XV.leftCols(f.k()) = f.X;
    XV.rightCols(V.cols()) = V;
    std::vector<std::string> names = f.x_names;
    for (std::size_t j = 0; j < f.endog_cols.size(); ++j) {
        names.push_back("fs_resid_" + f.x_names[f.endog_cols[j]]);
    }
    try {
        parts.rss_unrestricted = least_squares(XV, f.y, &names).ssr;
    } catch (const EstimationError&) {
        throw EstimationError(
            "endogeneity tests: first-stage residuals are collinear with the regressors "
            "(weak-instrument degeneracy)");
    }
    return parts;
}

}  // namespace

TestResult wu_hausman(const DesignMatrix& m, const IvSpec& iv) {
    const EndogeneityParts parts = endogeneity_parts(m, iv);
    const long df2 = parts.n - parts.k - parts.n_endog;
    if (df2 <= 0) throw EstimationError("wu_hausman: no residual degrees of freedom");

    TestResult t;
    t.name = "Wu-Hausman";
    t.ref = RefDist::FDist;
    t.null_hypothesis = "regressors are exogenous";
    t.f_df = {parts.n_endog, static_cast<int>(df2)};
    t.statistic = ((parts.rss_restricted - parts.rss_unrestricted) / parts.n_endog) /
                  (parts.rss_unrestricted / static_cast<double>(df2));
    t.p_value = f_sf(t.statistic, parts.n_endog, static_cast<int>(df2));
    return t;
}

TestResult durbin_wu_hausman(const DesignMatrix& m, const IvSpec& iv) {
    const EndogeneityParts parts = endogeneity_parts(m, iv);

    TestResult t;
    t.name = "Durbin-Wu-Hausman";
    t.ref = RefDist::ChiSquare;
    t.null_hypothesis = "regressors are exogenous";
    t.df = parts.n_endog;
    t.statistic = static_cast<double>(parts.n) *
                  (parts.rss_restricted - parts.rss_unrestricted) / parts.rss_restricted;
    t.p_value = chi2_sf(t.statistic, parts.n_endog);
    return t;
}

TestResult pagan_hall(const DesignMatrix& m, const IvSpec& iv) {
    const IvFrame f = build_iv_frame(m, iv);
    const Eigen::VectorXd u = tsls_residuals(f);
    const long n = f.n();
    const int p = f.n_instruments() - 1;  // indicators exclude the constant
    if (p < 1) throw EstimationError("pagan_hall: no indicators besides the constant");

    Eigen::MatrixXd psi = f.Z.rightCols(p);
    psi.rowwise() -= psi.colwise().mean();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(psi);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        throw EstimationError("pagan_hall: indicator matrix is rank deficient");
    }

    const Eigen::VectorXd u2 = u.array().square();
    const double sigma2 = u2.mean();
    const double mu4 = u2.array().square().mean();
    const double spread = mu4 - sigma2 * sigma2;  // = mean((u^2 - sigma2)^2)
    if (spread <= 0.0) {
        throw EstimationError("pagan_hall: residuals have no fourth-moment spread");
    }

    const Eigen::VectorXd d = psi.transpose() * u2 / static_cast<double>(n);
    const Eigen::MatrixXd b = spread * (psi.transpose() * psi) / static_cast<double>(n);
    const Eigen::VectorXd bd = b.ldlt().solve(d);

    TestResult t;
    t.name = "Pagan-Hall";
    t.ref = RefDist::ChiSquare;
    t.null_hypothesis = "disturbance is homoskedastic";
    t.df = p;
    t.statistic = static_cast<double>(n) * d.dot(bd);
    t.p_value = chi2_sf(t.statistic, p);
    return t;
}

TestResult sargan(const DesignMatrix& m, const IvSpec& iv) {
    const IvFrame f = build_iv_frame(m, iv);

    TestResult t;
    t.name = "Sargan";
    t.ref = RefDist::ChiSquare;
    t.null_hypothesis = "all instruments are valid (over-identifying restrictions hold)";
    t.df = f.overid_df();
    if (*t.df == 0) {
        // Exactly identified: Z'u = 0 is an algebraic identity of the IV solution.
        t.statistic = 0.0;
        return t;
    }

    const Eigen::VectorXd u = tsls_residuals(f);
    const long n = f.n();
    Eigen::HouseholderQR<Eigen::MatrixXd> zqr(f.Z);
    const Eigen::MatrixXd Q =
        zqr.householderQ() * Eigen::MatrixXd::Identity(n, f.n_instruments());
    const double explained = (Q.transpose() * u).squaredNorm();
    t.statistic = explained / (u.squaredNorm() / static_cast<double>(n));
    t.p_value = chi2_sf(t.statistic, *t.df);
    return t;
}

TestResult hansen_j(const DesignMatrix& m, const IvSpec& iv) {
    const IvFrame f = build_iv_frame(m, iv);

    TestResult t;
    t.name = "Hansen J";
    t.ref = RefDist::ChiSquare;
    t.null_hypothesis = "all instruments are valid (over-identifying restrictions hold)";
    t.df = f.overid_df();
    if (*t.df == 0) {
        // The efficient GMM solution sets every moment to zero exactly.
        t.statistic = 0.0;
        return t;
    }

    const long n = f.n();
    const int L = f.n_instruments();
    const Eigen::VectorXd u1 = tsls_residuals(f);

    // Robust weighting matrix from the first-step residuals.
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(L, L);
    for (long i = 0; i < n; ++i) {
        S.noalias() += u1(i) * u1(i) * f.Z.row(i).transpose() * f.Z.row(i);
    }
    S /= static_cast<double>(n);
    const Eigen::LDLT<Eigen::MatrixXd> s_ldlt(S);
    if (s_ldlt.info() != Eigen::Success || !s_ldlt.isPositive()) {
        throw EstimationError("hansen_j: weighting matrix is not positive definite");
    }

    const Eigen::MatrixXd ZX = f.Z.transpose() * f.X;
    const Eigen::VectorXd Zy = f.Z.transpose() * f.y;
    const Eigen::MatrixXd SinvZX = s_ldlt.solve(ZX);
    const Eigen::MatrixXd A = ZX.transpose() * SinvZX;
    const Eigen::VectorXd bvec = SinvZX.transpose() * Zy;
    const Eigen::VectorXd beta = A.ldlt().solve(bvec);

    const Eigen::VectorXd g = f.Z.transpose() * (f.y - f.X * beta) / static_cast<double>(n);
    t.statistic = static_cast<double>(n) * g.dot(s_ldlt.solve(g));
    t.p_value = chi2_sf(t.statistic, *t.df);
    return t;
}

DiagnosticsBundle run_iv_diagnostics(const DesignMatrix& m, const IvSpec& iv,
                                     double robust_alpha) {
    DiagnosticsBundle b;
    b.wu_hausman = wu_hausman(m, iv);
    b.durbin_wu_hausman = durbin_wu_hausman(m, iv);
    b.pagan_hall = pagan_hall(m, iv);
    b.robust_recommended =
        b.pagan_hall.p_value.has_value() && *b.pagan_hall.p_value <= robust_alpha;
    if (b.robust_recommended) {
        b.overid = hansen_j(m, iv);
        b.used_hansen = true;
        b.notes = "Pagan-Hall rejected homoskedasticity; robust errors and Hansen J selected";
    } else {
        b.overid = sargan(m, iv);
        b.used_hansen = false;
        b.notes = "homoskedasticity not rejected; classical errors and Sargan selected";
    }
    return b;
}

}  // namespace gravipanel
