#include "gravipanel/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gravipanel/regression.hpp"

namespace gravipanel {

namespace {

Eigen::VectorXd tstats(const Eigen::VectorXd& coef, const Eigen::VectorXd& se) {
    Eigen::VectorXd t(coef.size());
    for (long j = 0; j < coef.size(); ++j) t(j) = coef(j) / se(j);
    return t;
}

Eigen::VectorXd pvalues(const Eigen::VectorXd& t, long df) {
    Eigen::VectorXd p(t.size());
    for (long j = 0; j < t.size(); ++j) p(j) = t_two_sided_p(t(j), df);
    return p;
}

// HC1 sandwich: (X'X)^{-1} X' diag(u^2) X (X'X)^{-1} * n/df.
Eigen::MatrixXd hc1_vcov(const Eigen::MatrixXd& X, const Eigen::VectorXd& resid,
                         const Eigen::MatrixXd& xtx_inv, long df) {
    const long n = X.rows();
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (long i = 0; i < n; ++i) {
        meat.noalias() += resid(i) * resid(i) * X.row(i).transpose() * X.row(i);
    }
    return xtx_inv * meat * xtx_inv * (static_cast<double>(n) / static_cast<double>(df));
}

void fill_inference(EstimationResult& r) {
    r.se.resize(r.coef.size());
    for (long j = 0; j < r.coef.size(); ++j) r.se(j) = std::sqrt(r.vcov(j, j));
    r.t = tstats(r.coef, r.se);
    r.p = pvalues(r.t, r.df_resid);
}

Eigen::VectorXd entity_means_of(const DesignMatrix& m, const Eigen::VectorXd& v) {
    const auto blocks = m.entity_blocks();
    Eigen::VectorXd out(static_cast<long>(blocks.size()));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        out(static_cast<long>(b)) = v.segment(blocks[b].first, blocks[b].second).mean();
    }
    return out;
}

void require_balanced(const DesignMatrix& m, const char* who) {
    const auto blocks = m.entity_blocks();
    for (const auto& [start, len] : blocks) {
        if (len != blocks.front().second) {
            throw EstimationError(std::string(who) + ": panel is unbalanced (entity block sizes " +
                                  std::to_string(blocks.front().second) + " vs " +
                                  std::to_string(len) + ")");
        }
    }
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::OLS: return "OLS";
        case Method::FixedEffects: return "FE";
        case Method::RandomEffects: return "RE";
        case Method::TwoSLS: return "2SLS";
    }
    return "?";
}

int EstimationResult::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

double EstimationResult::coef_of(const std::string& name) const {
    const int j = index(name);
    if (j < 0) throw EstimationError("no coefficient named '" + name + "'");
    return coef(j);
}

double EstimationResult::se_of(const std::string& name) const {
    const int j = index(name);
    if (j < 0) throw EstimationError("no coefficient named '" + name + "'");
    return se(j);
}

EstimationResult ols(const DesignMatrix& m, bool robust) {
    m.validate();
    std::vector<std::string> names = {"c"};
    names.insert(names.end(), m.names.begin(), m.names.end());
    const Eigen::MatrixXd X = with_intercept(m.X);
    const LinearFit fit = least_squares(X, m.y, &names);

    EstimationResult r;
    r.method = Method::OLS;
    r.names = names;
    r.coef = fit.beta;
    r.n_obs = fit.n;
    r.df_resid = fit.n - fit.k;
    if (r.df_resid <= 0) throw EstimationError("ols: no residual degrees of freedom");
    r.robust = robust;
    r.residuals = fit.residuals;
    r.entity_of_row = m.entity_of_row;
    r.period_of_row = m.period_of_row;
    if (robust) {
        r.vcov = hc1_vcov(X, fit.residuals, fit.xtx_inv, r.df_resid);
    } else {
        r.vcov = (fit.ssr / r.df_resid) * fit.xtx_inv;
    }
    fill_inference(r);
    return r;
}

EstimationResult fixed_effects(const DesignMatrix& m, bool robust) {
    const DesignMatrix w = within_transform(m);

    std::vector<int> tv_cols;
    for (int c = 0; c < m.n_cols(); ++c) {
        if (std::find(w.degenerate.begin(), w.degenerate.end(), m.names[c]) ==
            w.degenerate.end()) {
            tv_cols.push_back(c);
        }
    }
    if (tv_cols.empty()) {
        throw EstimationError("fixed_effects: every regressor is time-invariant, "
                              "nothing left to estimate after the within transform");
    }

    // Demeaned data with grand means restored; the intercept then estimates
    // the mean of the entity effects while slopes match the pure within fit.
    const long n = m.n_rows();
    const int N = static_cast<int>(m.entity_blocks().size());
    const int k = static_cast<int>(tv_cols.size());
    Eigen::MatrixXd X(n, k + 1);
    X.col(0).setOnes();
    std::vector<std::string> names = {"c"};
    for (int j = 0; j < k; ++j) {
        const int c = tv_cols[j];
        X.col(j + 1) = w.X.col(c).array() + m.X.col(c).mean();
        names.push_back(m.names[c]);
    }
    const Eigen::VectorXd y = w.y.array() + m.y.mean();

    const LinearFit fit = least_squares(X, y, &names);
    const long df = n - N - k;
    if (df <= 0) {
        throw EstimationError("fixed_effects: no residual degrees of freedom (n=" +
                              std::to_string(n) + ", N=" + std::to_string(N) +
                              ", k=" + std::to_string(k) + ")");
    }

    Eigen::MatrixXd vcov_full;
    if (robust) {
        vcov_full = hc1_vcov(X, fit.residuals, fit.xtx_inv, df);
    } else {
        vcov_full = (fit.ssr / df) * fit.xtx_inv;
    }

    EstimationResult r;
    r.method = Method::FixedEffects;
    r.robust = robust;
    r.n_obs = n;
    r.df_resid = df;
    r.names.assign(names.begin() + 1, names.end());
    r.coef = fit.beta.tail(k);
    r.vcov = vcov_full.bottomRightCorner(k, k);
    for (const auto& d : w.degenerate) r.dropped.push_back(d);
    r.residuals = fit.residuals;  // identical to the within residuals
    r.entity_of_row = m.entity_of_row;
    r.period_of_row = m.period_of_row;
    fill_inference(r);

    FeConstant c;
    c.value = fit.beta(0);
    c.se = std::sqrt(vcov_full(0, 0));
    c.t = c.value / c.se;
    c.p = t_two_sided_p(c.t, df);
    r.fe_constant = c;
    return r;
}

std::vector<double> entity_effects(const DesignMatrix& m, const EstimationResult& fe) {
    const auto blocks = m.entity_blocks();
    std::vector<double> alpha;
    alpha.reserve(blocks.size());
    for (const auto& [start, len] : blocks) {
        double a = m.y.segment(start, len).mean();
        for (std::size_t j = 0; j < fe.names.size(); ++j) {
            const int c = m.col(fe.names[j]);
            a -= fe.coef(static_cast<long>(j)) * m.X.middleRows(start, len).col(c).mean();
        }
        alpha.push_back(a);
    }
    return alpha;
}

EstimationResult random_effects(const DesignMatrix& m, std::optional<double> theta_override,
                                ReVariance variance) {
    m.validate();
    require_balanced(m, "random_effects");
    const auto blocks = m.entity_blocks();
    const int N = static_cast<int>(blocks.size());
    const long T = blocks.front().second;
    const long n = m.n_rows();

    if (!theta_override && N < 3) {
        throw EstimationError("random_effects: need at least 3 entities, got " +
                              std::to_string(N));
    }

    VarianceComponents vc;
    double theta = 0.0;
    if (theta_override) {
        if (!(*theta_override >= 0.0 && *theta_override <= 1.0)) {
            throw ValidationError("random_effects: theta override must lie in [0,1]");
        }
        theta = *theta_override;
        vc.theta = theta;
        vc.method = "override";
    } else {
        // sigma2_e from the within regression.
        const EstimationResult fe = fixed_effects(m);
        const int k_tv = static_cast<int>(fe.names.size());
        vc.sigma2_e = fe.residuals.squaredNorm() / static_cast<double>(n - N - k_tv);

        const int k_b = m.n_cols() + 1;  // between regression includes an intercept
        const bool sa_identified = N > k_b;
        if (variance == ReVariance::SwamyArora && !sa_identified) {
            throw EstimationError(
                "random_effects: between regression under-identified (" + std::to_string(N) +
                " entities for " + std::to_string(k_b) +
                " between parameters); use the Nerlove variance estimator");
        }
        if ((variance == ReVariance::SwamyArora || variance == ReVariance::Auto) &&
            sa_identified) {
            Eigen::MatrixXd B(N, k_b);
            B.col(0).setOnes();
            for (int c = 0; c < m.n_cols(); ++c) B.col(c + 1) = entity_means_of(m, m.X.col(c));
            const Eigen::VectorXd yb = entity_means_of(m, m.y);
            const LinearFit bfit = least_squares(B, yb);
            const double s2_between = bfit.ssr / static_cast<double>(N - k_b);
            vc.sigma2_u = std::max(0.0, s2_between - vc.sigma2_e / static_cast<double>(T));
            vc.method = "swamy-arora";
        } else {
            // Nerlove: dispersion of the estimated entity intercepts.
            const std::vector<double> alpha = entity_effects(m, fe);
            double mean = 0.0;
            for (double a : alpha) mean += a;
            mean /= N;
            double ss = 0.0;
            for (double a : alpha) ss += (a - mean) * (a - mean);
            vc.sigma2_u = ss / static_cast<double>(N - 1);
            vc.method = "nerlove";
        }
        theta = 1.0 - std::sqrt(vc.sigma2_e /
                                (static_cast<double>(T) * vc.sigma2_u + vc.sigma2_e));
        vc.theta = theta;
    }

    // Quasi-demean the full design including the intercept column.
    DesignMatrix aug = m;
    aug.names.insert(aug.names.begin(), "c");
    aug.X.conservativeResize(n, m.n_cols() + 1);
    for (int c = m.n_cols(); c > 0; --c) aug.X.col(c) = aug.X.col(c - 1);
    aug.X.col(0).setOnes();
    const DesignMatrix q = quasi_demean(aug, Eigen::VectorXd::Constant(N, theta));

    std::vector<int> keep;
    std::vector<std::string> kept_names, dropped;
    for (int c = 0; c < q.n_cols(); ++c) {
        if (std::find(q.degenerate.begin(), q.degenerate.end(), q.names[c]) ==
            q.degenerate.end()) {
            keep.push_back(c);
            kept_names.push_back(q.names[c]);
        } else {
            dropped.push_back(q.names[c]);
        }
    }
    if (keep.empty()) throw EstimationError("random_effects: nothing left to estimate");
    Eigen::MatrixXd Xq(n, static_cast<long>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) Xq.col(static_cast<long>(j)) = q.X.col(keep[j]);

    const LinearFit fit = least_squares(Xq, q.y, &kept_names);
    const long df = n - static_cast<long>(keep.size());
    if (df <= 0) throw EstimationError("random_effects: no residual degrees of freedom");

    EstimationResult r;
    r.method = Method::RandomEffects;
    r.names = kept_names;
    r.coef = fit.beta;
    r.vcov = (fit.ssr / df) * fit.xtx_inv;
    r.n_obs = n;
    r.df_resid = df;
    r.dropped = dropped;
    r.variance_components = vc;
    r.entity_of_row = m.entity_of_row;
    r.period_of_row = m.period_of_row;

    // Composite residuals on the original scale.
    Eigen::VectorXd fitted = Eigen::VectorXd::Zero(n);
    for (std::size_t j = 0; j < kept_names.size(); ++j) {
        if (kept_names[j] == "c") {
            fitted.array() += fit.beta(static_cast<long>(j));
        } else {
            fitted += fit.beta(static_cast<long>(j)) * m.X.col(m.col(kept_names[j]));
        }
    }
    r.residuals = m.y - fitted;
    fill_inference(r);
    return r;
}

TestResult hausman_test(const EstimationResult& fe, const EstimationResult& re, double alpha) {
    std::vector<std::string> common;
    for (const auto& name : fe.names) {
        if (re.index(name) >= 0) common.push_back(name);
    }
    if (common.empty()) {
        throw EstimationError("hausman_test: the two results share no coefficients");
    }

    const int k = static_cast<int>(common.size());
    Eigen::VectorXd q(k);
    Eigen::MatrixXd dv(k, k);
    for (int a = 0; a < k; ++a) {
        const int fa = fe.index(common[a]);
        const int ra = re.index(common[a]);
        q(a) = fe.coef(fa) - re.coef(ra);
        for (int b = 0; b < k; ++b) {
            const int fb = fe.index(common[b]);
            const int rb = re.index(common[b]);
            dv(a, b) = fe.vcov(fa, fb) - re.vcov(ra, rb);
        }
    }

    int rank = 0;
    const Eigen::MatrixXd pinv = pseudo_inverse_sym(dv, &rank);

    TestResult t;
    t.name = "Hausman";
    t.ref = RefDist::ChiSquare;
    t.null_hypothesis = "coefficient differences are not systematic (random effects consistent)";
    double h = rank > 0 ? q.dot(pinv * q) : 0.0;
    if (h < 0.0) {
        h = 0.0;
        t.clamped = true;
    }
    t.statistic = h;
    t.df = rank;
    t.p_value = rank > 0 ? chi2_sf(h, rank) : 1.0;
    t.decision = (*t.p_value <= alpha) ? "Fixed" : "Random";
    return t;
}

IvFrame build_iv_frame(const DesignMatrix& m, const IvSpec& iv) {
    m.validate();
    if (iv.instrument_lags < 0) throw ValidationError("IvSpec: instrument_lags must be >= 0");
    std::set<std::string> endog(iv.endogenous.begin(), iv.endogenous.end());
    std::set<std::string> extra(iv.extra_instruments.begin(), iv.extra_instruments.end());
    for (const auto& e : iv.endogenous) m.col(e);  // existence check
    for (const auto& e : iv.extra_instruments) {
        m.col(e);
        if (endog.count(e)) {
            throw ValidationError("IvSpec: '" + e + "' cannot be endogenous and an instrument");
        }
    }

    std::vector<int> endog_idx, exog_idx, extra_idx;
    for (int c = 0; c < m.n_cols(); ++c) {
        if (endog.count(m.names[c])) {
            endog_idx.push_back(c);
        } else if (extra.count(m.names[c])) {
            extra_idx.push_back(c);
        } else {
            exog_idx.push_back(c);
        }
    }
    if (endog_idx.size() != endog.size()) {
        throw ValidationError("IvSpec: an endogenous name is not a design column");
    }

    const int lags = endog_idx.empty() ? 0 : iv.instrument_lags;
    const auto blocks = m.entity_blocks();
    for (const auto& [start, len] : blocks) {
        for (long r = 1; r < len; ++r) {
            if (m.period_of_row[start + r] != m.period_of_row[start + r - 1] + 1) {
                throw ValidationError(
                    "build_iv_frame: periods are not consecutive within an entity; "
                    "lag instruments undefined");
            }
        }
        if (len <= lags) {
            throw EstimationError("build_iv_frame: entity block of length " +
                                  std::to_string(len) + " cannot supply lag order " +
                                  std::to_string(lags));
        }
    }

    std::vector<long> keep_rows;
    for (const auto& [start, len] : blocks) {
        for (long r = lags; r < len; ++r) keep_rows.push_back(start + r);
    }
    const long n = static_cast<long>(keep_rows.size());

    IvFrame f;
    f.rows_dropped = m.n_rows() - n;

    const int k_struct = 1 + static_cast<int>(exog_idx.size() + endog_idx.size());
    f.X.resize(n, k_struct);
    f.x_names = {"c"};
    {
        int col = 0;
        f.X.col(col++).setOnes();
        for (int c : exog_idx) {
            f.x_names.push_back(m.names[c]);
            for (long r = 0; r < n; ++r) f.X(r, col) = m.X(keep_rows[r], c);
            ++col;
        }
        for (int c : endog_idx) {
            f.endog_cols.push_back(col);
            f.x_names.push_back(m.names[c]);
            for (long r = 0; r < n; ++r) f.X(r, col) = m.X(keep_rows[r], c);
            ++col;
        }
    }

    f.n_excluded = static_cast<int>(endog_idx.size()) * lags + static_cast<int>(extra_idx.size());
    const int k_inst = 1 + static_cast<int>(exog_idx.size()) + f.n_excluded;
    f.Z.resize(n, k_inst);
    f.z_names = {"c"};
    {
        int col = 0;
        f.Z.col(col++).setOnes();
        for (int c : exog_idx) {
            f.z_names.push_back(m.names[c]);
            for (long r = 0; r < n; ++r) f.Z(r, col) = m.X(keep_rows[r], c);
            ++col;
        }
        // Lag instruments: the kept row at global index g reaches back along
        // the entity block, which is safe because the first `lags` rows of
        // every block were dropped.
        for (int c : endog_idx) {
            for (int l = 1; l <= lags; ++l) {
                f.z_names.push_back(m.names[c] + "_lag" + std::to_string(l));
                for (long r = 0; r < n; ++r) f.Z(r, col) = m.X(keep_rows[r] - l, c);
                ++col;
            }
        }
        for (int c : extra_idx) {
            f.z_names.push_back(m.names[c]);
            for (long r = 0; r < n; ++r) f.Z(r, col) = m.X(keep_rows[r], c);
            ++col;
        }
    }

    if (f.n_excluded < static_cast<int>(endog_idx.size())) {
        throw EstimationError("build_iv_frame: order condition fails, " +
                              std::to_string(f.n_excluded) + " excluded instruments for " +
                              std::to_string(endog_idx.size()) + " endogenous regressors");
    }

    f.y.resize(n);
    f.entity_of_row.resize(n);
    f.period_of_row.resize(n);
    for (long r = 0; r < n; ++r) {
        f.y(r) = m.y(keep_rows[r]);
        f.entity_of_row[r] = m.entity_of_row[keep_rows[r]];
        f.period_of_row[r] = m.period_of_row[keep_rows[r]];
    }
    return f;
}

EstimationResult two_sls(const DesignMatrix& m, const IvSpec& iv, bool robust) {
    const IvFrame f = build_iv_frame(m, iv);
    const long n = f.n();
    const int k = f.k();
    const int L = f.n_instruments();
    if (L < k) {
        throw EstimationError("two_sls: under-identified, " + std::to_string(L) +
                              " instruments for " + std::to_string(k) + " coefficients");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> zqr(f.Z);
    zqr.setThreshold(1e-10);
    if (zqr.rank() < L) {
        const auto perm = zqr.colsPermutation().indices();
        throw EstimationError("two_sls: rank-deficient instrument matrix, column '" +
                              f.z_names[perm(zqr.rank())] + "' is collinear");
    }
    const Eigen::MatrixXd Q =
        zqr.householderQ() * Eigen::MatrixXd::Identity(n, L);  // thin basis of span(Z)

    // beta = argmin || Q'y - Q'X b ||, i.e. least squares on the projected system.
    const Eigen::MatrixXd W = Q.transpose() * f.X;
    const Eigen::VectorXd wy = Q.transpose() * f.y;
    const LinearFit fit = least_squares(W, wy, &f.x_names);

    EstimationResult r;
    r.method = Method::TwoSLS;
    r.names = f.x_names;
    r.coef = fit.beta;
    r.n_obs = n;
    r.df_resid = n - k;
    if (r.df_resid <= 0) throw EstimationError("two_sls: no residual degrees of freedom");
    r.robust = robust;
    r.rows_dropped = f.rows_dropped;
    r.residuals = f.y - f.X * fit.beta;  // structural residuals
    r.entity_of_row = f.entity_of_row;
    r.period_of_row = f.period_of_row;

    if (robust) {
        const Eigen::MatrixXd xhat = Q * W;  // P_Z X
        r.vcov = hc1_vcov(xhat, r.residuals, fit.xtx_inv, r.df_resid);
    } else {
        const double s2 = r.residuals.squaredNorm() / static_cast<double>(r.df_resid);
        r.vcov = s2 * fit.xtx_inv;
    }
    fill_inference(r);

    for (int e : f.endog_cols) {
        const LinearFit fs = least_squares(f.Z, f.X.col(e), &f.z_names);
        EstimationResult s;
        s.method = Method::OLS;
        s.names = f.z_names;
        s.coef = fs.beta;
        s.n_obs = n;
        s.df_resid = n - L;
        s.vcov = (fs.ssr / std::max<long>(1, s.df_resid)) * fs.xtx_inv;
        s.residuals = fs.residuals;
        fill_inference(s);
        r.first_stage.push_back(std::move(s));
    }
    return r;
}

}  // namespace gravipanel
