#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gravipanel/estimators.hpp"
#include "gravipanel/regression.hpp"
#include "gravipanel/rng.hpp"
#include "gravipanel/stats.hpp"

using namespace gravipanel;

namespace {

DesignMatrix make_design(int N, int T, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         std::vector<std::string> names) {
    DesignMatrix m;
    m.n_entities = N;
    m.X = X;
    m.y = y;
    m.names = std::move(names);
    m.y_name = "y";
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
            m.entity_of_row.push_back(i);
            m.period_of_row.push_back(t);
        }
    return m;
}

DesignMatrix random_panel(Rng& rng, int N, int T, int k, bool with_entity_effects = true) {
    const long n = static_cast<long>(N) * T;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    std::vector<std::string> names;
    for (int c = 0; c < k; ++c) names.push_back("x" + std::to_string(c));
    long r = 0;
    for (int i = 0; i < N; ++i) {
        const double alpha = with_entity_effects ? rng.normal(0.0, 1.0) : 0.0;
        for (int t = 0; t < T; ++t, ++r) {
            double mean = alpha;
            for (int c = 0; c < k; ++c) {
                X(r, c) = rng.normal();
                mean += (c + 1) * 0.5 * X(r, c);
            }
            y(r) = mean + rng.normal(0.0, 0.3);
        }
    }
    return make_design(N, T, X, y, names);
}

// Brute-force (X'X)^{-1} X'y with explicit matrix inversion.
Eigen::VectorXd normal_equations_oracle(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd xtx = X.transpose() * X;
    return xtx.inverse() * (X.transpose() * y);
}

// LSDV oracle: OLS with one explicit dummy per entity (no global intercept).
Eigen::VectorXd lsdv_slopes(const DesignMatrix& m) {
    const long n = m.n_rows();
    const int N = m.n_entities;
    const int k = m.n_cols();
    Eigen::MatrixXd X(n, N + k);
    X.setZero();
    for (long r = 0; r < n; ++r) X(r, m.entity_of_row[r]) = 1.0;
    X.rightCols(k) = m.X;
    const Eigen::VectorXd beta = normal_equations_oracle(X, m.y);
    return beta.tail(k);
}

}  // namespace

TEST_CASE("ols recovers an exact linear relation") {
    Rng rng(3);
    const int n = 20;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        y(i) = 3.0 + 2.0 * X(i, 0);
    }
    const DesignMatrix m = make_design(1, n, X, y, {"x"});
    const EstimationResult r = ols(m);
    CHECK(r.coef_of("c") == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.coef_of("x") == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.residuals.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ols rejects duplicated columns naming the culprit") {
    Rng rng(4);
    const int n = 15;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = X(i, 0);
        y(i) = X(i, 0);
    }
    const DesignMatrix m = make_design(1, n, X, y, {"x1", "x2"});
    CHECK_THROWS_AS(ols(m), EstimationError);
}

TEST_CASE("ols matches the explicit normal-equations oracle") {
    Rng rng(5);
    const int n = 50, k = 4;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c) X(i, c) = rng.normal();
        y(i) = rng.normal();
    }
    const DesignMatrix m = make_design(1, n, X, y, {"a", "b", "c2", "d"});
    const EstimationResult r = ols(m);
    const Eigen::VectorXd oracle = normal_equations_oracle(with_intercept(X), y);
    CHECK((r.coef - oracle).cwiseAbs().maxCoeff() < 1e-9);

    // classical se identity: se_j = sqrt(vcov_jj), t = coef/se
    for (long j = 0; j < r.coef.size(); ++j) {
        CHECK(r.se(j) == doctest::Approx(std::sqrt(r.vcov(j, j))).epsilon(1e-12));
        CHECK(r.t(j) == doctest::Approx(r.coef(j) / r.se(j)).epsilon(1e-12));
    }
}

TEST_CASE("fixed effects recovers the slope under entity intercepts exactly") {
    Rng rng(6);
    const int N = 4, T = 6;
    Eigen::MatrixXd X(N * T, 1);
    Eigen::VectorXd y(N * T);
    long r = 0;
    for (int i = 0; i < N; ++i) {
        const double alpha = 10.0 * (i + 1);
        for (int t = 0; t < T; ++t, ++r) {
            X(r, 0) = rng.normal();
            y(r) = 2.0 * X(r, 0) + alpha;
        }
    }
    const DesignMatrix m = make_design(N, T, X, y, {"x"});
    const EstimationResult fe = fixed_effects(m);
    CHECK(fe.coef_of("x") == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fe.residuals.cwiseAbs().maxCoeff() < 1e-9);

    const std::vector<double> effects = entity_effects(m, fe);
    for (int i = 0; i < N; ++i) CHECK(effects[i] == doctest::Approx(10.0 * (i + 1)).epsilon(1e-9));
}

TEST_CASE("fixed effects drops time-invariant columns and reports them") {
    Rng rng(7);
    DesignMatrix m = random_panel(rng, 3, 5, 2);
    // add a time-invariant column
    Eigen::MatrixXd X(m.n_rows(), 3);
    X.leftCols(2) = m.X;
    for (long r = 0; r < m.n_rows(); ++r) X(r, 2) = 100.0 + m.entity_of_row[r];
    m.X = X;
    m.names.push_back("dist");

    const EstimationResult fe = fixed_effects(m);
    CHECK(fe.index("dist") == -1);
    REQUIRE(fe.dropped.size() == 1);
    CHECK(fe.dropped[0] == "dist");
    CHECK(fe.fe_constant.has_value());
}

TEST_CASE("fixed effects errors when every regressor is time-invariant") {
    const int N = 3, T = 4;
    Eigen::MatrixXd X(N * T, 1);
    Eigen::VectorXd y(N * T);
    Rng rng(8);
    long r = 0;
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t, ++r) {
            X(r, 0) = i + 1.0;
            y(r) = rng.normal();
        }
    const DesignMatrix m = make_design(N, T, X, y, {"dist"});
    CHECK_THROWS_AS(fixed_effects(m), EstimationError);
}

TEST_CASE("fixed effects equals the LSDV oracle on random panels") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int N = 3 + rng.uniform_int(0, 5);
        const int T = 5 + rng.uniform_int(0, 8);
        const int k = 2 + rng.uniform_int(0, 2);
        const DesignMatrix m = random_panel(rng, N, T, k);
        const EstimationResult fe = fixed_effects(m);
        const Eigen::VectorXd oracle = lsdv_slopes(m);
        CHECK((fe.coef - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("fixed effects slopes are invariant to entity-specific shifts of y") {
    Rng rng(10);
    DesignMatrix m = random_panel(rng, 4, 7, 2);
    const EstimationResult base = fixed_effects(m);

    DesignMatrix shifted = m;
    for (long r = 0; r < m.n_rows(); ++r) shifted.y(r) += 37.5 * (m.entity_of_row[r] + 1);
    const EstimationResult after = fixed_effects(shifted);
    CHECK((base.coef - after.coef).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("random effects limits") {
    Rng rng(11);
    const DesignMatrix m = random_panel(rng, 5, 6, 2);

    SUBCASE("theta forced to 0 reproduces pooled OLS exactly") {
        const EstimationResult re = random_effects(m, 0.0);
        const EstimationResult pooled = ols(m);
        for (const auto& name : pooled.names) {
            CHECK(re.coef_of(name) == doctest::Approx(pooled.coef_of(name)).epsilon(1e-12));
        }
        CHECK((re.vcov - pooled.vcov).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("theta forced to 1 reproduces the within slopes") {
        const EstimationResult re = random_effects(m, 1.0);
        const EstimationResult fe = fixed_effects(m);
        for (const auto& name : fe.names) {
            CHECK(re.coef_of(name) == doctest::Approx(fe.coef_of(name)).epsilon(1e-10));
        }
        CHECK(re.index("c") == -1);  // intercept degenerates under full demeaning
    }
}

TEST_CASE("random effects swamy-arora components") {
    Rng rng(12);
    const int N = 12, T = 8;
    const DesignMatrix m = random_panel(rng, N, T, 2);
    const EstimationResult re = random_effects(m);
    REQUIRE(re.variance_components.has_value());
    const VarianceComponents& vc = *re.variance_components;
    CHECK(vc.method == "swamy-arora");
    CHECK(vc.sigma2_e > 0);
    CHECK(vc.theta >= 0.0);
    CHECK(vc.theta <= 1.0);
    // theta formula
    CHECK(vc.theta ==
          doctest::Approx(1.0 - std::sqrt(vc.sigma2_e / (T * vc.sigma2_u + vc.sigma2_e)))
              .epsilon(1e-12));
    CHECK(re.index("c") == 0);

    // sigma2_u = 0 would mean theta = 0; with planted effects it should be far from it
    CHECK(vc.sigma2_u > 0.1);
}

TEST_CASE("random effects: theta approaches 1 as T grows with positive effect variance") {
    Rng rng(13);
    const DesignMatrix m = random_panel(rng, 4, 2000, 1);
    const EstimationResult re = random_effects(m);
    CHECK(std::abs(re.variance_components->theta - 1.0) < 0.05);
}

TEST_CASE("random effects falls back to Nerlove when between is under-identified") {
    Rng rng(14);
    // N=4 entities but 4 regressors + intercept = 5 between parameters
    const DesignMatrix m = random_panel(rng, 4, 9, 4);
    CHECK_THROWS_WITH_AS(random_effects(m, {}, ReVariance::SwamyArora),
                         doctest::Contains("under-identified"), EstimationError);
    const EstimationResult re = random_effects(m, {}, ReVariance::Auto);
    CHECK(re.variance_components->method == "nerlove");
    CHECK(re.variance_components->sigma2_u > 0);
}

TEST_CASE("random effects consistency under an RE-consistent DGP") {
    // effects independent of regressors, beta = 1.5
    Rng rng(15);
    const int reps = 500, N = 10, T = 6;
    double sum = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        Eigen::MatrixXd X(N * T, 1);
        Eigen::VectorXd y(N * T);
        long r = 0;
        for (int i = 0; i < N; ++i) {
            const double alpha = rng.normal(0.0, 0.7);
            for (int t = 0; t < T; ++t, ++r) {
                X(r, 0) = rng.normal();
                y(r) = 1.5 * X(r, 0) + alpha + rng.normal(0.0, 0.5);
            }
        }
        const DesignMatrix m = make_design(N, T, X, y, {"x"});
        sum += random_effects(m).coef_of("x");
    }
    CHECK(sum / reps == doctest::Approx(1.5).epsilon(0.034));
}

TEST_CASE("hausman test basics") {
    Rng rng(16);
    const DesignMatrix m = random_panel(rng, 6, 8, 2);
    const EstimationResult fe = fixed_effects(m);
    const EstimationResult re = random_effects(m);

    SUBCASE("identical inputs give H = 0 and Random") {
        const TestResult t = hausman_test(fe, fe);
        CHECK(t.statistic == 0.0);
        CHECK(*t.decision == "Random");
        CHECK(*t.p_value == 1.0);
    }
    SUBCASE("fe vs re yields a valid chi-square outcome") {
        const TestResult t = hausman_test(fe, re);
        CHECK(t.statistic >= 0.0);
        CHECK(*t.df <= 2);
        CHECK(*t.p_value >= 0.0);
        CHECK(*t.p_value <= 1.0);
        CHECK((*t.decision == "Fixed" || *t.decision == "Random"));
    }
}

TEST_CASE("hausman with no shared coefficients is an error") {
    Rng rng(44);
    DesignMatrix m = random_panel(rng, 4, 6, 1);
    const EstimationResult fe = fixed_effects(m);
    // an RE fit on a renamed copy shares nothing with the FE result
    DesignMatrix renamed = m;
    renamed.names = {"other"};
    const EstimationResult re = random_effects(renamed);
    CHECK_THROWS_AS(hausman_test(fe, re), EstimationError);
}

TEST_CASE("hausman power under correlated effects") {
    // Effects correlated 0.7 with the regressor's entity mean, with an
    // effect variance moderate enough that theta stays away from 1 (a huge
    // effect variance drives RE into FE and drains the test's power). The
    // panel is sized so the between dimension carries enough information; at
    // the 6x14 scale the test cannot reach this power (see the ledger).
    Rng rng(17);
    const int reps = 300, N = 40, T = 10;
    const double rho = 0.7, sd_alpha = 0.6;
    int reject = 0;
    for (int rep = 0; rep < reps; ++rep) {
        Eigen::MatrixXd X(N * T, 1);
        Eigen::VectorXd y(N * T);
        long r = 0;
        for (int i = 0; i < N; ++i) {
            const double xbar = rng.normal(0.0, 1.0);
            const double alpha =
                rho * sd_alpha * xbar + std::sqrt(1 - rho * rho) * sd_alpha * rng.normal();
            for (int t = 0; t < T; ++t, ++r) {
                X(r, 0) = xbar + rng.normal();
                y(r) = 1.0 * X(r, 0) + alpha + rng.normal(0.0, 1.0);
            }
        }
        const DesignMatrix m = make_design(N, T, X, y, {"x"});
        const TestResult t = hausman_test(fixed_effects(m), random_effects(m));
        if (*t.p_value <= 0.05) ++reject;
    }
    CHECK(static_cast<double>(reject) / reps > 0.80);
}

TEST_CASE("two_sls with empty endogenous set equals OLS") {
    Rng rng(18);
    const DesignMatrix m = random_panel(rng, 4, 8, 3);
    const EstimationResult iv = two_sls(m, IvSpec{});
    const EstimationResult base = ols(m);
    CHECK(iv.n_obs == base.n_obs);
    CHECK((iv.coef - base.coef).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("two_sls drops the first period per entity for lag instruments") {
    Rng rng(19);
    const int N = 6, T = 14;
    DesignMatrix m = random_panel(rng, N, T, 3);
    m.names = {"fdi", "gdpg", "bexr"};
    const EstimationResult iv = two_sls(m, IvSpec{{"fdi", "gdpg", "bexr"}, 1, {}});
    CHECK(iv.n_obs == 78);  // 84 - 6
    CHECK(iv.rows_dropped == 6);
    CHECK(iv.first_stage.size() == 3);
}

TEST_CASE("two_sls residuals are orthogonal to the instruments") {
    Rng rng(20);
    const int N = 5, T = 12;
    DesignMatrix m = random_panel(rng, N, T, 2);
    m.names = {"w", "x"};
    const IvSpec iv{{"w"}, 1, {}};
    const EstimationResult r = two_sls(m, iv);
    const IvFrame f = build_iv_frame(m, iv);
    const Eigen::VectorXd zu = f.Z.transpose() * r.residuals / static_cast<double>(f.n());
    CHECK(zu.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("two_sls cuts simultaneity bias against OLS") {
    // w_t = 0.7 w_{t-1} + eta_t, u_t = 0.8-correlated with eta_t, beta = 1.
    Rng rng(21);
    const int reps = 1000, N = 6, T = 14;
    double sum_ols = 0.0, sum_iv = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        Eigen::MatrixXd X(N * T, 1);
        Eigen::VectorXd y(N * T);
        long r = 0;
        for (int i = 0; i < N; ++i) {
            double w = 0.0;
            for (int t = 0; t < T; ++t, ++r) {
                const double eta = rng.normal();
                w = (t == 0) ? eta : 0.7 * w + eta;
                const double u = 0.8 * eta + std::sqrt(1 - 0.64) * rng.normal();
                X(r, 0) = w;
                y(r) = 1.0 * w + u;
            }
        }
        const DesignMatrix m = make_design(N, T, X, y, {"w"});
        sum_ols += ols(m).coef_of("w");
        sum_iv += two_sls(m, IvSpec{{"w"}, 1, {}}).coef_of("w");
    }
    const double bias_ols = std::abs(sum_ols / reps - 1.0);
    const double bias_iv = std::abs(sum_iv / reps - 1.0);
    CHECK(bias_iv < 0.3 * bias_ols);
}

TEST_CASE("classical and robust standard errors agree on a homoskedastic DGP") {
    Rng rng(22);
    const int reps = 500, n = 120;
    double sum_classical = 0.0, sum_robust = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        Eigen::MatrixXd X(n, 1);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.normal();
            y(i) = 0.5 * X(i, 0) + rng.normal();
        }
        const DesignMatrix m = make_design(1, n, X, y, {"x"});
        sum_classical += ols(m, false).se_of("x");
        sum_robust += ols(m, true).se_of("x");
    }
    const double ratio = sum_robust / sum_classical;
    CHECK(ratio > 0.9);
    CHECK(ratio < 1.1);
}

TEST_CASE("under-identified IV setups are rejected") {
    Rng rng(23);
    DesignMatrix m = random_panel(rng, 4, 8, 2);
    m.names = {"w", "x"};
    IvSpec iv;
    iv.endogenous = {"w", "x"};
    iv.instrument_lags = 1;
    // two endogenous, two lag instruments: fine; but declaring one lag for two
    // endogenous with instrument_lags = 0 must fail the order condition
    iv.instrument_lags = 0;
    CHECK_THROWS_AS(two_sls(m, iv), EstimationError);
}
