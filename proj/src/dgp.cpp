#include "gravipanel/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "gravipanel/cross_dependence.hpp"
#include "gravipanel/estimators.hpp"
#include "gravipanel/gravity.hpp"
#include "gravipanel/iv_diagnostics.hpp"
#include "gravipanel/rng.hpp"
#include "gravipanel/unit_root.hpp"

namespace gravipanel {

void DgpSpec::validate() const {
    if (n_entities < 2) throw ValidationError("dgp: need at least 2 entities");
    if (n_periods < 4) throw ValidationError("dgp: need at least 4 periods");
    if (n_cee < 0 || n_cee > n_entities) throw ValidationError("dgp: bad CEE partner count");
    if (!(persistence >= -1.0 && persistence <= 1.0)) {
        throw ValidationError("dgp: persistence must lie in [-1,1] (1 means unit root)");
    }
    for (const auto& [k, v] : endogeneity) {
        if (!(v >= -1.0 && v <= 1.0)) {
            throw ValidationError("dgp: endogeneity correlation for '" + k +
                                  "' must lie in [-1,1]");
        }
    }
    if (!(rho_effect >= -1.0 && rho_effect <= 1.0)) {
        throw ValidationError("dgp: rho_effect must lie in [-1,1]");
    }
    if (cross_dependence < 0.0) throw ValidationError("dgp: factor loading must be >= 0");
    if (effect_mode != "random" && effect_mode != "correlated") {
        throw ValidationError("dgp: effect_mode must be 'random' or 'correlated'");
    }
    if (heteroskedasticity != "none" && heteroskedasticity != "fdi-lag") {
        throw ValidationError("dgp: heteroskedasticity must be 'none' or 'fdi-lag'");
    }
}

namespace {

double beta_of(const DgpSpec& spec, const std::string& key) {
    auto it = spec.beta.find(key);
    return it == spec.beta.end() ? 0.0 : it->second;
}

// Draws a growth rate; redraws (or fails) when it breaches the shift bound.
double draw_growth(Rng& rng, double mean, double sd, bool fail_on_nonpositive) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double g = rng.normal(mean, sd);
        if (g > -9.5) return g;
        if (fail_on_nonpositive) {
            throw EstimationError("dgp: growth draw " + std::to_string(g) +
                                  " breaches the log-shift bound");
        }
    }
    throw EstimationError("dgp: could not draw an admissible growth rate");
}

}  // namespace

BilateralPanel generate(const DgpSpec& spec) {
    spec.validate();
    const int N = spec.n_entities;
    const int T = spec.n_periods;
    Rng rng(derive_seed(spec.seed, 0));

    std::vector<std::string> partners;
    std::vector<int> cee(N, 0);
    for (int i = 0; i < N; ++i) {
        if (i < spec.n_cee) {
            partners.push_back("CE" + std::to_string(i + 1));
            cee[i] = 1;
        } else {
            partners.push_back("EU" + std::to_string(i - spec.n_cee + 1));
        }
    }
    std::vector<int> years;
    for (int t = 0; t < T; ++t) years.push_back(spec.first_year + t);
    PanelIndex idx(partners, years);

    using Mat = Eigen::MatrixXd;
    Mat exports(N, T), imports(N, T), outfdi(N, T), infdi(N, T);
    Mat gdp_r(N, T), gdp_p(N, T), gdppc_r(N, T), gdppc_p(N, T);
    Mat growth_p(N, T), pop_r(N, T), pop_p(N, T), bexr(N, T), dist(N, T);

    // Reporter-side paths are shared across partner rows.
    double lpop_reporter = std::log(1.0e7) + 0.3 * rng.normal();
    double lg_reporter = std::log(4.0e11) + 0.1 * rng.normal();
    std::vector<double> lg_reporter_path(T), pop_reporter_path(T);
    for (int t = 0; t < T; ++t) {
        if (t > 0) {
            const double g = draw_growth(rng, 3.0, 2.0, spec.fail_on_nonpositive);
            lg_reporter += std::log1p(g / 100.0);
            lpop_reporter += rng.normal(0.003, 0.004);
        }
        lg_reporter_path[t] = lg_reporter;
        pop_reporter_path[t] = std::exp(lpop_reporter);
    }

    // The year in recession position gets a negative mean growth so the
    // shifted-log transform is exercised on negative rates.
    const int recession_t = T >= 10 ? 9 : T / 2;

    Mat fdi_state(N, T);          // log deviations of outfdi
    Mat fdi_innov(N, T);          // its innovations (endogeneity hook)
    std::vector<double> mu_out(N), mu_in(N);

    for (int i = 0; i < N; ++i) {
        dist.row(i).setConstant(std::round(rng.uniform(200.0, 1800.0)));
        double lpop = rng.uniform(std::log(2.0e6), std::log(4.0e7));
        double lg = std::log(2.0e11) + 0.5 * rng.normal();
        double lb = rng.uniform(std::log(0.3), std::log(30.0));
        mu_out[i] = rng.uniform(std::log(1.0e8), std::log(5.0e9));
        mu_in[i] = rng.uniform(std::log(1.0e8), std::log(5.0e9));
        double s_out = 0.0, s_in = 0.0;
        const double innov_sd = 0.3;
        for (int t = 0; t < T; ++t) {
            const double g = draw_growth(rng, t == recession_t ? -4.0 : 3.0, 2.0,
                                         spec.fail_on_nonpositive);
            growth_p(i, t) = g;
            if (t > 0) {
                lg += std::log1p(g / 100.0);
                lpop += rng.normal(0.002, 0.004);
            }
            gdp_p(i, t) = std::exp(lg);
            pop_p(i, t) = std::exp(lpop);
            gdppc_p(i, t) = gdp_p(i, t) / pop_p(i, t);
            gdp_r(i, t) = std::exp(lg_reporter_path[t]);
            pop_r(i, t) = pop_reporter_path[t];
            gdppc_r(i, t) = gdp_r(i, t) / pop_r(i, t);
            if (t > 0) lb += 0.03 * rng.normal();
            bexr(i, t) = std::exp(lb);

            const double eta = innov_sd * rng.normal();
            fdi_innov(i, t) = eta / innov_sd;  // standardized
            s_out = (t == 0) ? eta : spec.persistence * s_out + eta;
            fdi_state(i, t) = s_out;
            outfdi(i, t) = std::exp(mu_out[i] + s_out);
            const double eta_in = innov_sd * rng.normal();
            s_in = (t == 0) ? eta_in : spec.persistence * s_in + eta_in;
            infdi(i, t) = std::exp(mu_in[i] + s_in);
        }
    }

    // Entity effects, optionally correlated with the mean log FDI regressor.
    Eigen::VectorXd alpha_x(N), alpha_m(N);
    {
        Eigen::VectorXd fdi_mean(N);
        for (int i = 0; i < N; ++i) fdi_mean(i) = mu_out[i] + fdi_state.row(i).mean();
        const double mean = fdi_mean.mean();
        double sd = std::sqrt((fdi_mean.array() - mean).square().sum() / std::max(1, N - 1));
        if (sd <= 0) sd = 1.0;
        for (int i = 0; i < N; ++i) {
            const double nu = rng.normal();
            const double nu_m = rng.normal();
            if (spec.effect_mode == "correlated") {
                const double z = (fdi_mean(i) - mean) / sd;
                const double w = std::sqrt(std::max(0.0, 1.0 - spec.rho_effect * spec.rho_effect));
                alpha_x(i) = spec.sigma_effect * (spec.rho_effect * z + w * nu);
                alpha_m(i) = spec.sigma_effect * (spec.rho_effect * z + w * nu_m);
            } else {
                alpha_x(i) = spec.sigma_effect * nu;
                alpha_m(i) = spec.sigma_effect * nu_m;
            }
        }
    }

    // Disturbances: endogeneity via the FDI innovation, cross-sectional
    // dependence via a common factor, optional variance tied to the lagged
    // FDI state (the instrument).
    const double rho_e = [&] {
        auto it = spec.endogeneity.find("fdi");
        return it == spec.endogeneity.end() ? 0.0 : it->second;
    }();
    const double lam = spec.cross_dependence;
    const double w_rest = std::sqrt(std::max(0.0, 1.0 - rho_e * rho_e));
    const double denom = std::sqrt(1.0 + lam * lam);

    Mat eps_x(N, T), eps_m(N, T);
    for (int t = 0; t < T; ++t) {
        const double f_x = rng.normal();
        const double f_m = rng.normal();
        for (int i = 0; i < N; ++i) {
            double e_x = rho_e * fdi_innov(i, t) + w_rest * (lam * f_x + rng.normal()) / denom;
            double e_m = rho_e * fdi_innov(i, t) + w_rest * (lam * f_m + rng.normal()) / denom;
            if (spec.heteroskedasticity == "fdi-lag") {
                const double z = t > 0 ? fdi_state(i, t - 1) / 0.3 : 0.0;
                const double scale = std::sqrt((1.0 + z * z) / 2.0);
                e_x *= scale;
                e_m *= scale;
            }
            eps_x(i, t) = spec.sigma_eps * e_x;
            eps_m(i, t) = spec.sigma_eps * e_m;
        }
    }

    // Structural responses on the log scale, then back to levels.
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            const double gdpav = std::log(0.5 * (gdp_r(i, t) + gdp_p(i, t)));
            const double gdpdif = std::log(std::abs(gdp_r(i, t) - gdp_p(i, t)));
            const double gdpcav = std::log(0.5 * (gdppc_r(i, t) + gdppc_p(i, t)));
            const double gdpcdif = std::log(std::abs(gdppc_r(i, t) - gdppc_p(i, t)));
            const double gdpg = std::log(10.0 + growth_p(i, t));
            const double popav = std::log(0.5 * (pop_r(i, t) + pop_p(i, t)));
            const double lbexr = std::log(bexr(i, t));
            const double ldist = std::log(dist(i, t));
            const double lfdi = std::log(outfdi(i, t));

            const double base = beta_of(spec, "fdi") * lfdi + beta_of(spec, "gdpav") * gdpav +
                                beta_of(spec, "gdpdif") * gdpdif +
                                beta_of(spec, "gdpcav") * gdpcav +
                                beta_of(spec, "gdpcdif") * gdpcdif +
                                beta_of(spec, "gdpg") * gdpg + beta_of(spec, "popav") * popav +
                                beta_of(spec, "bexr") * lbexr + beta_of(spec, "dist") * ldist +
                                beta_of(spec, "dummy") * cee[i];
            exports(i, t) = std::exp(spec.intercept + base + alpha_x(i) + eps_x(i, t));
            imports(i, t) = std::exp(spec.intercept + base + alpha_m(i) + eps_m(i, t));
        }
    }

    BilateralPanel p;
    p.reporter = "RP1";
    p.index = idx;
    p.cee_partner = cee;
    auto push = [&](const char* name, Mat& m) {
        p.series.emplace_back(idx, std::move(m), name);
    };
    push("exports", exports);
    push("imports", imports);
    push("outfdi", outfdi);
    push("infdi", infdi);
    push("gdp_reporter", gdp_r);
    push("gdp_partner", gdp_p);
    push("gdppc_reporter", gdppc_r);
    push("gdppc_partner", gdppc_p);
    push("growth_partner", growth_p);
    push("pop_reporter", pop_r);
    push("pop_partner", pop_p);
    push("bexr", bexr);
    push("dist", dist);
    return p;
}

namespace {

struct RepOutcome {
    bool ok = false;
    // per statistic: {evaluated, reject10, reject5, reject1, error}
    std::vector<std::array<double, 4>> cells;
};

struct StatPlan {
    std::string name;
    bool is_coefficient = false;
};

// Rejection triple from a p-value.
std::array<double, 4> from_p(double p) {
    return {p <= 0.10 ? 1.0 : 0.0, p <= 0.05 ? 1.0 : 0.0, p <= 0.01 ? 1.0 : 0.0, 0.0};
}

std::array<double, 4> coef_cell(double est, double se, long df, double truth) {
    const double t = (est - truth) / se;
    const double p = t_two_sided_p(t, df);
    auto cell = from_p(p);
    cell[3] = est - truth;
    return cell;
}

}  // namespace

const std::vector<std::string>& mc_statistic_names() {
    static const std::vector<std::string> kNames = {
        "fe_fdi",    "re_fdi",      "ols_fdi", "2sls_fdi",   "cd_pesaran", "cd_friedman",
        "cd_frees",  "ips_fdi",     "cadf_fdi", "hausman",    "wu_hausman", "dwh",
        "pagan_hall", "sargan"};
    return kNames;
}

McSummary run_mc(const DgpSpec& spec, const std::vector<std::string>& statistics, int reps,
                 int workers) {
    spec.validate();
    if (reps < 100) throw ValidationError("run_mc: need at least 100 replications");
    const auto& known = mc_statistic_names();
    for (const auto& s : statistics) {
        if (std::find(known.begin(), known.end(), s) == known.end()) {
            throw ValidationError("run_mc: unknown statistic '" + s + "'");
        }
    }
    const double beta_fdi = [&] {
        auto it = spec.beta.find("fdi");
        return it == spec.beta.end() ? 0.0 : it->second;
    }();

    auto evaluate_rep = [&](std::uint64_t rep) -> RepOutcome {
        RepOutcome out;
        out.cells.resize(statistics.size());
        DgpSpec rep_spec = spec;
        rep_spec.seed = derive_seed(spec.seed, rep);
        try {
            const BilateralPanel panel = generate(rep_spec);
            const GravityDataset ds =
                build_dataset(panel, {TradeFlow::Exports, FdiDirection::Outward});
            const DesignMatrix m = ds.design();

            std::optional<EstimationResult> fe;
            auto need_fe = [&]() -> const EstimationResult& {
                if (!fe) fe = fixed_effects(m);
                return *fe;
            };

            for (std::size_t s = 0; s < statistics.size(); ++s) {
                const std::string& name = statistics[s];
                if (name == "fe_fdi") {
                    const auto& r = need_fe();
                    out.cells[s] = coef_cell(r.coef_of("outfdi"), r.se_of("outfdi"), r.df_resid,
                                             beta_fdi);
                } else if (name == "re_fdi") {
                    const auto r = random_effects(m, {}, ReVariance::Auto);
                    out.cells[s] = coef_cell(r.coef_of("outfdi"), r.se_of("outfdi"), r.df_resid,
                                             beta_fdi);
                } else if (name == "ols_fdi") {
                    const auto r = ols(m);
                    out.cells[s] = coef_cell(r.coef_of("outfdi"), r.se_of("outfdi"), r.df_resid,
                                             beta_fdi);
                } else if (name == "2sls_fdi") {
                    const auto r = two_sls(m, IvSpec{{"outfdi"}, 1, {}});
                    out.cells[s] = coef_cell(r.coef_of("outfdi"), r.se_of("outfdi"), r.df_resid,
                                             beta_fdi);
                } else if (name == "cd_pesaran" || name == "cd_friedman" || name == "cd_frees") {
                    const ResidualPanel rp = residual_panel(need_fe(), ds.index);
                    if (name == "cd_pesaran") {
                        out.cells[s] = from_p(*pesaran_cd(rp).p_value);
                    } else if (name == "cd_friedman") {
                        out.cells[s] = from_p(*friedman_cd(rp).p_value);
                    } else {
                        const TestResult t = frees_cd(rp);
                        const auto& cv = *t.critical_values;
                        out.cells[s] = {t.statistic > cv.at(0.10) ? 1.0 : 0.0,
                                        t.statistic > cv.at(0.05) ? 1.0 : 0.0,
                                        t.statistic > cv.at(0.01) ? 1.0 : 0.0, 0.0};
                    }
                } else if (name == "ips_fdi") {
                    out.cells[s] = from_p(*ips_test(ds.fdi, AdfSpec{}).p_value);
                } else if (name == "cadf_fdi") {
                    out.cells[s] = from_p(*cadf_test(ds.fdi, AdfSpec{}).p_value);
                } else if (name == "hausman") {
                    const auto re = random_effects(m, {}, ReVariance::Auto);
                    out.cells[s] = from_p(*hausman_test(need_fe(), re).p_value);
                } else if (name == "wu_hausman") {
                    out.cells[s] = from_p(*wu_hausman(m, IvSpec{{"outfdi"}, 1, {}}).p_value);
                } else if (name == "dwh") {
                    out.cells[s] =
                        from_p(*durbin_wu_hausman(m, IvSpec{{"outfdi"}, 1, {}}).p_value);
                } else if (name == "pagan_hall") {
                    out.cells[s] = from_p(*pagan_hall(m, IvSpec{{"outfdi"}, 1, {}}).p_value);
                } else if (name == "sargan") {
                    out.cells[s] = from_p(*sargan(m, IvSpec{{"outfdi"}, 2, {}}).p_value);
                }
            }
            out.ok = true;
        } catch (const Error&) {
            out.ok = false;
        }
        return out;
    };

    std::vector<RepOutcome> outcomes(reps);
    if (workers <= 1) {
        for (int r = 0; r < reps; ++r) outcomes[r] = evaluate_rep(r);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) {
                    outcomes[r] = evaluate_rep(r);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    McSummary sum;
    sum.replications = reps;
    sum.master_seed = spec.seed;
    for (std::size_t s = 0; s < statistics.size(); ++s) {
        McStat st;
        st.name = statistics[s];
        st.is_coefficient = statistics[s].ends_with("_fdi");
        sum.stats.push_back(st);
    }
    double failures = 0;
    std::vector<double> err_sq(statistics.size(), 0.0);
    for (const auto& o : outcomes) {
        if (!o.ok) {
            failures += 1;
            continue;
        }
        for (std::size_t s = 0; s < statistics.size(); ++s) {
            auto& st = sum.stats[s];
            st.reps_used += 1;
            st.reject10 += o.cells[s][0];
            st.reject5 += o.cells[s][1];
            st.reject1 += o.cells[s][2];
            st.bias += o.cells[s][3];
            err_sq[s] += o.cells[s][3] * o.cells[s][3];
        }
    }
    sum.failures = static_cast<long>(failures);
    if (failures > 0.01 * reps) {
        throw EstimationError("run_mc: " + std::to_string(sum.failures) + " of " +
                              std::to_string(reps) + " replications failed (over the 1% budget)");
    }
    for (std::size_t s = 0; s < statistics.size(); ++s) {
        auto& st = sum.stats[s];
        if (st.reps_used > 0) {
            st.reject10 /= st.reps_used;
            st.reject5 /= st.reps_used;
            st.reject1 /= st.reps_used;
            st.bias /= st.reps_used;
            st.rmse = std::sqrt(err_sq[s] / st.reps_used);
        }
        if (!st.is_coefficient) {
            st.bias = 0.0;
            st.rmse = 0.0;
        }
    }
    return sum;
}

void write_mc_csv(const McSummary& s, std::ostream& out) {
    out << "statistic,reps_used,reject10,reject5,reject1,bias,rmse\n";
    char buf[256];
    for (const auto& st : s.stats) {
        std::snprintf(buf, sizeof(buf), "%s,%ld,%.6f,%.6f,%.6f,%.6g,%.6g\n", st.name.c_str(),
                      st.reps_used, st.reject10, st.reject5, st.reject1, st.bias, st.rmse);
        out << buf;
    }
    out << "# replications=" << s.replications << " failures=" << s.failures
        << " master_seed=" << s.master_seed << "\n";
}

}  // namespace gravipanel
