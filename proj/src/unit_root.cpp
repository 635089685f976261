#include "gravipanel/unit_root.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <tuple>

#include "gravipanel/regression.hpp"
#include "gravipanel/rng.hpp"
#include "gravipanel/stats.hpp"

namespace gravipanel {

namespace {

constexpr int kMomentReps = 50000;
constexpr int kCipsReps = 50000;

struct AdfFit {
    double tstat = 0.0;
};

// Shared builder for ADF-type regressions. `cs_avg` (when present) is the
// cross-section average series used by the CADF augmentation.
double adf_t_impl(const Eigen::VectorXd& y, const AdfSpec& spec, const Eigen::VectorXd* cs_avg) {
    const long T = y.size();
    spec.validate(static_cast<int>(T));
    const int p = spec.lags;
    const long rows = T - 1 - p;

    int k = 2 + p;  // const, y_{t-1}, p lagged differences
    if (spec.det == Deterministic::ConstantTrend) ++k;
    if (cs_avg) k += 2 + p;  // avg_{t-1}, d(avg)_t, p lags of d(avg)

    if (rows - k < 2) {
        throw EstimationError("adf regression: " + std::to_string(rows) + " usable rows cannot " +
                              "support " + std::to_string(k) + " coefficients");
    }

    Eigen::MatrixXd X(rows, k);
    Eigen::VectorXd dy(rows);
    int level_col = -1;
    for (long r = 0; r < rows; ++r) {
        const long t = r + p + 1;
        dy(r) = y(t) - y(t - 1);
        int c = 0;
        X(r, c++) = 1.0;
        if (spec.det == Deterministic::ConstantTrend) X(r, c++) = static_cast<double>(t);
        level_col = c;
        X(r, c++) = y(t - 1);
        for (int l = 1; l <= p; ++l) X(r, c++) = y(t - l) - y(t - l - 1);
        if (cs_avg) {
            const Eigen::VectorXd& a = *cs_avg;
            X(r, c++) = a(t - 1);
            X(r, c++) = a(t) - a(t - 1);
            for (int l = 1; l <= p; ++l) X(r, c++) = a(t - l) - a(t - l - 1);
        }
    }

    const LinearFit fit = least_squares(X, dy);
    const long df = rows - k;
    const double scale = std::max(1.0, dy.squaredNorm());
    if (fit.ssr <= 1e-14 * scale) {
        throw EstimationError("adf regression: zero residual variance, fit is degenerate");
    }
    const double sigma2 = fit.ssr / static_cast<double>(df);
    const double se = std::sqrt(sigma2 * fit.xtx_inv(level_col, level_col));
    return fit.beta(level_col) / se;
}

using MomentKey = std::tuple<int, int, int, std::uint64_t>;  // T, lags, det, seed

std::string simulated_tag(int reps, std::uint64_t seed) {
    return "simulated(reps=" + std::to_string(reps) + ",seed=" + std::to_string(seed) + ")";
}

}  // namespace

std::string deterministic_name(Deterministic d) {
    return d == Deterministic::Constant ? "constant" : "constant+trend";
}

void AdfSpec::validate(int T) const {
    if (lags < 0) throw ValidationError("adf spec: lag order must be non-negative");
    if (lags > T - 4) {
        throw ValidationError("adf spec: lag order " + std::to_string(lags) +
                              " exceeds T-4 = " + std::to_string(T - 4));
    }
}

double adf_t(const Eigen::VectorXd& y, const AdfSpec& spec) {
    for (long t = 0; t < y.size(); ++t) {
        if (is_missing(y(t))) throw ValidationError("adf_t: series has missing values");
    }
    return adf_t_impl(y, spec, nullptr);
}

TbarMoments ips_tbar_moments(int T, const AdfSpec& spec, std::uint64_t seed) {
    spec.validate(T);
    static std::mutex mtx;
    static std::map<MomentKey, TbarMoments> cache;
    const MomentKey key{T, spec.lags, static_cast<int>(spec.det), seed};
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    Rng rng(derive_seed(seed, mix_seed(static_cast<std::uint64_t>(T) * 1315423911u +
                                       spec.lags * 2654435761u + static_cast<int>(spec.det))));
    double sum = 0.0, sum_sq = 0.0;
    long used = 0, failed = 0;
    Eigen::VectorXd y(T);
    for (int rep = 0; rep < kMomentReps; ++rep) {
        y(0) = rng.normal();
        for (int t = 1; t < T; ++t) y(t) = y(t - 1) + rng.normal();
        try {
            const double t = adf_t_impl(y, spec, nullptr);
            sum += t;
            sum_sq += t * t;
            ++used;
        } catch (const Error&) {
            ++failed;
        }
    }
    if (failed > kMomentReps / 1000) {
        throw EstimationError("ips_tbar_moments: simulation failure rate too high");
    }

    TbarMoments m;
    m.mean = sum / used;
    m.variance = sum_sq / used - m.mean * m.mean;
    m.provenance = simulated_tag(kMomentReps, seed);
    {
        std::lock_guard<std::mutex> lock(mtx);
        cache[key] = m;
    }
    return m;
}

UnitRootResult ips_test(const PanelSeries& panel, const AdfSpec& spec, std::uint64_t seed) {
    if (!panel.complete()) throw ValidationError("ips_test: panel has missing cells");
    const int N = panel.index().n_entities();
    const int T = panel.index().n_periods();
    spec.validate(T);

    UnitRootResult r;
    r.test = "IPS";
    r.spec = spec;
    for (int i = 0; i < N; ++i) {
        r.per_entity_t.push_back(adf_t_impl(panel.entity_series(i), spec, nullptr));
    }
    r.tbar = 0.0;
    for (double t : r.per_entity_t) r.tbar += t;
    r.tbar /= N;

    const TbarMoments m = ips_tbar_moments(T, spec, seed);
    r.provenance = m.provenance;
    const double w = std::sqrt(static_cast<double>(N)) * (r.tbar - m.mean) / std::sqrt(m.variance);
    r.standardized = w;
    r.p_value = normal_cdf(w);  // one-sided lower tail

    const double sd_tbar = std::sqrt(m.variance / N);
    for (double level : {0.10, 0.05, 0.01}) {
        r.critical_values[level] = m.mean + normal_quantile(level) * sd_tbar;
    }
    return r;
}

const std::vector<double>& cips_null_distribution(int N, int T, const AdfSpec& spec,
                                                  std::string* provenance, std::uint64_t seed) {
    spec.validate(T);
    if (N < 2) throw ValidationError("cips_null_distribution: need N >= 2");
    static std::mutex mtx;
    static std::map<std::tuple<int, int, int, int, std::uint64_t>, std::vector<double>> cache;
    const std::tuple<int, int, int, int, std::uint64_t> key{N, T, spec.lags,
                                                            static_cast<int>(spec.det), seed};
    if (provenance) *provenance = simulated_tag(kCipsReps, seed);
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    // Null: independent unit roots driven by a shared factor innovation plus
    // idiosyncratic noise, so the simulated distribution reflects the
    // cross-sectionally correlated case the test is meant for.
    Rng rng(derive_seed(seed, mix_seed(static_cast<std::uint64_t>(N) * 2246822519u +
                                            static_cast<std::uint64_t>(T) * 3266489917u +
                                            spec.lags * 668265263u + static_cast<int>(spec.det))));
    std::vector<double> draws;
    draws.reserve(kCipsReps);
    long failed = 0;
    Eigen::MatrixXd y(N, T);
    for (int rep = 0; rep < kCipsReps; ++rep) {
        for (int t = 0; t < T; ++t) {
            const double f = rng.normal();
            for (int i = 0; i < N; ++i) {
                const double u = f + rng.normal();
                y(i, t) = (t == 0) ? u : y(i, t - 1) + u;
            }
        }
        const Eigen::VectorXd avg = y.colwise().mean().transpose();
        double sum = 0.0;
        bool ok = true;
        for (int i = 0; i < N && ok; ++i) {
            try {
                sum += adf_t_impl(y.row(i).transpose(), spec, &avg);
            } catch (const Error&) {
                ok = false;
            }
        }
        if (ok) {
            draws.push_back(sum / N);
        } else {
            ++failed;
        }
    }
    if (failed > kCipsReps / 100) {
        throw EstimationError("cips_null_distribution: simulation failure rate too high");
    }
    std::sort(draws.begin(), draws.end());
    std::lock_guard<std::mutex> lock(mtx);
    auto [it, inserted] = cache.emplace(key, std::move(draws));
    return it->second;
}

UnitRootResult cadf_test(const PanelSeries& panel, const AdfSpec& spec, std::uint64_t seed) {
    if (!panel.complete()) throw ValidationError("cadf_test: panel has missing cells");
    const int N = panel.index().n_entities();
    const int T = panel.index().n_periods();
    if (N < 2) {
        throw ValidationError("cadf_test: the cross-section average needs at least 2 entities");
    }
    spec.validate(T);

    const Eigen::VectorXd avg = panel.values().colwise().mean().transpose();

    UnitRootResult r;
    r.test = "CADF";
    r.spec = spec;
    for (int i = 0; i < N; ++i) {
        r.per_entity_t.push_back(adf_t_impl(panel.entity_series(i), spec, &avg));
    }
    r.tbar = 0.0;
    for (double t : r.per_entity_t) r.tbar += t;
    r.tbar /= N;

    const std::vector<double>& null_dist =
        cips_null_distribution(N, T, spec, &r.provenance, seed);
    const auto below =
        std::upper_bound(null_dist.begin(), null_dist.end(), r.tbar) - null_dist.begin();
    r.p_value = static_cast<double>(below + 1) / static_cast<double>(null_dist.size() + 1);

    auto quantile = [&](double q) {
        const double pos = q * (null_dist.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const double frac = pos - lo;
        return lo + 1 < null_dist.size() ? null_dist[lo] * (1 - frac) + null_dist[lo + 1] * frac
                                         : null_dist[lo];
    };
    for (double level : {0.10, 0.05, 0.01}) r.critical_values[level] = quantile(level);
    return r;
}

}  // namespace gravipanel
