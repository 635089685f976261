#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gravipanel/ingest.hpp"

namespace gravipanel {

/**
 * Synthetic bilateral-panel generator with known ground truth. Magnitudes
 * are chosen so that every level series is strictly positive and the
 * growth column stays above the -10 shift bound; economic realism is not
 * the point, recoverability is.
 */
struct DgpSpec {
    int n_entities = 6;
    int n_periods = 14;
    int n_cee = 3;
    int first_year = 2000;

    double intercept = 1.0;
    /// True coefficients on the regression-ready columns; absent keys mean 0.
    /// Keys: fdi, gdpav, gdpdif, gdpcav, gdpcdif, gdpg, popav, bexr, dist, dummy.
    std::map<std::string, double> beta = {{"fdi", 0.10}, {"gdpav", 0.5},
                                          {"dist", -0.8}, {"dummy", 0.3}};

    std::string effect_mode = "random";  ///< "random" or "correlated"
    double rho_effect = 0.0;             ///< corr(effect, entity-mean log FDI)
    double sigma_effect = 0.5;
    double sigma_eps = 0.10;

    /// corr(disturbance, FDI innovation); key "fdi" is the one that matters.
    std::map<std::string, double> endogeneity;
    std::string heteroskedasticity = "none";  ///< "none" or "fdi-lag"
    double cross_dependence = 0.0;            ///< common-factor loading in the disturbance
    double persistence = 0.7;                 ///< AR coefficient of the log FDI processes; 1 = unit root

    std::uint64_t seed = 1;
    bool fail_on_nonpositive = false;  ///< throw instead of redrawing a bad growth draw

    void validate() const;
};

/// Deterministic function of (spec, seed); emits a panel in the exact
/// ingestion schema.
BilateralPanel generate(const DgpSpec& spec);

/// Outcome of one Monte Carlo experiment for one statistic.
struct McStat {
    std::string name;
    long reps_used = 0;
    double reject10 = 0.0, reject5 = 0.0, reject1 = 0.0;
    bool is_coefficient = false;
    double bias = 0.0;  ///< mean estimate minus truth (coefficient stats)
    double rmse = 0.0;
};

struct McSummary {
    long replications = 0;
    long failures = 0;
    std::uint64_t master_seed = 0;
    std::vector<McStat> stats;
};

/// Names understood by run_mc.
const std::vector<std::string>& mc_statistic_names();

/**
 * Replication harness: per replication, generates a panel, builds the
 * exports/outward-FDI dataset and evaluates the requested statistics.
 * Replication r always draws from the stream derived from (master seed, r),
 * so the summary is identical for any worker count. Failed replications are
 * excluded and counted; more than 1% failures aborts.
 */
McSummary run_mc(const DgpSpec& spec, const std::vector<std::string>& statistics, int reps,
                 int workers = 1);

void write_mc_csv(const McSummary& s, std::ostream& out);

}  // namespace gravipanel
