#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gravipanel/config.hpp"
#include "gravipanel/gravity.hpp"
#include "gravipanel/ingest.hpp"

namespace gravipanel {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// A rendered table: display cells only, every number traceable to an
/// EstimationResult/TestResult field upstream.
struct TableDoc {
    std::string id;     ///< file stem, e.g. "reg_exports_outfdi"
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;
};

struct PipelineReport {
    TableDoc cd_table;
    TableDoc unitroot_table;
    std::vector<TableDoc> regressions;
    std::optional<TableDoc> descriptive;
    std::vector<RepairEntry> repairs;
    std::vector<std::string> warnings;
    std::string provenance;
};

/// Significance stars: *** at 1%, ** at 5%, * at 10% (boundaries inclusive).
std::string format_stars(double p);

/// Display rounding only: three significant figures for coefficients,
/// two decimals for test statistics.
std::string format_sig3(double x);
std::string format_stat2(double x);

/// World-aggregate series used for the descriptive share block.
struct TotalsSeries {
    std::vector<int> years;
    std::vector<double> exports_total, imports_total, outfdi_total, infdi_total;

    static TotalsSeries load(const std::filesystem::path& path);
};

/// Per-year bilateral-to-total trade and FDI shares (percent).
TableDoc describe_shares(const BilateralPanel& panel, const TotalsSeries& totals,
                         std::vector<std::string>* warnings = nullptr);

/// Keeps only the listed partners (config order ignored; file order kept).
BilateralPanel subset_panel(const BilateralPanel& panel,
                            const std::vector<std::string>& partners);

/// Runs every stage: ingestion and repair, CD tests, unit roots, the four
/// regressions with diagnostics and the robust-path switch.
PipelineReport run_pipeline(const PipelineConfig& cfg);

/// Writes the fixed-name artifacts (cd_tests.csv, unit_roots.csv,
/// reg_<relation>.csv, repairs.csv, report.md) under out_dir.
void write_report(const PipelineReport& report, const std::filesystem::path& out_dir);

/// Convenience: run_pipeline + write_report into cfg.out_dir.
PipelineReport run_and_write(const PipelineConfig& cfg);

}  // namespace gravipanel
