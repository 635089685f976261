#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gravipanel/panel.hpp"

namespace gravipanel {

/// Value columns of the bilateral CSV contract, in canonical order.
/// Key columns (reporter, partner, year) and the 0/1 cee_partner flag are
/// handled separately.
const std::vector<std::string>& bilateral_value_columns();

/**
 * A balanced reporter-level panel of raw bilateral series, straight from
 * ingestion. Series may contain missing cells until repaired; rows
 * (partner, year) must all be present.
 */
struct BilateralPanel {
    std::string reporter;
    PanelIndex index;                 ///< partners x years
    std::vector<PanelSeries> series;  ///< one per value column, canonical order
    std::vector<int> cee_partner;     ///< per-entity 0/1 flag

    const PanelSeries& get(const std::string& name) const;
    bool has(const std::string& name) const;
    /// Replaces a series (same name and index).
    void put(const PanelSeries& s);
    bool complete() const;
    long n_rows() const { return static_cast<long>(index.n_entities()) * index.n_periods(); }
};

struct LoadOptions {
    /// Expected year range; inferred from the file when absent.
    std::optional<std::pair<int, int>> years;
};

/// Reads every reporter's panel from a bilateral CSV. Reporters keep file order.
std::vector<BilateralPanel> load_panels(const std::filesystem::path& path,
                                        const LoadOptions& opts = {});

/// Reads a single reporter's panel; `reporter` may be empty when the file
/// holds exactly one.
BilateralPanel load_panel(const std::filesystem::path& path, const LoadOptions& opts = {},
                          const std::string& reporter = "");

/// Writes a panel in the canonical CSV form (stable column order, shortest
/// round-trip number formatting, missing cells empty).
void write_panel(const BilateralPanel& panel, std::ostream& out);
void write_panel(const BilateralPanel& panel, const std::filesystem::path& path);

/// One row of the gap-repair report.
struct RepairEntry {
    std::string series;
    std::string entity;
    int period = 0;  ///< year
    std::string action;
};

struct SeriesRepair {
    PanelSeries series;
    std::vector<RepairEntry> report;
};

/**
 * Fills interior gaps of length <= max_gap by linear interpolation between
 * the bracketing observed values. Leading/trailing gaps and over-long gaps
 * are left missing and reported.
 */
SeriesRepair interpolate_gaps(const PanelSeries& s, int max_gap);

struct PanelRepair {
    BilateralPanel panel;
    std::vector<RepairEntry> report;
};

/// Applies interpolate_gaps to every series of the panel.
PanelRepair interpolate_panel(const BilateralPanel& panel, int max_gap);

/// Writes the repair report CSV (series, entity, period, action).
void write_repair_report(const std::vector<RepairEntry>& report, std::ostream& out);

/**
 * Element-wise natural log. Rejects zero or negative values, naming the
 * offending series cell; missing cells stay missing.
 */
PanelSeries log_transform(const PanelSeries& s);

}  // namespace gravipanel
