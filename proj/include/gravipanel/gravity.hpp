#pragma once

#include <string>
#include <vector>

#include "gravipanel/ingest.hpp"
#include "gravipanel/panel.hpp"

namespace gravipanel {

enum class TradeFlow { Exports, Imports };
enum class FdiDirection { Outward, Inward };

/// One of the four trade-FDI relationships a dataset can encode.
struct Relation {
    TradeFlow flow = TradeFlow::Exports;
    FdiDirection fdi = FdiDirection::Outward;

    /// Stable identifier, e.g. "exports_outfdi".
    std::string id() const;
    /// Short dependent-variable label: "ex" or "im".
    std::string y_label() const;
    /// FDI column label: "outfdi" or "infdi".
    std::string fdi_label() const;

    static Relation parse(const std::string& id);
    static const std::vector<Relation>& all();
};

/// Control column names, in table order.
const std::vector<std::string>& control_names();

/**
 * Regression-ready panel for one relationship: the logged dependent
 * variable, the logged FDI stock, the logged control set and the two
 * time-invariant columns. Every cell is finite.
 */
struct GravityDataset {
    PanelIndex index;
    Relation relation;
    PanelSeries y;                    ///< ln exports or ln imports
    PanelSeries fdi;                  ///< ln outward or ln inward FDI stock
    std::vector<PanelSeries> controls;  ///< gdpav gdpdif gdpcav gdpcdif gdpg popav bexr
    PanelSeries dist;                 ///< ln distance, constant within entity
    PanelSeries dummy;                ///< 1 for CEE partners, 0 otherwise

    /// Stacked design: columns [fdi, controls..., dist, dummy].
    DesignMatrix design() const;
};

/// Element-wise ln((a+b)/2); inputs must be positive.
PanelSeries avg_pair(const PanelSeries& a, const PanelSeries& b, const std::string& name);

/// Element-wise ln(|a-b|); an exact tie is an error, not an epsilon fill.
PanelSeries abs_diff(const PanelSeries& a, const PanelSeries& b, const std::string& name);

/// ln(shift + g) for growth rates in percentage points; default shift 10
/// keeps recession-year values positive.
PanelSeries shifted_log_growth(const PanelSeries& g, double shift = 10.0);

/// 1 for partners in the CEE set, 0 otherwise.
std::vector<int> partner_dummy(const std::vector<std::string>& partners,
                               const std::vector<std::string>& cee_set);

/// Builds the full regressor set from a complete bilateral panel. The
/// growth shift is the constant inside ln(shift + growth); 10 matches
/// rates quoted in percentage points.
GravityDataset build_dataset(const BilateralPanel& panel, Relation relation,
                             double growth_shift = 10.0);

}  // namespace gravipanel
