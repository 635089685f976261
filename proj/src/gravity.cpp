#include "gravipanel/gravity.hpp"

#include <algorithm>
#include <cmath>

namespace gravipanel {

namespace {

const std::vector<std::string> kControls = {"gdpav",  "gdpdif", "gdpcav", "gdpcdif",
                                            "gdpg",   "popav",  "bexr"};

std::string cell_label(const PanelIndex& idx, int i, int t) {
    return "entity " + idx.entity(i) + ", year " + std::to_string(idx.period(t));
}

void require_same_index(const PanelSeries& a, const PanelSeries& b) {
    if (!(a.index() == b.index())) {
        throw ValidationError("series '" + a.name() + "' and '" + b.name() +
                              "' are indexed on different panels");
    }
}

}  // namespace

std::string Relation::id() const {
    return std::string(flow == TradeFlow::Exports ? "exports" : "imports") + "_" + fdi_label();
}

std::string Relation::y_label() const { return flow == TradeFlow::Exports ? "ex" : "im"; }

std::string Relation::fdi_label() const {
    return fdi == FdiDirection::Outward ? "outfdi" : "infdi";
}

Relation Relation::parse(const std::string& id) {
    for (const Relation& r : all())
        if (r.id() == id) return r;
    throw ValidationError("unknown relation '" + id +
                          "' (expected one of exports_outfdi, exports_infdi, "
                          "imports_outfdi, imports_infdi)");
}

const std::vector<Relation>& Relation::all() {
    static const std::vector<Relation> kAll = {
        {TradeFlow::Exports, FdiDirection::Outward},
        {TradeFlow::Exports, FdiDirection::Inward},
        {TradeFlow::Imports, FdiDirection::Outward},
        {TradeFlow::Imports, FdiDirection::Inward},
    };
    return kAll;
}

const std::vector<std::string>& control_names() { return kControls; }

DesignMatrix GravityDataset::design() const {
    std::vector<PanelSeries> cols;
    cols.push_back(fdi);
    for (const auto& c : controls) cols.push_back(c);
    cols.push_back(dist);
    cols.push_back(dummy);
    return stack_panel(y, cols);
}

PanelSeries avg_pair(const PanelSeries& a, const PanelSeries& b, const std::string& name) {
    require_same_index(a, b);
    const int N = a.index().n_entities();
    const int T = a.index().n_periods();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(N, T, kMissing);
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            const double x = a(i, t), y = b(i, t);
            if (is_missing(x) || is_missing(y)) continue;
            if (x <= 0.0 || y <= 0.0) {
                throw ValidationError("avg_pair(" + name + "): non-positive input at " +
                                      cell_label(a.index(), i, t));
            }
            out(i, t) = std::log(0.5 * (x + y));
        }
    }
    return PanelSeries(a.index(), std::move(out), name);
}

PanelSeries abs_diff(const PanelSeries& a, const PanelSeries& b, const std::string& name) {
    require_same_index(a, b);
    const int N = a.index().n_entities();
    const int T = a.index().n_periods();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(N, T, kMissing);
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            const double x = a(i, t), y = b(i, t);
            if (is_missing(x) || is_missing(y)) continue;
            if (x <= 0.0 || y <= 0.0) {
                throw ValidationError("abs_diff(" + name + "): non-positive input at " +
                                      cell_label(a.index(), i, t));
            }
            if (x == y) {
                throw ValidationError("abs_diff(" + name + "): inputs coincide exactly at " +
                                      cell_label(a.index(), i, t) +
                                      "; the log of a zero difference is undefined");
            }
            out(i, t) = std::log(std::abs(x - y));
        }
    }
    return PanelSeries(a.index(), std::move(out), name);
}

PanelSeries shifted_log_growth(const PanelSeries& g, double shift) {
    const int N = g.index().n_entities();
    const int T = g.index().n_periods();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(N, T, kMissing);
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            const double v = g(i, t);
            if (is_missing(v)) continue;
            if (v <= -shift) {
                throw ValidationError("shifted_log_growth: rate " + std::to_string(v) +
                                      " at " + cell_label(g.index(), i, t) +
                                      " is not above the -" + std::to_string(shift) +
                                      " shift bound");
            }
            out(i, t) = std::log(shift + v);
        }
    }
    return PanelSeries(g.index(), std::move(out), "gdpg");
}

std::vector<int> partner_dummy(const std::vector<std::string>& partners,
                               const std::vector<std::string>& cee_set) {
    for (const auto& c : cee_set) {
        if (std::find(partners.begin(), partners.end(), c) == partners.end()) {
            throw ValidationError("partner_dummy: '" + c + "' is not in the partner set");
        }
    }
    std::vector<int> out;
    out.reserve(partners.size());
    for (const auto& p : partners) {
        const bool cee = std::find(cee_set.begin(), cee_set.end(), p) != cee_set.end();
        out.push_back(cee ? 1 : 0);
    }
    return out;
}

GravityDataset build_dataset(const BilateralPanel& panel, Relation relation,
                             double growth_shift) {
    if (!panel.complete()) {
        for (const auto& s : panel.series) {
            if (s.complete()) continue;
            for (int i = 0; i < panel.index.n_entities(); ++i)
                for (int t = 0; t < panel.index.n_periods(); ++t)
                    if (is_missing(s(i, t))) {
                        throw ValidationError(
                            "build_dataset: series '" + s.name() + "' still missing at " +
                            cell_label(panel.index, i, t) + "; repair the panel first");
                    }
        }
    }

    const PanelIndex& idx = panel.index;
    const int N = idx.n_entities();
    const int T = idx.n_periods();

    GravityDataset ds;
    ds.index = idx;
    ds.relation = relation;

    const std::string y_col = relation.flow == TradeFlow::Exports ? "exports" : "imports";
    {
        PanelSeries raw = panel.get(y_col);
        ds.y = PanelSeries(idx, log_transform(raw).values(), relation.y_label());
    }
    {
        PanelSeries raw = panel.get(relation.fdi_label());
        ds.fdi = PanelSeries(idx, log_transform(raw).values(), relation.fdi_label());
    }

    ds.controls.push_back(avg_pair(panel.get("gdp_reporter"), panel.get("gdp_partner"), "gdpav"));
    ds.controls.push_back(abs_diff(panel.get("gdp_reporter"), panel.get("gdp_partner"), "gdpdif"));
    ds.controls.push_back(
        avg_pair(panel.get("gdppc_reporter"), panel.get("gdppc_partner"), "gdpcav"));
    ds.controls.push_back(
        abs_diff(panel.get("gdppc_reporter"), panel.get("gdppc_partner"), "gdpcdif"));
    ds.controls.push_back(shifted_log_growth(panel.get("growth_partner"), growth_shift));
    ds.controls.push_back(avg_pair(panel.get("pop_reporter"), panel.get("pop_partner"), "popav"));
    ds.controls.push_back(PanelSeries(idx, log_transform(panel.get("bexr")).values(), "bexr"));

    // dist must be constant within entity; enters in logs like the rest.
    {
        const PanelSeries& raw = panel.get("dist");
        for (int i = 0; i < N; ++i) {
            for (int t = 1; t < T; ++t) {
                if (raw(i, t) != raw(i, 0)) {
                    throw ValidationError("build_dataset: dist varies over time for entity " +
                                          idx.entity(i));
                }
            }
        }
        ds.dist = PanelSeries(idx, log_transform(raw).values(), "dist");
    }
    {
        Eigen::MatrixXd d(N, T);
        for (int i = 0; i < N; ++i) d.row(i).setConstant(panel.cee_partner[i]);
        ds.dummy = PanelSeries(idx, std::move(d), "dummy");
    }
    return ds;
}

}  // namespace gravipanel
