#include "gravipanel/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gravipanel/cross_dependence.hpp"
#include "gravipanel/estimators.hpp"
#include "gravipanel/iv_diagnostics.hpp"
#include "gravipanel/unit_root.hpp"

namespace gravipanel {

std::string format_stars(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("format_stars: p must lie in [0,1]");
    if (p <= 0.01) return "***";
    if (p <= 0.05) return "**";
    if (p <= 0.10) return "*";
    return "";
}

std::string format_sig3(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

std::string format_stat2(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

namespace {

std::string stat_p(double stat, double p, int p_decimals = 2) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.2f (%.*f)", stat, p_decimals, p);
    return buf;
}

std::string coef_cell(const EstimationResult& r, const std::string& name) {
    const int j = r.index(name);
    if (j < 0) return "-";
    return format_sig3(r.coef(j)) + format_stars(r.p(j));
}

// Cells for the grand-mean-restored FE constant.
std::string fe_const_cell(const EstimationResult& fe) {
    if (!fe.fe_constant) return "-";
    return format_sig3(fe.fe_constant->value) + format_stars(fe.fe_constant->p);
}

}  // namespace

TotalsSeries TotalsSeries::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open totals file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("totals file is empty");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string f;
        while (std::getline(ss, f, ',')) out.push_back(f);
        return out;
    };
    const std::vector<std::string> expect = {"year", "exports_total", "imports_total",
                                             "outfdi_total", "infdi_total"};
    if (split(line) != expect) {
        throw ValidationError("totals file must have header "
                              "year,exports_total,imports_total,outfdi_total,infdi_total");
    }

    TotalsSeries t;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != 5) {
            throw ValidationError("totals line " + std::to_string(line_no) + ": need 5 fields");
        }
        auto num = [&](const std::string& raw) {
            double v = 0;
            auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
            if (ec != std::errc() || p != raw.data() + raw.size()) {
                throw ValidationError("totals line " + std::to_string(line_no) +
                                      ": bad number '" + raw + "'");
            }
            return v;
        };
        t.years.push_back(static_cast<int>(num(fields[0])));
        t.exports_total.push_back(num(fields[1]));
        t.imports_total.push_back(num(fields[2]));
        t.outfdi_total.push_back(num(fields[3]));
        t.infdi_total.push_back(num(fields[4]));
    }
    return t;
}

TableDoc describe_shares(const BilateralPanel& panel, const TotalsSeries& totals,
                         std::vector<std::string>* warnings) {
    const PanelIndex& idx = panel.index;
    const PanelSeries& ex = panel.get("exports");
    const PanelSeries& im = panel.get("imports");
    const PanelSeries& of = panel.get("outfdi");
    const PanelSeries& nf = panel.get("infdi");

    TableDoc doc;
    doc.id = "descriptive_shares";
    doc.title = "Bilateral shares of the reporter's totals (percent)";
    doc.columns = {"year", "trade_share", "outfdi_share", "infdi_share"};

    bool truncated = false;
    for (int t = 0; t < idx.n_periods(); ++t) {
        const int year = idx.period(t);
        const auto it = std::find(totals.years.begin(), totals.years.end(), year);
        if (it == totals.years.end()) {
            truncated = true;
            continue;
        }
        const std::size_t k = static_cast<std::size_t>(it - totals.years.begin());
        double bil_trade = 0, bil_out = 0, bil_in = 0;
        for (int i = 0; i < idx.n_entities(); ++i) {
            bil_trade += ex(i, t) + im(i, t);
            bil_out += of(i, t);
            bil_in += nf(i, t);
        }
        const double trade_tot = totals.exports_total[k] + totals.imports_total[k];
        doc.rows.push_back({std::to_string(year),
                            format_stat2(100.0 * bil_trade / trade_tot),
                            format_stat2(100.0 * bil_out / totals.outfdi_total[k]),
                            format_stat2(100.0 * bil_in / totals.infdi_total[k])});
    }
    if (truncated && warnings) {
        warnings->push_back(
            "totals series does not cover the full panel range; share table truncated");
    }
    doc.notes = {"shares are bilateral sums over the partner set divided by the "
                 "reporter's world totals"};
    return doc;
}

BilateralPanel subset_panel(const BilateralPanel& panel,
                            const std::vector<std::string>& partners) {
    if (partners.empty()) return panel;
    std::vector<int> keep;
    for (int i = 0; i < panel.index.n_entities(); ++i) {
        if (std::find(partners.begin(), partners.end(), panel.index.entity(i)) !=
            partners.end()) {
            keep.push_back(i);
        }
    }
    if (keep.size() != partners.size()) {
        for (const auto& p : partners) {
            if (panel.index.entity_pos(p) < 0) {
                throw ValidationError("partner '" + p + "' not present in the input data");
            }
        }
    }
    std::vector<std::string> names;
    std::vector<int> cee;
    for (int i : keep) {
        names.push_back(panel.index.entity(i));
        cee.push_back(panel.cee_partner[i]);
    }
    PanelIndex idx(names, panel.index.periods());
    BilateralPanel out;
    out.reporter = panel.reporter;
    out.index = idx;
    out.cee_partner = cee;
    for (const auto& s : panel.series) {
        Eigen::MatrixXd m(static_cast<long>(keep.size()), idx.n_periods());
        for (std::size_t r = 0; r < keep.size(); ++r) m.row(static_cast<long>(r)) = s.values().row(keep[r]);
        out.series.emplace_back(idx, std::move(m), s.name());
    }
    return out;
}

namespace {

struct RelationRun {
    Relation relation;
    EstimationResult fe, re, tsls;
    TestResult hausman;
    DiagnosticsBundle diag;
    bool robust_used = false;
};

TableDoc cd_table_doc(const std::string& reporter,
                      const std::vector<std::pair<Relation, std::vector<TestResult>>>& blocks,
                      const std::string& residual_source) {
    TableDoc doc;
    doc.id = "cd_tests";
    doc.title = "Cross-sectional dependence tests";
    doc.columns = {"Test", reporter};
    std::string frees_prov = "embedded-table";
    std::string frees_cvs;
    for (const auto& [rel, tests] : blocks) {
        const std::string flow = rel.flow == TradeFlow::Exports ? "Exports" : "Imports";
        const std::string dir = rel.fdi == FdiDirection::Outward ? "outward" : "inward";
        doc.rows.push_back({flow + " - " + dir + " FDI", ""});
        for (const auto& t : tests) {
            std::string cell;
            if (t.p_value) {
                cell = stat_p(t.statistic, *t.p_value, 3);
            } else {
                cell = format_stat2(t.statistic);
            }
            std::string label = t.name;
            if (t.name == "Pesaran CD") label += " (normal)";
            if (t.name == "Friedman") label += " (chi-square)";
            if (t.name == "Frees") {
                label += " (Q)";
                if (!t.provenance.empty()) frees_prov = t.provenance;
                if (t.critical_values) {
                    const auto& cv = *t.critical_values;
                    char buf[128];
                    std::snprintf(buf, sizeof(buf), "%.3f (10%%), %.3f (5%%) and %.3f (1%%)",
                                  cv.at(0.10), cv.at(0.05), cv.at(0.01));
                    frees_cvs = buf;
                }
            }
            doc.rows.push_back({label, cell});
        }
    }
    doc.notes = {
        "(i) the null hypothesis of every test is cross-sectional independence;",
        "(ii) statistics are reported with p-values in parentheses where the reference "
        "distribution has a closed form;",
        "(iii) the critical values of Frees' Q distribution are " + frees_cvs + " [" +
            frees_prov + "];",
        "(iv) residuals taken from the " +
            (residual_source == "fe" ? std::string("within (FE)") : std::string("pooled OLS")) +
            " regression of each relationship."};
    return doc;
}

std::string ur_cell(const UnitRootResult& r, bool trend) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.3f%s (%.2f)", r.tbar, trend ? "^t" : "",
                  r.p_value ? *r.p_value : std::numeric_limits<double>::quiet_NaN());
    return buf;
}

TableDoc regression_table_doc(const RelationRun& run) {
    const Relation& rel = run.relation;
    TableDoc doc;
    doc.id = "reg_" + rel.id();
    const std::string flow = rel.flow == TradeFlow::Exports ? "Exports" : "Imports";
    const std::string dir = rel.fdi == FdiDirection::Outward ? "outward" : "inward";
    doc.title = flow + " and " + dir + " FDI relationship";
    doc.columns = {rel.flow == TradeFlow::Exports ? "exports" : "imports", "FE", "RE",
                   run.robust_used ? "2SLS^r" : "2SLS"};

    auto row = [&](const std::string& name) {
        doc.rows.push_back({name, name == "c" ? fe_const_cell(run.fe) : coef_cell(run.fe, name),
                            coef_cell(run.re, name), coef_cell(run.tsls, name)});
    };
    row("c");
    row(rel.fdi_label());
    for (const auto& c : control_names()) row(c);
    row("dist");
    row("dummy");

    doc.rows.push_back({"Hausman test (recommended)",
                        "P > chi2 = " + format_stat2(*run.hausman.p_value) + " (" +
                            *run.hausman.decision + ")",
                        "", ""});
    doc.rows.push_back({"Pagan-Hall test",
                        stat_p(run.diag.pagan_hall.statistic, *run.diag.pagan_hall.p_value), "",
                        ""});
    doc.rows.push_back({"Wu-Hausman test",
                        stat_p(run.diag.wu_hausman.statistic, *run.diag.wu_hausman.p_value), "",
                        ""});
    doc.rows.push_back({"Durbin-Wu-Hausman test",
                        stat_p(run.diag.durbin_wu_hausman.statistic,
                               *run.diag.durbin_wu_hausman.p_value),
                        "", ""});
    const TestResult& over = run.diag.overid;
    doc.rows.push_back({"Sargan test / Hansen J test",
                        over.p_value ? stat_p(over.statistic, *over.p_value)
                                     : format_stat2(over.statistic),
                        "", ""});
    doc.rows.push_back({"Observations", std::to_string(run.fe.n_obs),
                        std::to_string(run.re.n_obs), std::to_string(run.tsls.n_obs)});

    std::string endog_names = rel.fdi_label();
    doc.notes = {
        "(i) *, **, *** denote significance at the 10%, 5% and 1% levels;",
        "(ii) p-values are reported in parentheses;",
        "(iii) instruments for the endogenous regressors are their first lags;",
        "(iv) the Sargan statistic equals 0.00 when the equation is exactly identified; "
        "Hansen J replaces Sargan when Pagan-Hall signals heteroskedasticity;",
        "(v) 2SLS^r marks 2SLS with heteroskedasticity-robust standard errors;",
        "(vi) endogeneity is assessed with the Wu-Hausman and Durbin-Wu-Hausman tests;",
        "(vii) the dummy takes value 1 for CEE partners and 0 otherwise;",
        "(viii) the FE constant is the grand-mean-restored mean of the entity effects;",
        "(ix) FE drops the time-invariant dist and dummy columns (printed as '-');",
        "(x) the 2SLS sample drops the first period of every entity to build lag "
        "instruments."};
    return doc;
}

}  // namespace

namespace {

// Stage errors must surface with the stage name attached.
template <typename F>
auto pipeline_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("stage ") + stage + ": " + e.what());
    } catch (const EstimationError& e) {
        throw EstimationError(std::string("stage ") + stage + ": " + e.what());
    }
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    PipelineReport report;

    LoadOptions lo;
    lo.years = cfg.years;
    BilateralPanel panel = pipeline_stage("ingest", [&] {
        BilateralPanel p = load_panel(cfg.input, lo, cfg.reporter);
        p = subset_panel(p, cfg.partners);
        if (p.index.n_entities() < 2) {
            throw ValidationError("need at least 2 partners after subsetting");
        }
        if (!cfg.cee_partners.empty()) {
            p.cee_partner = partner_dummy(p.index.entities(), cfg.cee_partners);
        }
        return p;
    });

    PanelRepair repaired = pipeline_stage("repair", [&] {
        return interpolate_panel(panel, cfg.max_gap);
    });
    report.repairs = repaired.report;
    const BilateralPanel& data = repaired.panel;
    if (!data.complete()) {
        for (const auto& s : data.series) {
            if (s.complete()) continue;
            for (int i = 0; i < data.index.n_entities(); ++i)
                for (int t = 0; t < data.index.n_periods(); ++t)
                    if (is_missing(s(i, t))) {
                        throw ValidationError(
                            "pipeline: series '" + s.name() + "' still missing at entity " +
                            data.index.entity(i) + ", year " +
                            std::to_string(data.index.period(t)) +
                            " after repair; widen max_gap or fix the data");
                    }
        }
    }

    // Stage: the four relationship datasets.
    std::vector<GravityDataset> datasets;
    for (const Relation& rel : cfg.relations) {
        datasets.push_back(pipeline_stage(("build-dataset " + rel.id()).c_str(), [&] {
            return build_dataset(data, rel, cfg.growth_shift);
        }));
    }

    // Stage: cross-sectional dependence tests on regression residuals.
    std::vector<std::pair<Relation, std::vector<TestResult>>> cd_blocks;
    for (const auto& ds : datasets) {
        pipeline_stage(("cd-tests " + ds.relation.id()).c_str(), [&] {
            const DesignMatrix m = ds.design();
            const EstimationResult base =
                cfg.cd_residuals == "fe" ? fixed_effects(m) : ols(m);
            const ResidualPanel rp = residual_panel(base, ds.index);
            cd_blocks.push_back(
                {ds.relation, {pesaran_cd(rp), friedman_cd(rp), frees_cd(rp)}});
            return 0;
        });
    }
    report.cd_table = cd_table_doc(data.reporter, cd_blocks, cfg.cd_residuals);

    // Stage: panel unit roots per variable (CADF and IPS columns).
    {
        TableDoc doc;
        doc.id = "unit_roots";
        doc.title = "Panel unit root tests";
        doc.columns = {"Variable", "CADF", "IPS"};

        std::vector<PanelSeries> vars;
        vars.push_back(PanelSeries(data.index, log_transform(data.get("exports")).values(), "ex"));
        vars.push_back(PanelSeries(data.index, log_transform(data.get("imports")).values(), "im"));
        vars.push_back(PanelSeries(data.index, log_transform(data.get("outfdi")).values(),
                                   "outfdi"));
        vars.push_back(PanelSeries(data.index, log_transform(data.get("infdi")).values(),
                                   "infdi"));
        vars.push_back(avg_pair(data.get("gdp_reporter"), data.get("gdp_partner"), "gdpav"));
        vars.push_back(abs_diff(data.get("gdp_reporter"), data.get("gdp_partner"), "gdpdif"));
        vars.push_back(avg_pair(data.get("gdppc_reporter"), data.get("gdppc_partner"), "gdpcav"));
        vars.push_back(
            abs_diff(data.get("gdppc_reporter"), data.get("gdppc_partner"), "gdpcdif"));
        vars.push_back(shifted_log_growth(data.get("growth_partner"), cfg.growth_shift));
        vars.push_back(avg_pair(data.get("pop_reporter"), data.get("pop_partner"), "popav"));
        vars.push_back(PanelSeries(data.index, log_transform(data.get("bexr")).values(), "bexr"));

        std::string prov;
        for (const auto& v : vars) {
            pipeline_stage(("unit-roots " + v.name()).c_str(), [&] {
                const bool trend = std::find(cfg.trend_vars.begin(), cfg.trend_vars.end(),
                                             v.name()) != cfg.trend_vars.end();
                AdfSpec spec;
                spec.lags = cfg.unit_root_lags;
                spec.det = trend ? Deterministic::ConstantTrend : Deterministic::Constant;
                const UnitRootResult cadf = cadf_test(v, spec, cfg.seed);
                const UnitRootResult ips = ips_test(v, spec, cfg.seed);
                prov = cadf.provenance;
                doc.rows.push_back({v.name(), ur_cell(cadf, trend), ur_cell(ips, trend)});
                return 0;
            });
        }
        doc.notes = {
            "(i) the null hypothesis of both tests is a panel unit root;",
            "(ii) CADF augments every entity regression with cross-section averages and is "
            "robust to cross-sectional dependence; IPS assumes independent entities;",
            "(iii) mean t statistics are reported with p-values in parentheses;",
            "(iv) " + std::to_string(cfg.unit_root_lags) + " lags are used;",
            "(v) ^t marks variables tested with a trend term (a constant is used otherwise);",
            "(vi) CADF p-values and critical values are " + prov +
                "; IPS p-values use simulated t-bar moments."};
        report.unitroot_table = doc;
    }

    // Stage: the four regressions with the diagnostic battery.
    for (const auto& ds : datasets) {
        pipeline_stage(("estimate " + ds.relation.id()).c_str(), [&] {
            RelationRun run;
            run.relation = ds.relation;
            const DesignMatrix m = ds.design();
            run.fe = fixed_effects(m);
            run.re = random_effects(m, {}, ReVariance::Auto);
            run.hausman = hausman_test(run.fe, run.re, cfg.hausman_alpha);

            IvSpec iv;
            iv.instrument_lags = cfg.instrument_lags;
            for (const auto& name : cfg.endogenous) {
                iv.endogenous.push_back(name == "fdi" ? ds.relation.fdi_label() : name);
            }
            run.diag = run_iv_diagnostics(m, iv, cfg.robust_alpha);
            run.robust_used = cfg.robust_mode == "always" ||
                              (cfg.robust_mode == "auto" && run.diag.robust_recommended);
            if (cfg.robust_mode == "always") {
                run.diag.overid = hansen_j(m, iv);
                run.diag.used_hansen = true;
            } else if (cfg.robust_mode == "never") {
                run.diag.overid = sargan(m, iv);
                run.diag.used_hansen = false;
            }
            run.tsls = two_sls(m, iv, run.robust_used);
            report.regressions.push_back(regression_table_doc(run));
            return 0;
        });
    }

    // Stage: descriptive shares when totals are supplied.
    if (cfg.totals_input) {
        pipeline_stage("describe", [&] {
            const TotalsSeries totals = TotalsSeries::load(*cfg.totals_input);
            report.descriptive = describe_shares(data, totals, &report.warnings);
            return 0;
        });
    }

    report.provenance = "config " + cfg.fingerprint() + ", seed " + std::to_string(cfg.seed) +
                        ", gravipanel " + kToolkitVersion;
    return report;
}

namespace {

void write_table_csv(const TableDoc& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path.string());
    for (std::size_t c = 0; c < doc.columns.size(); ++c) {
        out << (c ? "," : "") << doc.columns[c];
    }
    out << "\n";
    for (const auto& row : doc.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << "\n";
    }
    for (const auto& note : doc.notes) out << "# " << note << "\n";
}

void write_table_md(const TableDoc& doc, std::ostream& out) {
    out << "## " << doc.title << "\n\n";
    out << "|";
    for (const auto& c : doc.columns) out << " " << c << " |";
    out << "\n|";
    for (std::size_t c = 0; c < doc.columns.size(); ++c) out << "---|";
    out << "\n";
    for (const auto& row : doc.rows) {
        out << "|";
        for (const auto& cell : row) out << " " << cell << " |";
        out << "\n";
    }
    out << "\n";
    for (const auto& note : doc.notes) out << "- " << note << "\n";
    out << "\n";
}

}  // namespace

void write_report(const PipelineReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_table_csv(report.cd_table, out_dir / "cd_tests.csv");
    write_table_csv(report.unitroot_table, out_dir / "unit_roots.csv");
    for (const auto& reg : report.regressions) {
        write_table_csv(reg, out_dir / (reg.id + ".csv"));
    }
    {
        std::ofstream out(out_dir / "repairs.csv");
        write_repair_report(report.repairs, out);
    }

    std::ofstream md(out_dir / "report.md");
    if (!md) throw ValidationError("cannot write report.md");
    md << "# Trade-FDI gravity panel report\n\n";
    if (report.descriptive) write_table_md(*report.descriptive, md);
    write_table_md(report.cd_table, md);
    write_table_md(report.unitroot_table, md);
    for (const auto& reg : report.regressions) write_table_md(reg, md);
    if (!report.warnings.empty()) {
        md << "## Warnings\n\n";
        for (const auto& w : report.warnings) md << "- " << w << "\n";
        md << "\n";
    }
    md << "---\n" << report.provenance << "\n";
}

PipelineReport run_and_write(const PipelineConfig& cfg) {
    PipelineReport report = run_pipeline(cfg);
    write_report(report, cfg.out_dir);
    return report;
}

}  // namespace gravipanel
