// gravipanel command-line driver: validation, descriptives, test batteries,
// estimation and the full pipeline, plus the Monte Carlo harness.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gravipanel/config.hpp"
#include "gravipanel/cross_dependence.hpp"
#include "gravipanel/dgp.hpp"
#include "gravipanel/estimators.hpp"
#include "gravipanel/gravity.hpp"
#include "gravipanel/ingest.hpp"
#include "gravipanel/iv_diagnostics.hpp"
#include "gravipanel/report.hpp"
#include "gravipanel/unit_root.hpp"

namespace gp = gravipanel;
namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string input;
    std::string reporter;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "configuration file (key = value sections)");
    cmd->add_option("--input", args.input, "input CSV, overrides the config");
    cmd->add_option("--reporter", args.reporter, "reporter id, overrides the config");
    cmd->add_option("--out", args.out, "output directory, overrides the config");
    cmd->add_option("--seed", args.seed, "master seed, overrides the config")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

gp::ConfigFile load_config(const CommonArgs& args) {
    if (args.config_path.empty()) return gp::ConfigFile::parse_string("");
    return gp::ConfigFile::parse_file(args.config_path);
}

gp::PipelineConfig pipeline_config(const CommonArgs& args) {
    gp::ConfigFile cfg = load_config(args);
    gp::PipelineConfig pc;
    if (!args.config_path.empty()) {
        pc = gp::PipelineConfig::from_config(cfg);
    }
    if (!args.input.empty()) pc.input = args.input;
    if (!args.reporter.empty()) pc.reporter = args.reporter;
    if (!args.out.empty()) pc.out_dir = args.out;
    if (args.seed_set) pc.seed = args.seed;
    if (pc.input.empty()) throw gp::ValidationError("no input file (use --input or the config)");
    pc.validate();
    return pc;
}

void print_table(const gp::TableDoc& doc) {
    std::cout << "== " << doc.title << " ==\n";
    for (std::size_t c = 0; c < doc.columns.size(); ++c) {
        std::cout << (c ? " | " : "") << doc.columns[c];
    }
    std::cout << "\n";
    for (const auto& row : doc.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) std::cout << (c ? " | " : "") << row[c];
        std::cout << "\n";
    }
    for (const auto& n : doc.notes) std::cout << "  note " << n << "\n";
    std::cout << "\n";
}

int cmd_validate(const CommonArgs& args) {
    const gp::PipelineConfig pc = pipeline_config(args);
    gp::LoadOptions lo;
    lo.years = pc.years;
    const auto panels = gp::load_panels(pc.input, lo);
    for (const auto& p : panels) {
        gp::BilateralPanel sub = gp::subset_panel(p, pc.partners);
        const gp::PanelRepair repaired = gp::interpolate_panel(sub, pc.max_gap);
        long interpolated = 0, unrepaired = 0;
        for (const auto& e : repaired.report) {
            (e.action == "interpolated" ? interpolated : unrepaired) += 1;
        }
        std::cout << "reporter " << p.reporter << ": N=" << sub.index.n_entities()
                  << " T=" << sub.index.n_periods() << " rows=" << sub.n_rows()
                  << " interpolated=" << interpolated << " unrepaired=" << unrepaired
                  << " complete=" << (repaired.panel.complete() ? "yes" : "no") << "\n";
        if (!args.out.empty()) {
            fs::create_directories(args.out);
            std::ofstream out(fs::path(args.out) / (p.reporter + "_repairs.csv"));
            gp::write_repair_report(repaired.report, out);
        }
    }
    std::cout << "validation ok\n";
    return 0;
}

int cmd_describe(const CommonArgs& args) {
    const gp::PipelineConfig pc = pipeline_config(args);
    if (!pc.totals_input) {
        throw gp::ValidationError("describe needs data.totals_input in the config");
    }
    gp::LoadOptions lo;
    lo.years = pc.years;
    gp::BilateralPanel panel = gp::subset_panel(gp::load_panel(pc.input, lo, pc.reporter),
                                                pc.partners);
    const gp::PanelRepair repaired = gp::interpolate_panel(panel, pc.max_gap);
    std::vector<std::string> warnings;
    const gp::TableDoc doc = gp::describe_shares(
        repaired.panel, gp::TotalsSeries::load(*pc.totals_input), &warnings);
    print_table(doc);
    for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_pipeline(const CommonArgs& args) {
    const gp::PipelineConfig pc = pipeline_config(args);
    const gp::PipelineReport report = gp::run_and_write(pc);
    std::cout << "report written to " << pc.out_dir.string() << " (" << report.provenance
              << ")\n";
    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

int cmd_cdtest(const CommonArgs& args) {
    const gp::PipelineConfig pc = pipeline_config(args);
    gp::PipelineReport report = gp::run_pipeline(pc);  // cd table is part of the full run
    print_table(report.cd_table);
    if (!args.out.empty() || !pc.out_dir.empty()) {
        gp::write_report(report, pc.out_dir);
    }
    return 0;
}

int cmd_urtest(const CommonArgs& args) {
    const gp::PipelineConfig pc = pipeline_config(args);
    gp::PipelineReport report = gp::run_pipeline(pc);
    print_table(report.unitroot_table);
    gp::write_report(report, pc.out_dir);
    return 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& relation) {
    gp::PipelineConfig pc = pipeline_config(args);
    pc.relations = {gp::Relation::parse(relation.empty() ? "exports_outfdi" : relation)};
    gp::PipelineReport report = gp::run_pipeline(pc);
    print_table(report.regressions.front());
    gp::write_report(report, pc.out_dir);
    return 0;
}

int cmd_mc(const CommonArgs& args, const std::vector<std::string>& stats, int reps,
           int workers) {
    gp::ConfigFile cfg = load_config(args);
    gp::DgpSpec spec = gp::dgp_from_config(cfg);
    if (args.seed_set) spec.seed = args.seed;
    std::vector<std::string> requested = stats;
    if (requested.empty()) requested = cfg.list("mc.statistics");
    const int n_reps = reps > 0 ? reps : static_cast<int>(cfg.integer("mc.reps", 1000));
    const gp::McSummary sum = gp::run_mc(spec, requested, n_reps, workers);

    const fs::path out_dir = args.out.empty() ? fs::path(cfg.str("output.out_dir", "out"))
                                              : fs::path(args.out);
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "mc_summary.csv");
    gp::write_mc_csv(sum, out);
    gp::write_mc_csv(sum, std::cout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gravipanel: bilateral trade-FDI gravity panel toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string relation;
    std::vector<std::string> mc_stats;
    int mc_reps = 0;
    int mc_workers = 1;

    CLI::App* validate = app.add_subcommand("validate", "load and validate the input data");
    add_common(validate, args);
    CLI::App* describe = app.add_subcommand("describe", "bilateral share descriptives");
    add_common(describe, args);
    CLI::App* cdtest = app.add_subcommand("cdtest", "cross-sectional dependence tests");
    add_common(cdtest, args);
    CLI::App* urtest = app.add_subcommand("urtest", "panel unit root tests");
    add_common(urtest, args);
    CLI::App* estimate = app.add_subcommand("estimate", "estimate a single relationship");
    add_common(estimate, args);
    estimate->add_option("--relation", relation,
                         "exports_outfdi | exports_infdi | imports_outfdi | imports_infdi");
    CLI::App* pipeline = app.add_subcommand("pipeline", "run every stage and write the report");
    add_common(pipeline, args);
    CLI::App* mc = app.add_subcommand("mc", "Monte Carlo size/power experiments");
    add_common(mc, args);
    mc->add_option("--statistics", mc_stats, "statistics to evaluate");
    mc->add_option("--reps", mc_reps, "replications");
    mc->add_option("--workers", mc_workers, "worker threads");

    try {
        app.parse(argc, argv);
        if (validate->parsed()) return cmd_validate(args);
        if (describe->parsed()) return cmd_describe(args);
        if (cdtest->parsed()) return cmd_cdtest(args);
        if (urtest->parsed()) return cmd_urtest(args);
        if (estimate->parsed()) return cmd_estimate(args, relation);
        if (pipeline->parsed()) return cmd_pipeline(args);
        if (mc->parsed()) return cmd_mc(args, mc_stats, mc_reps, mc_workers);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const gp::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const gp::EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
