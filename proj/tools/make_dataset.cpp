// Regenerates the bundled synthetic dataset: a 6-partner x 14-year bilateral
// panel with one planted interior FDI gap, plus a matching world-totals file
// whose bilateral shares double over the sample.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gravipanel/dgp.hpp"
#include "gravipanel/ingest.hpp"

namespace gp = gravipanel;

int main(int argc, char** argv) {
    const std::filesystem::path out_dir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(out_dir);

    gp::DgpSpec spec;
    spec.n_entities = 6;
    spec.n_periods = 14;
    spec.n_cee = 3;
    spec.first_year = 2000;
    spec.beta = {{"fdi", 0.10}, {"gdpav", 0.6}, {"gdpcav", 0.4}, {"popav", 0.3},
                 {"bexr", -0.2}, {"dist", -0.9}, {"dummy", 0.5}, {"gdpg", 0.05}};
    spec.effect_mode = "correlated";
    spec.rho_effect = 0.6;
    spec.sigma_effect = 0.4;
    spec.sigma_eps = 0.12;
    spec.persistence = 0.7;
    spec.cross_dependence = 0.8;
    spec.seed = 20140915u;

    gp::BilateralPanel panel = gp::generate(spec);

    // Plant one interior gap: the first CEE partner's outward FDI stock in
    // 2002, mirroring the single interpolated year of the source data.
    {
        Eigen::MatrixXd v = panel.get("outfdi").values();
        v(0, panel.index.period_pos(2002)) = gp::kMissing;
        panel.put(gp::PanelSeries(panel.index, std::move(v), "outfdi"));
    }
    gp::write_panel(panel, out_dir / "cee_synthetic.csv");

    // Totals chosen so the bilateral share climbs from ~8% to ~16%.
    {
        std::ofstream out(out_dir / "cee_synthetic_totals.csv");
        out << "year,exports_total,imports_total,outfdi_total,infdi_total\n";
        const int T = panel.index.n_periods();
        for (int t = 0; t < T; ++t) {
            double ex = 0, im = 0, of = 0, nf = 0;
            for (int i = 0; i < panel.index.n_entities(); ++i) {
                ex += panel.get("exports")(i, t);
                im += panel.get("imports")(i, t);
                const double ofv = panel.get("outfdi")(i, t);
                of += gp::is_missing(ofv) ? 0.0 : ofv;
                nf += panel.get("infdi")(i, t);
            }
            const double share = 0.08 * std::pow(2.0, static_cast<double>(t) / (T - 1));
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%d,%.6e,%.6e,%.6e,%.6e\n", panel.index.period(t),
                          ex / share, im / share, of / share, nf / share);
            out << buf;
        }
    }
    std::cout << "wrote " << (out_dir / "cee_synthetic.csv").string() << "\n";
    return 0;
}
