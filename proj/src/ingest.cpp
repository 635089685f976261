#include "gravipanel/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace gravipanel {

namespace {

const std::vector<std::string> kValueColumns = {
    "exports",        "imports",        "outfdi",         "infdi",
    "gdp_reporter",   "gdp_partner",    "gdppc_reporter", "gdppc_partner",
    "growth_partner", "pop_reporter",   "pop_partner",    "bexr",
    "dist"};

// Columns that must be strictly positive whenever present.
const std::set<std::string> kPositiveColumns = {
    "exports",      "imports",      "outfdi",         "infdi",
    "gdp_reporter", "gdp_partner",  "gdppc_reporter", "gdppc_partner",
    "pop_reporter", "pop_partner",  "bexr",           "dist"};

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_value(const std::string& raw, long line_no, const std::string& column) {
    if (raw.empty() || raw == "NA") return kMissing;
    double v = 0.0;
    const char* begin = raw.data();
    const char* end = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw ValidationError("line " + std::to_string(line_no) + ", column '" + column +
                              "': cannot parse numeric cell '" + raw + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

struct RawRow {
    std::string reporter, partner;
    int year = 0;
    std::vector<double> values;  // aligned with kValueColumns
    double cee = 0.0;
    long line_no = 0;
};

}  // namespace

const std::vector<std::string>& bilateral_value_columns() { return kValueColumns; }

const PanelSeries& BilateralPanel::get(const std::string& name) const {
    for (const auto& s : series)
        if (s.name() == name) return s;
    throw ValidationError("panel for reporter '" + reporter + "' has no series '" + name + "'");
}

bool BilateralPanel::has(const std::string& name) const {
    for (const auto& s : series)
        if (s.name() == name) return true;
    return false;
}

void BilateralPanel::put(const PanelSeries& s) {
    for (auto& existing : series) {
        if (existing.name() == s.name()) {
            if (!(s.index() == index)) {
                throw ValidationError("put: series '" + s.name() + "' has a different index");
            }
            existing = s;
            return;
        }
    }
    throw ValidationError("put: unknown series '" + s.name() + "'");
}

bool BilateralPanel::complete() const {
    for (const auto& s : series)
        if (!s.complete()) return false;
    return true;
}

std::vector<BilateralPanel> load_panels(const std::filesystem::path& path,
                                        const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open input file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("schema error in " + path.string() +
                              ": empty file, missing mandatory column 'reporter'");
    }

    // Header: order- and case-insensitive, but every declared column must be
    // present and nothing else may appear.
    const std::vector<std::string> header = split_csv_line(line);
    std::map<std::string, int> pos;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = lower(header[c]);
        if (pos.count(name)) throw ValidationError("schema error: duplicate column '" + name + "'");
        pos[name] = static_cast<int>(c);
    }
    std::vector<std::string> required = {"reporter", "partner", "year"};
    required.insert(required.end(), kValueColumns.begin(), kValueColumns.end());
    required.push_back("cee_partner");
    for (const auto& col : required) {
        if (!pos.count(col)) {
            throw ValidationError("schema error: missing mandatory column '" + col + "'");
        }
    }
    if (pos.size() != required.size()) {
        for (const auto& [name, c] : pos) {
            if (std::find(required.begin(), required.end(), name) == required.end()) {
                throw ValidationError("schema error: unknown column '" + name + "'");
            }
        }
    }

    std::vector<RawRow> rows;
    std::set<std::tuple<std::string, std::string, int>> keys;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != pos.size()) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(pos.size()) + " fields, found " +
                                  std::to_string(fields.size()));
        }
        RawRow row;
        row.line_no = line_no;
        row.reporter = fields[pos["reporter"]];
        row.partner = fields[pos["partner"]];
        if (row.reporter.empty() || row.partner.empty()) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": reporter/partner must not be empty");
        }
        const std::string& year_raw = fields[pos["year"]];
        auto [ptr, ec] = std::from_chars(year_raw.data(), year_raw.data() + year_raw.size(),
                                         row.year);
        if (ec != std::errc() || ptr != year_raw.data() + year_raw.size()) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": cannot parse year '" + year_raw + "'");
        }
        if (!keys.insert({row.reporter, row.partner, row.year}).second) {
            throw ValidationError("duplicate key (" + row.reporter + ", " + row.partner + ", " +
                                  std::to_string(row.year) + ") at line " +
                                  std::to_string(line_no));
        }
        for (const auto& col : kValueColumns) {
            const double v = parse_value(fields[pos[col]], line_no, col);
            if (!is_missing(v) && kPositiveColumns.count(col) && v <= 0.0) {
                throw ValidationError("line " + std::to_string(line_no) + ", column '" + col +
                                      "': value must be strictly positive, got " +
                                      format_double(v));
            }
            row.values.push_back(v);
        }
        row.cee = parse_value(fields[pos["cee_partner"]], line_no, "cee_partner");
        if (is_missing(row.cee) || (row.cee != 0.0 && row.cee != 1.0)) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": cee_partner must be 0 or 1");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("no data rows in " + path.string());

    // Group rows per reporter, preserving file order of reporters/partners.
    std::vector<std::string> reporters;
    std::map<std::string, std::vector<const RawRow*>> by_reporter;
    for (const auto& r : rows) {
        if (!by_reporter.count(r.reporter)) reporters.push_back(r.reporter);
        by_reporter[r.reporter].push_back(&r);
    }

    std::vector<BilateralPanel> panels;
    for (const auto& rep : reporters) {
        const auto& rrows = by_reporter[rep];

        int y_min = rrows.front()->year, y_max = y_min;
        for (const auto* r : rrows) {
            y_min = std::min(y_min, r->year);
            y_max = std::max(y_max, r->year);
        }
        if (opts.years) {
            y_min = opts.years->first;
            y_max = opts.years->second;
            for (const auto* r : rrows) {
                if (r->year < y_min || r->year > y_max) {
                    throw ValidationError("line " + std::to_string(r->line_no) + ": year " +
                                          std::to_string(r->year) +
                                          " outside the declared panel range " +
                                          std::to_string(y_min) + "-" + std::to_string(y_max));
                }
            }
        }

        std::vector<std::string> partners;
        for (const auto* r : rrows) {
            if (std::find(partners.begin(), partners.end(), r->partner) == partners.end()) {
                partners.push_back(r->partner);
            }
        }
        std::vector<int> years;
        for (int y = y_min; y <= y_max; ++y) years.push_back(y);

        if (partners.size() < 2) {
            throw ValidationError("reporter '" + rep +
                                  "': a bilateral panel needs at least 2 partners");
        }
        PanelIndex idx(partners, years);
        const int N = idx.n_entities();
        const int T = idx.n_periods();

        // Balanced contract: every (partner, year) row must be present.
        if (static_cast<long>(rrows.size()) != static_cast<long>(N) * T) {
            throw ValidationError("reporter '" + rep + "': unbalanced panel, found " +
                                  std::to_string(rrows.size()) + " rows for " +
                                  std::to_string(N) + " partners x " + std::to_string(T) +
                                  " years");
        }

        std::vector<Eigen::MatrixXd> mats(kValueColumns.size(),
                                          Eigen::MatrixXd::Constant(N, T, kMissing));
        std::vector<int> cee(N, -1);
        for (const auto* r : rrows) {
            const int i = idx.entity_pos(r->partner);
            const int t = idx.period_pos(r->year);
            for (std::size_t c = 0; c < kValueColumns.size(); ++c) mats[c](i, t) = r->values[c];
            const int flag = static_cast<int>(r->cee);
            if (cee[i] == -1) {
                cee[i] = flag;
            } else if (cee[i] != flag) {
                throw ValidationError("partner '" + r->partner +
                                      "': cee_partner flag changes over time");
            }
        }

        BilateralPanel p;
        p.reporter = rep;
        p.index = idx;
        p.cee_partner = cee;
        for (std::size_t c = 0; c < kValueColumns.size(); ++c) {
            p.series.emplace_back(idx, std::move(mats[c]), kValueColumns[c]);
        }
        panels.push_back(std::move(p));
    }
    return panels;
}

BilateralPanel load_panel(const std::filesystem::path& path, const LoadOptions& opts,
                          const std::string& reporter) {
    auto panels = load_panels(path, opts);
    if (reporter.empty()) {
        if (panels.size() != 1) {
            throw ValidationError("file contains " + std::to_string(panels.size()) +
                                  " reporters; select one explicitly");
        }
        return std::move(panels.front());
    }
    for (auto& p : panels)
        if (p.reporter == reporter) return std::move(p);
    throw ValidationError("reporter '" + reporter + "' not found in " + path.string());
}

void write_panel(const BilateralPanel& panel, std::ostream& out) {
    out << "reporter,partner,year";
    for (const auto& col : kValueColumns) out << "," << col;
    out << ",cee_partner\n";
    const int N = panel.index.n_entities();
    const int T = panel.index.n_periods();
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            out << panel.reporter << "," << panel.index.entity(i) << ","
                << panel.index.period(t);
            for (const auto& s : panel.series) {
                out << ",";
                const double v = s(i, t);
                if (!is_missing(v)) out << format_double(v);
            }
            out << "," << panel.cee_partner[i] << "\n";
        }
    }
}

void write_panel(const BilateralPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path.string());
    write_panel(panel, out);
}

SeriesRepair interpolate_gaps(const PanelSeries& s, int max_gap) {
    if (max_gap < 1) throw ValidationError("interpolate_gaps: max_gap must be >= 1");
    const int N = s.index().n_entities();
    const int T = s.index().n_periods();
    Eigen::MatrixXd values = s.values();
    std::vector<RepairEntry> report;

    for (int i = 0; i < N; ++i) {
        const std::string& entity = s.index().entity(i);
        int t = 0;
        while (t < T) {
            if (!is_missing(values(i, t))) {
                ++t;
                continue;
            }
            int gap_end = t;
            while (gap_end < T && is_missing(values(i, gap_end))) ++gap_end;
            const int gap_len = gap_end - t;
            const bool leading = (t == 0);
            const bool trailing = (gap_end == T);
            if (leading || trailing) {
                const char* kind = leading ? "leading-gap-unrepaired" : "trailing-gap-unrepaired";
                for (int g = t; g < gap_end; ++g) {
                    report.push_back({s.name(), entity, s.index().period(g), kind});
                }
            } else if (gap_len > max_gap) {
                for (int g = t; g < gap_end; ++g) {
                    report.push_back({s.name(), entity, s.index().period(g),
                                      "gap-exceeds-max-gap"});
                }
            } else {
                const double lo = values(i, t - 1);
                const double hi = values(i, gap_end);
                const double step = (hi - lo) / (gap_len + 1);
                for (int g = t; g < gap_end; ++g) {
                    values(i, g) = lo + step * (g - t + 1);
                    report.push_back({s.name(), entity, s.index().period(g), "interpolated"});
                }
            }
            t = gap_end;
        }
    }
    return {PanelSeries(s.index(), std::move(values), s.name()), std::move(report)};
}

PanelRepair interpolate_panel(const BilateralPanel& panel, int max_gap) {
    PanelRepair out{panel, {}};
    for (auto& s : out.panel.series) {
        SeriesRepair r = interpolate_gaps(s, max_gap);
        s = std::move(r.series);
        out.report.insert(out.report.end(), r.report.begin(), r.report.end());
    }
    return out;
}

void write_repair_report(const std::vector<RepairEntry>& report, std::ostream& out) {
    out << "series,entity,period,action\n";
    for (const auto& e : report) {
        out << e.series << "," << e.entity << "," << e.period << "," << e.action << "\n";
    }
}

PanelSeries log_transform(const PanelSeries& s) {
    const int N = s.index().n_entities();
    const int T = s.index().n_periods();
    Eigen::MatrixXd values = s.values();
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            const double v = values(i, t);
            if (is_missing(v)) continue;
            if (v <= 0.0) {
                throw ValidationError("log_transform: series '" + s.name() +
                                      "' has non-positive value " + format_double(v) +
                                      " at entity " + s.index().entity(i) + ", year " +
                                      std::to_string(s.index().period(t)));
            }
            values(i, t) = std::log(v);
        }
    }
    return PanelSeries(s.index(), std::move(values), s.name());
}

}  // namespace gravipanel
