#include "gravipanel/panel.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace gravipanel {

PanelIndex::PanelIndex(std::vector<std::string> entities, std::vector<int> periods)
    : entities_(std::move(entities)), periods_(std::move(periods)) {
    if (entities_.empty()) {
        throw ValidationError("panel index: entity list is empty");
    }
    std::set<std::string> seen(entities_.begin(), entities_.end());
    if (seen.size() != entities_.size()) {
        throw ValidationError("panel index: entity identifiers must be unique");
    }
    if (periods_.size() < 3) {
        throw ValidationError("panel index: need at least 3 periods");
    }
    for (std::size_t t = 1; t < periods_.size(); ++t) {
        if (periods_[t] != periods_[t - 1] + 1) {
            std::ostringstream os;
            os << "panel index: periods must be consecutive integers, got " << periods_[t - 1]
               << " followed by " << periods_[t];
            throw ValidationError(os.str());
        }
    }
}

int PanelIndex::entity_pos(const std::string& id) const {
    auto it = std::find(entities_.begin(), entities_.end(), id);
    return it == entities_.end() ? -1 : static_cast<int>(it - entities_.begin());
}

int PanelIndex::period_pos(int year) const {
    if (periods_.empty() || year < periods_.front() || year > periods_.back()) return -1;
    return year - periods_.front();
}

PanelSeries::PanelSeries(PanelIndex index, Eigen::MatrixXd values, std::string name)
    : index_(std::move(index)), values_(std::move(values)), name_(std::move(name)) {
    if (values_.rows() != index_.n_entities() || values_.cols() != index_.n_periods()) {
        std::ostringstream os;
        os << "series '" << name_ << "': value matrix is " << values_.rows() << "x"
           << values_.cols() << " but the index is " << index_.n_entities() << "x"
           << index_.n_periods();
        throw ValidationError(os.str());
    }
}

bool PanelSeries::complete() const { return missing_count() == 0; }

long PanelSeries::missing_count() const {
    long count = 0;
    for (long i = 0; i < values_.rows(); ++i)
        for (long t = 0; t < values_.cols(); ++t)
            if (is_missing(values_(i, t))) ++count;
    return count;
}

int DesignMatrix::col(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw ValidationError("design matrix has no column named '" + name + "'");
    }
    return static_cast<int>(it - names.begin());
}

bool DesignMatrix::has_col(const std::string& name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<std::pair<long, long>> DesignMatrix::entity_blocks() const {
    std::vector<std::pair<long, long>> blocks;
    const long n = n_rows();
    long start = 0;
    for (long r = 1; r <= n; ++r) {
        if (r == n || entity_of_row[r] != entity_of_row[start]) {
            blocks.emplace_back(start, r - start);
            start = r;
        }
    }
    return blocks;
}

void DesignMatrix::validate() const {
    const long n = n_rows();
    if (static_cast<long>(entity_of_row.size()) != n ||
        static_cast<long>(period_of_row.size()) != n) {
        throw ValidationError("design matrix: row index maps do not match the row count");
    }
    if (y.size() != n) {
        throw ValidationError("design matrix: y length does not match the row count");
    }
    if (static_cast<int>(names.size()) != n_cols()) {
        throw ValidationError("design matrix: column name count does not match");
    }
    std::set<std::string> seen(names.begin(), names.end());
    if (seen.size() != names.size()) {
        throw ValidationError("design matrix: column names must be unique");
    }
    std::set<std::int32_t> visited;
    for (long r = 0; r < n; ++r) {
        if (r == 0 || entity_of_row[r] != entity_of_row[r - 1]) {
            if (!visited.insert(entity_of_row[r]).second) {
                throw ValidationError("design matrix: rows are not grouped by entity");
            }
        }
    }
    for (long r = 0; r < n; ++r) {
        if (is_missing(y(r))) {
            throw ValidationError("design matrix: missing value in y at row " + std::to_string(r));
        }
        for (int c = 0; c < n_cols(); ++c) {
            if (is_missing(X(r, c))) {
                throw ValidationError("design matrix: missing value in column '" + names[c] +
                                      "' at row " + std::to_string(r));
            }
        }
    }
}

DesignMatrix stack_panel(const PanelSeries& y, const std::vector<PanelSeries>& columns) {
    const PanelIndex& idx = y.index();
    const int N = idx.n_entities();
    const int T = idx.n_periods();
    for (const auto& c : columns) {
        if (!(c.index() == idx)) {
            throw ValidationError("stack_panel: column '" + c.name() +
                                  "' is indexed on a different panel");
        }
    }

    DesignMatrix m;
    m.y_name = y.name();
    m.n_entities = N;
    const long n = static_cast<long>(N) * T;
    m.X.resize(n, static_cast<long>(columns.size()));
    m.y.resize(n);
    m.entity_of_row.resize(n);
    m.period_of_row.resize(n);
    for (const auto& c : columns) m.names.push_back(c.name());

    long r = 0;
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t, ++r) {
            m.y(r) = y(i, t);
            for (std::size_t c = 0; c < columns.size(); ++c) m.X(r, c) = columns[c](i, t);
            m.entity_of_row[r] = i;
            m.period_of_row[r] = t;
        }
    }
    m.validate();
    return m;
}

namespace {

// A transformed column counts as degenerate when it vanished relative to
// the scale of the original data.
bool column_is_zero(const Eigen::VectorXd& transformed, double original_scale) {
    const double tol = 1e-9 * std::max(1.0, original_scale);
    return transformed.cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

DesignMatrix within_transform(const DesignMatrix& m) {
    m.validate();
    DesignMatrix out = m;
    const auto blocks = m.entity_blocks();
    for (const auto& [start, len] : blocks) {
        if (len < 2) {
            throw EstimationError(
                "within transform: entity with a single row has no within variation (entity index " +
                std::to_string(m.entity_of_row[start]) + ")");
        }
        const Eigen::RowVectorXd col_means = m.X.middleRows(start, len).colwise().mean();
        out.X.middleRows(start, len).rowwise() -= col_means;
        const double y_mean = m.y.segment(start, len).mean();
        out.y.segment(start, len).array() -= y_mean;
    }
    out.degenerate.clear();
    for (int c = 0; c < m.n_cols(); ++c) {
        if (column_is_zero(out.X.col(c), m.X.col(c).cwiseAbs().maxCoeff())) {
            out.X.col(c).setZero();
            out.degenerate.push_back(m.names[c]);
        }
    }
    return out;
}

DesignMatrix quasi_demean(const DesignMatrix& m, const Eigen::VectorXd& theta_per_entity) {
    m.validate();
    const auto blocks = m.entity_blocks();
    if (theta_per_entity.size() != static_cast<long>(blocks.size())) {
        throw ValidationError("quasi_demean: need one theta per entity (got " +
                              std::to_string(theta_per_entity.size()) + " for " +
                              std::to_string(blocks.size()) + " entities)");
    }
    for (long i = 0; i < theta_per_entity.size(); ++i) {
        const double th = theta_per_entity(i);
        if (!(th >= 0.0 && th <= 1.0)) {
            throw ValidationError("quasi_demean: theta must lie in [0,1], got " +
                                  std::to_string(th));
        }
    }
    DesignMatrix out = m;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto [start, len] = blocks[b];
        const double th = theta_per_entity(static_cast<long>(b));
        if (th == 0.0) continue;
        const Eigen::RowVectorXd col_means = m.X.middleRows(start, len).colwise().mean();
        out.X.middleRows(start, len).rowwise() -= th * col_means;
        const double y_mean = m.y.segment(start, len).mean();
        out.y.segment(start, len).array() -= th * y_mean;
    }
    out.degenerate.clear();
    for (int c = 0; c < m.n_cols(); ++c) {
        if (column_is_zero(out.X.col(c), m.X.col(c).cwiseAbs().maxCoeff())) {
            out.degenerate.push_back(m.names[c]);
        }
    }
    return out;
}

PanelSeries lag(const PanelSeries& s, int k) {
    const int T = s.index().n_periods();
    if (k <= 0) throw ValidationError("lag: order must be positive");
    if (k >= T) {
        throw ValidationError("lag: order " + std::to_string(k) +
                              " does not leave any observation in a panel with T = " +
                              std::to_string(T));
    }
    const int N = s.index().n_entities();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(N, T, kMissing);
    for (int i = 0; i < N; ++i)
        for (int t = k; t < T; ++t) out(i, t) = s(i, t - k);
    return PanelSeries(s.index(), std::move(out), s.name() + "_lag" + std::to_string(k));
}

}  // namespace gravipanel
