#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gravipanel/errors.hpp"

namespace gravipanel {

/// Sentinel for an unobserved cell. Arithmetic with it propagates, so a
/// missing value can never be silently folded into a sum or a mean.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double x) noexcept { return std::isnan(x); }

/**
 * Entity/period axes of a balanced panel.
 *
 * Entities are identifier strings (partner countries); periods are
 * consecutive integer years. Both axes are frozen at construction.
 */
class PanelIndex {
public:
    PanelIndex() = default;
    PanelIndex(std::vector<std::string> entities, std::vector<int> periods);

    int n_entities() const { return static_cast<int>(entities_.size()); }
    int n_periods() const { return static_cast<int>(periods_.size()); }

    const std::vector<std::string>& entities() const { return entities_; }
    const std::vector<int>& periods() const { return periods_; }

    const std::string& entity(int i) const { return entities_.at(i); }
    int period(int t) const { return periods_.at(t); }

    /// Position of an entity id, or -1 when absent.
    int entity_pos(const std::string& id) const;
    /// Position of a period (year), or -1 when absent.
    int period_pos(int year) const;

    bool operator==(const PanelIndex&) const = default;

private:
    std::vector<std::string> entities_;
    std::vector<int> periods_;
};

/**
 * One variable observed over an N x T balanced panel.
 *
 * Values are stored entity-by-row, period-by-column; unobserved cells hold
 * the missing sentinel. Instances are immutable after construction.
 */
class PanelSeries {
public:
    PanelSeries() = default;
    PanelSeries(PanelIndex index, Eigen::MatrixXd values, std::string name);

    const PanelIndex& index() const { return index_; }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::string& name() const { return name_; }

    double operator()(int i, int t) const { return values_(i, t); }

    /// True iff no missing cells remain.
    bool complete() const;
    long missing_count() const;

    /// One entity's time series as a column vector.
    Eigen::VectorXd entity_series(int i) const { return values_.row(i).transpose(); }

private:
    PanelIndex index_;
    Eigen::MatrixXd values_;
    std::string name_;
};

/**
 * Stacked regression data: n rows of named regressor columns plus the
 * dependent column, with the panel coordinates of every row retained.
 *
 * Rows are entity-major / time-minor and every estimator relies on that
 * ordering. No cell may be missing.
 */
struct DesignMatrix {
    std::vector<std::string> names;  ///< column names, unique
    Eigen::MatrixXd X;               ///< n x k
    Eigen::VectorXd y;
    std::string y_name;
    std::vector<std::int32_t> entity_of_row;  ///< 0..N-1 per row
    std::vector<std::int32_t> period_of_row;  ///< 0..T-1 per row (positions, not years)
    int n_entities = 0;
    /// Columns flagged degenerate (identically zero) by a transform.
    std::vector<std::string> degenerate;

    long n_rows() const { return X.rows(); }
    int n_cols() const { return static_cast<int>(X.cols()); }

    /// Column index by name; throws ValidationError when absent.
    int col(const std::string& name) const;
    bool has_col(const std::string& name) const;

    /// Row ranges per entity: {first_row, count}, in entity order.
    std::vector<std::pair<long, long>> entity_blocks() const;

    /// Validates shape, ordering and completeness; throws ValidationError.
    void validate() const;
};

/// Builds a DesignMatrix from complete panel series (entity-major stacking).
DesignMatrix stack_panel(const PanelSeries& y, const std::vector<PanelSeries>& columns);

/**
 * Replaces every column (and y) by deviations from its entity mean.
 * Time-invariant columns become identically zero and are flagged in
 * `degenerate`. Entities with a single row are rejected.
 */
DesignMatrix within_transform(const DesignMatrix& m);

/**
 * Partial demeaning x_it - theta_i * xbar_i. theta_i = 0 leaves the data
 * unchanged, theta_i = 1 reproduces the within transform.
 */
DesignMatrix quasi_demean(const DesignMatrix& m, const Eigen::VectorXd& theta_per_entity);

/**
 * Shifts a series k periods forward within each entity: the value at (i,t)
 * becomes the input's value at (i,t-k); the first k periods turn missing.
 * Never crosses entity boundaries. Requires k < T.
 */
PanelSeries lag(const PanelSeries& s, int k);

}  // namespace gravipanel
