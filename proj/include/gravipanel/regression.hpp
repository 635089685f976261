#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gravipanel {

/// Output of the dense least-squares core shared by every estimator.
struct LinearFit {
    Eigen::VectorXd beta;
    Eigen::MatrixXd xtx_inv;  ///< (X'X)^{-1}
    Eigen::VectorXd residuals;
    double ssr = 0.0;
    long n = 0;
    long k = 0;
};

/**
 * Solves min ||y - X b|| by column-pivoted QR. Throws EstimationError on
 * rank deficiency, naming a redundant column when names are supplied.
 */
LinearFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::string>* names = nullptr);

/// Prepends a column of ones.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X);

/// Moore-Penrose pseudo-inverse of a symmetric matrix; also reports rank.
Eigen::MatrixXd pseudo_inverse_sym(const Eigen::MatrixXd& A, int* rank_out);

}  // namespace gravipanel
