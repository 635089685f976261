#include "gravipanel/regression.hpp"

#include <cmath>

#include "gravipanel/errors.hpp"

namespace gravipanel {

LinearFit least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const std::vector<std::string>* names) {
    const long n = X.rows();
    const long k = X.cols();
    if (y.size() != n) throw EstimationError("least_squares: X and y row counts differ");
    if (n < k) {
        throw EstimationError("least_squares: " + std::to_string(n) + " rows cannot identify " +
                              std::to_string(k) + " coefficients");
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        // The first non-pivoted column is linearly dependent on the pivoted ones.
        const auto perm = qr.colsPermutation().indices();
        const long bad = perm(qr.rank());
        std::string label = names && bad < static_cast<long>(names->size())
                                ? "'" + (*names)[bad] + "'"
                                : "#" + std::to_string(bad);
        throw EstimationError("least_squares: rank-deficient design, column " + label +
                              " is collinear with the others");
    }

    LinearFit fit;
    fit.n = n;
    fit.k = k;
    fit.beta = qr.solve(y);
    fit.residuals = y - X * fit.beta;
    fit.ssr = fit.residuals.squaredNorm();

    // (X'X)^{-1} = P R^{-1} R^{-T} P'
    Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    Eigen::MatrixXd r_inv =
        R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    Eigen::MatrixXd inv_permuted = r_inv * r_inv.transpose();
    const Eigen::PermutationMatrix<Eigen::Dynamic> P = qr.colsPermutation();
    fit.xtx_inv = P * inv_permuted * P.transpose();
    return fit;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd out(X.rows(), X.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(X.cols()) = X;
    return out;
}

Eigen::MatrixXd pseudo_inverse_sym(const Eigen::MatrixXd& A, int* rank_out) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) {
        throw EstimationError("pseudo_inverse_sym: eigendecomposition failed");
    }
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double scale = ev.cwiseAbs().maxCoeff();
    const double tol = scale > 0 ? 1e-10 * scale : 0.0;
    Eigen::VectorXd inv_ev = Eigen::VectorXd::Zero(ev.size());
    int rank = 0;
    for (long i = 0; i < ev.size(); ++i) {
        if (std::abs(ev(i)) > tol) {
            inv_ev(i) = 1.0 / ev(i);
            ++rank;
        }
    }
    if (rank_out) *rank_out = rank;
    return es.eigenvectors() * inv_ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace gravipanel
