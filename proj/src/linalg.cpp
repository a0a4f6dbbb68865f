#include "stmimo/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace stmimo {

namespace {

double rank_cutoff(const CMatrix& m, double sigma_max) {
    return static_cast<double>(std::max(m.rows(), m.cols())) * std::numeric_limits<double>::epsilon() *
           sigma_max;
}

}  // namespace

CMatrix pinv(const CMatrix& m) {
    if (m.size() == 0) return CMatrix(m.cols(), m.rows());
    Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVector& s = svd.singularValues();
    const double cutoff = rank_cutoff(m, s.size() ? s(0) : 0.0);

    RVector inv_s = RVector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff) inv_s(i) = 1.0 / s(i);
    }
    return svd.matrixV() * inv_s.asDiagonal() * svd.matrixU().adjoint();
}

EigResult eig(const CMatrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("eig: matrix must be square");
    Eigen::ComplexEigenSolver<CMatrix> solver(m, /*computeEigenvectors=*/true);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eig: QR iteration failed to converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

CMatrix lstsq(const CMatrix& a, const CMatrix& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("lstsq: row counts of a and b differ");
    if (a.size() == 0) return CMatrix::Zero(a.cols(), b.cols());
    Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // Eigen compares against threshold * sigma_max.
    svd.setThreshold(static_cast<double>(std::max(a.rows(), a.cols())) *
                     std::numeric_limits<double>::epsilon());
    return svd.solve(b);
}

double condition_number(const CMatrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    const RVector& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin <= rank_cutoff(m, s(0))) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

}  // namespace stmimo
