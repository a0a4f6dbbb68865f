/**
 * @file linalg.hpp
 * @brief Dense complex pseudo-inverse, eigendecomposition and least squares.
 *
 * Backed by Eigen's SVD and complex Schur solvers. The rank cutoff used by
 * pinv and lstsq is max(rows, cols) * eps * sigma_max.
 */
#pragma once

#include "stmimo/tensor.hpp"

namespace stmimo {

struct EigResult {
    CVector eigenvalues;
    CMatrix eigenvectors;  // column i pairs with eigenvalues(i)
};

CMatrix pinv(const CMatrix& m);

/// General (non-Hermitian) eigendecomposition; order of eigenvalues is unspecified.
EigResult eig(const CMatrix& m);

/// Minimum-norm X minimizing ||a X - b||_F.
CMatrix lstsq(const CMatrix& a, const CMatrix& b);

/// 2-norm condition number (sigma_max / sigma_min); infinity for rank-deficient input.
double condition_number(const CMatrix& m);

}  // namespace stmimo
