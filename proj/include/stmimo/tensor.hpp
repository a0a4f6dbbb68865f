/**
 * @file tensor.hpp
 * @brief Dense complex 3-order tensors and the multilinear algebra built on them.
 *
 * Index convention (documented 1-based, stored 0-based):
 *   - mode-1 unfolding of a d1 x d2 x d3 tensor is (d2*d3) x d1, element
 *     (i1, i2, i3) at row i2*d3 + i3, column i1, so that a CP tensor with
 *     factors (A, B, C) unfolds to khatri_rao(B, C) * A^T;
 *   - mode-2 unfolding is (d3*d1) x d2, row i3*d1 + i1, column i2
 *     (khatri_rao(C, A) * B^T);
 *   - mode-3 unfolding is (d1*d2) x d3, row i1*d2 + i2, column i3
 *     (khatri_rao(A, B) * C^T).
 * Every module relies on this single convention.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace stmimo {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

using Dims3 = std::array<std::size_t, 3>;

class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, cplx fill = cplx{0.0, 0.0});
    explicit Tensor3(const Dims3& dims, cplx fill = cplx{0.0, 0.0});

    static Tensor3 ones(std::size_t d1, std::size_t d2, std::size_t d3) {
        return Tensor3(d1, d2, d3, cplx{1.0, 0.0});
    }

    const Dims3& dims() const noexcept { return dims_; }
    std::size_t dim(int mode) const;  // mode in {1,2,3}
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    cplx& operator()(std::size_t i1, std::size_t i2, std::size_t i3) {
        return data_[offset(i1, i2, i3)];
    }
    const cplx& operator()(std::size_t i1, std::size_t i2, std::size_t i3) const {
        return data_[offset(i1, i2, i3)];
    }

    std::vector<cplx>& raw() noexcept { return data_; }
    const std::vector<cplx>& raw() const noexcept { return data_; }

    Tensor3& operator+=(const Tensor3& other);
    Tensor3& operator-=(const Tensor3& other);
    Tensor3& operator*=(cplx s);

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t offset(std::size_t i1, std::size_t i2, std::size_t i3) const noexcept {
        return i1 + dims_[0] * (i2 + dims_[1] * i3);
    }

    Dims3 dims_{0, 0, 0};
    std::vector<cplx> data_;
};

Tensor3 operator+(Tensor3 a, const Tensor3& b);
Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator*(Tensor3 a, cplx s);

/// Matricize along `mode` (1, 2 or 3); throws std::invalid_argument otherwise.
CMatrix unfold(const Tensor3& t, int mode);

/// Inverse of unfold for a tensor of the given dims.
Tensor3 fold(const CMatrix& m, int mode, const Dims3& dims);

/// Column-wise Kronecker product: column k is kron(a.col(k), b.col(k)).
CMatrix khatri_rao(const CMatrix& a, const CMatrix& b);

Tensor3 hadamard(const Tensor3& x, const Tensor3& y);

Tensor3 conj(const Tensor3& x);

/// Element (m,n,q) = sum_k a(m,k) b(n,k) c(q,k).
Tensor3 cp_construct(const CMatrix& a, const CMatrix& b, const CMatrix& c);

/// Stack y after x along `mode`; all other dims must agree.
Tensor3 concat(const Tensor3& x, const Tensor3& y, int mode);

/// Half-open index range [begin, end) along `mode`, full range along the others.
Tensor3 slice(const Tensor3& t, int mode, std::size_t begin, std::size_t end);

double frob_norm(const Tensor3& x);

}  // namespace stmimo
