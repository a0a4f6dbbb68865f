#include "stmimo/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stmimo {

namespace {

void check_mode(int mode) {
    if (mode < 1 || mode > 3) {
        throw std::invalid_argument("tensor mode must be 1, 2 or 3, got " + std::to_string(mode));
    }
}

void check_same_dims(const Tensor3& x, const Tensor3& y, const char* what) {
    if (x.dims() != y.dims()) {
        throw std::invalid_argument(std::string(what) + ": tensor dimensions differ");
    }
}

}  // namespace

Tensor3::Tensor3(std::size_t d1, std::size_t d2, std::size_t d3, cplx fill)
    : dims_{d1, d2, d3}, data_(d1 * d2 * d3, fill) {}

Tensor3::Tensor3(const Dims3& dims, cplx fill) : Tensor3(dims[0], dims[1], dims[2], fill) {}

std::size_t Tensor3::dim(int mode) const {
    check_mode(mode);
    return dims_[static_cast<std::size_t>(mode - 1)];
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
    check_same_dims(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
    check_same_dims(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor3& Tensor3::operator*=(cplx s) {
    for (auto& v : data_) v *= s;
    return *this;
}

Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator*(Tensor3 a, cplx s) { return a *= s; }

CMatrix unfold(const Tensor3& t, int mode) {
    check_mode(mode);
    const auto [d1, d2, d3] = t.dims();
    CMatrix out;
    switch (mode) {
        case 1:
            out.resize(static_cast<Eigen::Index>(d2 * d3), static_cast<Eigen::Index>(d1));
            for (std::size_t k = 0; k < d3; ++k)
                for (std::size_t j = 0; j < d2; ++j)
                    for (std::size_t i = 0; i < d1; ++i)
                        out(static_cast<Eigen::Index>(j * d3 + k), static_cast<Eigen::Index>(i)) = t(i, j, k);
            break;
        case 2:
            out.resize(static_cast<Eigen::Index>(d3 * d1), static_cast<Eigen::Index>(d2));
            for (std::size_t k = 0; k < d3; ++k)
                for (std::size_t j = 0; j < d2; ++j)
                    for (std::size_t i = 0; i < d1; ++i)
                        out(static_cast<Eigen::Index>(k * d1 + i), static_cast<Eigen::Index>(j)) = t(i, j, k);
            break;
        default:
            out.resize(static_cast<Eigen::Index>(d1 * d2), static_cast<Eigen::Index>(d3));
            for (std::size_t k = 0; k < d3; ++k)
                for (std::size_t j = 0; j < d2; ++j)
                    for (std::size_t i = 0; i < d1; ++i)
                        out(static_cast<Eigen::Index>(i * d2 + j), static_cast<Eigen::Index>(k)) = t(i, j, k);
            break;
    }
    return out;
}

Tensor3 fold(const CMatrix& m, int mode, const Dims3& dims) {
    check_mode(mode);
    const auto [d1, d2, d3] = dims;
    const auto rows = static_cast<std::size_t>(m.rows());
    const auto cols = static_cast<std::size_t>(m.cols());
    const bool ok = (mode == 1 && rows == d2 * d3 && cols == d1) ||
                    (mode == 2 && rows == d3 * d1 && cols == d2) ||
                    (mode == 3 && rows == d1 * d2 && cols == d3);
    if (!ok) throw std::invalid_argument("fold: matrix shape does not match target dims");

    Tensor3 t(dims);
    for (std::size_t k = 0; k < d3; ++k)
        for (std::size_t j = 0; j < d2; ++j)
            for (std::size_t i = 0; i < d1; ++i) {
                std::size_t r = 0, c = 0;
                if (mode == 1) {
                    r = j * d3 + k;
                    c = i;
                } else if (mode == 2) {
                    r = k * d1 + i;
                    c = j;
                } else {
                    r = i * d2 + j;
                    c = k;
                }
                t(i, j, k) = m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
    return t;
}

CMatrix khatri_rao(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                                    " vs " + std::to_string(b.cols()) + ")");
    }
    CMatrix out(a.rows() * b.rows(), a.cols());
    for (Eigen::Index k = 0; k < a.cols(); ++k)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
    return out;
}

Tensor3 hadamard(const Tensor3& x, const Tensor3& y) {
    check_same_dims(x, y, "hadamard");
    Tensor3 out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) out.raw()[i] = x.raw()[i] * y.raw()[i];
    return out;
}

Tensor3 conj(const Tensor3& x) {
    Tensor3 out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) out.raw()[i] = std::conj(x.raw()[i]);
    return out;
}

Tensor3 cp_construct(const CMatrix& a, const CMatrix& b, const CMatrix& c) {
    if (a.cols() != b.cols() || a.cols() != c.cols()) {
        throw std::invalid_argument("cp_construct: factor column counts differ");
    }
    const CMatrix y3 = khatri_rao(a, b) * c.transpose();
    return fold(y3, 3,
                {static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()),
                 static_cast<std::size_t>(c.rows())});
}

Tensor3 concat(const Tensor3& x, const Tensor3& y, int mode) {
    check_mode(mode);
    const auto ax = static_cast<std::size_t>(mode - 1);
    Dims3 out_dims = x.dims();
    for (std::size_t d = 0; d < 3; ++d) {
        if (d != ax && x.dims()[d] != y.dims()[d]) {
            throw std::invalid_argument("concat: dims must agree outside the concatenation mode");
        }
    }
    out_dims[ax] += y.dims()[ax];

    Tensor3 out(out_dims);
    const auto [x1, x2, x3] = x.dims();
    for (std::size_t k = 0; k < x3; ++k)
        for (std::size_t j = 0; j < x2; ++j)
            for (std::size_t i = 0; i < x1; ++i) out(i, j, k) = x(i, j, k);

    const std::size_t s1 = ax == 0 ? x1 : 0;
    const std::size_t s2 = ax == 1 ? x2 : 0;
    const std::size_t s3 = ax == 2 ? x3 : 0;
    const auto [y1, y2, y3] = y.dims();
    for (std::size_t k = 0; k < y3; ++k)
        for (std::size_t j = 0; j < y2; ++j)
            for (std::size_t i = 0; i < y1; ++i) out(i + s1, j + s2, k + s3) = y(i, j, k);
    return out;
}

Tensor3 slice(const Tensor3& t, int mode, std::size_t begin, std::size_t end) {
    check_mode(mode);
    const auto ax = static_cast<std::size_t>(mode - 1);
    if (begin > end || end > t.dims()[ax]) {
        throw std::invalid_argument("slice: index range out of bounds");
    }
    Dims3 out_dims = t.dims();
    out_dims[ax] = end - begin;
    Tensor3 out(out_dims);
    const std::size_t o1 = ax == 0 ? begin : 0;
    const std::size_t o2 = ax == 1 ? begin : 0;
    const std::size_t o3 = ax == 2 ? begin : 0;
    for (std::size_t k = 0; k < out_dims[2]; ++k)
        for (std::size_t j = 0; j < out_dims[1]; ++j)
            for (std::size_t i = 0; i < out_dims[0]; ++i) out(i, j, k) = t(i + o1, j + o2, k + o3);
    return out;
}

double frob_norm(const Tensor3& x) {
    double acc = 0.0;
    for (const auto& v : x.raw()) acc += std::norm(v);
    return std::sqrt(acc);
}

}  // namespace stmimo
