#include "stmimo/decomposition.hpp"

#include "stmimo/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stmimo {

namespace {

constexpr double kSwampCondition = 1e8;
constexpr double kExactFit = 1e-14;

enum class SweepKind { standard, weighted };

struct Problem {
    SweepKind kind = SweepKind::standard;
    Dims3 dims{};
    CMatrix y1, y2, y3;  // unfoldings of the tensor the sweep fits
    CMatrix d1, d2, d3;  // mask unfoldings (weighted sweep only)
    double norm = 0.0;   // ||Y||_F of the original data
};

Problem make_problem(const Tensor3& t, SweepKind kind, const Tensor3* mask, double norm) {
    Problem p;
    p.kind = kind;
    p.dims = t.dims();
    p.y1 = unfold(t, 1);
    p.y2 = unfold(t, 2);
    p.y3 = unfold(t, 3);
    if (kind == SweepKind::weighted) {
        p.d1 = unfold(*mask, 1);
        p.d2 = unfold(*mask, 2);
        p.d3 = unfold(*mask, 3);
    }
    p.norm = norm;
    return p;
}

// Solve y ~ (kr * d_col) x column by column, returning the factor (rows = columns of y).
CMatrix weighted_update(const CMatrix& kr, const CMatrix& y, const CMatrix& d) {
    CMatrix out(y.cols(), kr.cols());
    for (Eigen::Index i = 0; i < y.cols(); ++i) {
        const CMatrix design = d.col(i).asDiagonal() * kr;
        out.row(i) = lstsq(design, y.col(i)).transpose();
    }
    return out;
}

CMatrix factor_update(const Problem& p, const CMatrix& kr, const CMatrix& y, const CMatrix& d) {
    if (p.kind == SweepKind::weighted) return weighted_update(kr, y, d);
    return lstsq(kr, y).transpose();
}

double relative_residual(const Problem& p, const CMatrix& a, const CMatrix& b, const CMatrix& c) {
    if (p.norm == 0.0) return 0.0;
    CMatrix model = khatri_rao(a, b) * c.transpose();
    if (p.kind == SweepKind::weighted) model = model.cwiseProduct(p.d3);
    return (p.y3 - model).norm() / p.norm;
}

// Unit-norm columns of a and b, first nonzero entry real positive; returns flagged columns.
std::vector<std::size_t> rescale(CMatrix& a, CMatrix& b, CMatrix& c) {
    std::vector<std::size_t> flagged;
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double na = a.col(k).norm();
        const double nb = b.col(k).norm();
        if (na == 0.0 || nb == 0.0) {
            flagged.push_back(static_cast<std::size_t>(k));
            continue;
        }
        auto first_phase = [](const auto& col) {
            for (Eigen::Index i = 0; i < col.size(); ++i)
                if (col(i) != cplx{0.0, 0.0}) return std::arg(col(i));
            return 0.0;
        };
        const cplx sa = std::polar(na, first_phase(a.col(k)));
        const cplx sb = std::polar(nb, first_phase(b.col(k)));
        a.col(k) /= sa;
        b.col(k) /= sb;
        c.col(k) *= sa * sb;
    }
    return flagged;
}

void check_rank(const Dims3& dims, std::size_t k) {
    if (k < 1) throw std::invalid_argument("ALS: rank must be >= 1");
    const std::size_t p12 = dims[0] * dims[1];
    const std::size_t p13 = dims[0] * dims[2];
    const std::size_t p23 = dims[1] * dims[2];
    if (k > std::max({p12, p13, p23})) {
        throw std::invalid_argument("ALS: rank " + std::to_string(k) +
                                    " exceeds every pairwise dimension product; model not identifiable");
    }
}

void check_init(const Dims3& dims, const FactorInit& init) {
    const auto k = init.a.cols();
    if (k < 1 || init.b.cols() != k || init.c.cols() != k ||
        init.a.rows() != static_cast<Eigen::Index>(dims[0]) || init.b.rows() != static_cast<Eigen::Index>(dims[1]) ||
        init.c.rows() != static_cast<Eigen::Index>(dims[2])) {
        throw std::invalid_argument("ALS: initial factors do not match the tensor dims");
    }
}

FactorSet run_sweeps(const Problem& p, const FactorInit& init, const AlsOptions& opts) {
    FactorSet out;
    out.a = init.a;
    out.b = init.b;
    out.c = init.c;
    const auto k = static_cast<std::size_t>(init.a.cols());
    out.identifiable = k == 1 || satisfies_rank_bound(p.dims, k);  // rank-1 fits are always unique

    if (p.norm == 0.0) {
        out.a.setZero();
        out.b.setZero();
        out.c.setZero();
        out.fit = 0.0;
        out.residual_history = {0.0};
        out.iters_used = 0;
        out.converged = true;
        return out;
    }

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opts.max_iters; ++it) {
        out.a = factor_update(p, khatri_rao(out.b, out.c), p.y1, p.d1);
        out.b = factor_update(p, khatri_rao(out.c, out.a), p.y2, p.d2);
        out.c = factor_update(p, khatri_rao(out.a, out.b), p.y3, p.d3);
        rescale(out.a, out.b, out.c);

        const double res = relative_residual(p, out.a, out.b, out.c);
        out.residual_history.push_back(res);
        out.iters_used = it;
        out.fit = res;
        if (res <= kExactFit || (std::isfinite(prev) && prev - res <= opts.rel_tol * prev)) {
            out.converged = true;
            break;
        }
        prev = res;
    }

    out.swamp = condition_number(out.a) > kSwampCondition || condition_number(out.b) > kSwampCondition ||
                condition_number(out.c) > kSwampCondition;
    return out;
}

FactorSet best_of_restarts(const Problem& p, const Tensor3& init_source, std::size_t k, const AlsOptions& opts) {
    FactorSet best;
    bool have = false;
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        FactorSet f = run_sweeps(p, initial_factors(init_source, k, opts, r), opts);
        f.restart = r;
        if (!have || f.fit < best.fit) {
            best = std::move(f);
            have = true;
        }
        if (p.norm == 0.0) break;
    }
    return best;
}

SweepKind resolve_solver(const MaskTensor& mask, MaskedSolver solver) {
    switch (solver) {
        case MaskedSolver::demodulate:
            if (!is_unit_modulus(mask.tensor)) {
                throw std::invalid_argument("masked ALS: demodulation requires a unit-modulus mask");
            }
            return SweepKind::standard;
        case MaskedSolver::weighted:
            return SweepKind::weighted;
        case MaskedSolver::automatic:
        default:
            return is_unit_modulus(mask.tensor) ? SweepKind::standard : SweepKind::weighted;
    }
}

Problem masked_problem(const Tensor3& t, const MaskTensor& mask, MaskedSolver solver) {
    if (mask.tensor.dims() != t.dims()) throw std::invalid_argument("masked ALS: mask dims differ from tensor dims");
    for (const auto& v : mask.tensor.raw()) {
        if (v == cplx{0.0, 0.0}) throw std::invalid_argument("masked ALS: mask has zero entries");
    }
    const SweepKind kind = resolve_solver(mask, solver);
    const double norm = frob_norm(t);
    if (kind == SweepKind::standard) return make_problem(hadamard(t, conj(mask.tensor)), kind, nullptr, norm);
    return make_problem(t, kind, &mask.tensor, norm);
}

}  // namespace

void AlsOptions::validate() const {
    if (max_iters < 1) throw std::invalid_argument("ALS options: max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("ALS options: rel_tol must be > 0");
    if (restarts < 1) throw std::invalid_argument("ALS options: restarts must be >= 1");
}

bool satisfies_rank_bound(const Dims3& dims, std::size_t k) {
    return std::min(dims[0], k) + std::min(dims[1], k) + std::min(dims[2], k) >= 2 * k + 2;
}

FactorInit initial_factors(const Tensor3& t, std::size_t k, const AlsOptions& opts, std::size_t restart) {
    Rng rng(derive_seed(opts.seed, {restart}));
    const auto kk = static_cast<Eigen::Index>(k);
    const auto [d1, d2, d3] = t.dims();
    FactorInit init{complex_gaussian_matrix(rng, static_cast<Eigen::Index>(d1), kk),
                    complex_gaussian_matrix(rng, static_cast<Eigen::Index>(d2), kk),
                    complex_gaussian_matrix(rng, static_cast<Eigen::Index>(d3), kk)};
    if (opts.init == AlsInit::svd && restart == 0) {
        // leading left singular vectors of the transposed unfoldings, random fill past the rank
        auto leading = [kk](const CMatrix& unf, CMatrix& target) {
            Eigen::JacobiSVD<CMatrix> svd(unf.transpose(), Eigen::ComputeThinU);
            const Eigen::Index take = std::min(kk, svd.matrixU().cols());
            target.leftCols(take) = svd.matrixU().leftCols(take);
        };
        leading(unfold(t, 1), init.a);
        leading(unfold(t, 2), init.b);
        leading(unfold(t, 3), init.c);
    }
    return init;
}

FactorSet als_standard(const Tensor3& t, std::size_t k, const AlsOptions& opts) {
    opts.validate();
    check_rank(t.dims(), k);
    const Problem p = make_problem(t, SweepKind::standard, nullptr, frob_norm(t));
    return best_of_restarts(p, t, k, opts);
}

FactorSet als_standard_from(const Tensor3& t, const FactorInit& init, const AlsOptions& opts) {
    opts.validate();
    check_rank(t.dims(), static_cast<std::size_t>(init.a.cols()));
    check_init(t.dims(), init);
    return run_sweeps(make_problem(t, SweepKind::standard, nullptr, frob_norm(t)), init, opts);
}

FactorSet als_masked(const Tensor3& t, const MaskTensor& mask, std::size_t k, const AlsOptions& opts,
                     MaskedSolver solver) {
    opts.validate();
    check_rank(t.dims(), k);
    const Problem p = masked_problem(t, mask, solver);
    // initialize from the demodulated data so both solvers see the same starting point
    const Tensor3 init_source = opts.init == AlsInit::svd ? hadamard(t, conj(mask.tensor)) : t;
    return best_of_restarts(p, init_source, k, opts);
}

FactorSet als_masked_from(const Tensor3& t, const MaskTensor& mask, const FactorInit& init, const AlsOptions& opts,
                          MaskedSolver solver) {
    opts.validate();
    check_rank(t.dims(), static_cast<std::size_t>(init.a.cols()));
    check_init(t.dims(), init);
    return run_sweeps(masked_problem(t, mask, solver), init, opts);
}

FactorSet normalize_factors(FactorSet f) {
    f.zero_columns = rescale(f.a, f.b, f.c);
    return f;
}

bool is_unit_modulus(const Tensor3& t, double tol) {
    return std::all_of(t.raw().begin(), t.raw().end(), [tol](const cplx& v) { return std::abs(std::abs(v) - 1.0) <= tol; });
}

}  // namespace stmimo
