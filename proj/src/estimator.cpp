#include "stmimo/estimator.hpp"

#include "stmimo/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace stmimo {

namespace {

constexpr double kPairingTie = 1e-6;
constexpr std::size_t kBruteForceAssign = 8;

// Row assignment maximizing the product of |v(row, col)| (one row per column).
std::vector<std::size_t> assign_rows(const CMatrix& v) {
    const auto k = static_cast<std::size_t>(v.cols());
    std::vector<std::size_t> rows(k);
    std::iota(rows.begin(), rows.end(), 0);
    if (k <= kBruteForceAssign) {
        std::vector<std::size_t> perm = rows;
        std::vector<std::size_t> best = rows;
        double best_score = -std::numeric_limits<double>::infinity();
        do {
            double score = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                score += std::log(std::abs(v(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(i))) + 1e-300);
            }
            if (score > best_score) {
                best_score = score;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    // greedy, largest magnitude first
    Eigen::MatrixXd mag = v.cwiseAbs();
    for (std::size_t step = 0; step < k; ++step) {
        Eigen::Index r = 0, c = 0;
        mag.maxCoeff(&r, &c);
        rows[static_cast<std::size_t>(c)] = static_cast<std::size_t>(r);
        mag.row(r).setConstant(-1.0);
        mag.col(c).setConstant(-1.0);
    }
    return rows;
}

CMatrix stack_shift(const CMatrix& f) {
    const Eigen::Index p = f.rows() - 1;
    CMatrix s(2 * p, f.cols());
    s.topRows(p) = f.topRows(p);
    s.bottomRows(p) = f.bottomRows(p);
    return s;
}

// angle per factor column
std::vector<double> angles_by_column(const StackedAngles& sa, std::size_t k) {
    std::vector<double> out(k, 0.0);
    for (std::size_t i = 0; i < sa.angles.size(); ++i) out[sa.column[i]] = sa.angles[i];
    return out;
}

void sort_pairs(std::vector<AnglePair>& pairs) {
    std::sort(pairs.begin(), pairs.end(), [](const AnglePair& x, const AnglePair& y) {
        return x.dod != y.dod ? x.dod < y.dod : x.doa < y.doa;
    });
}

bool flag_not_converged(const FactorSet& f) { return !f.converged && f.fit > 0.5; }

}  // namespace

AugmentedTensor build_transmit_augmented(const Tensor3& y, const MaskTensor& mask) {
    const std::size_t m = y.dims()[0];
    if (m < 2) throw std::invalid_argument("transmit augmentation needs M >= 2");
    if (mask.tensor.dims() != y.dims()) throw std::invalid_argument("transmit augmentation: mask dims differ");

    AugmentedTensor out;
    out.data = concat(slice(y, 1, 0, m - 1), slice(y, 1, 1, m), 1);
    out.mask.tensor = concat(slice(mask.tensor, 1, 0, m - 1), slice(mask.tensor, 1, 1, m), 1);
    const CMatrix& w = mask.generator;
    if (w.rows() == static_cast<Eigen::Index>(m)) {
        out.mask.generator.resize(2 * (w.rows() - 1), w.cols());
        out.mask.generator << w.topRows(w.rows() - 1), w.bottomRows(w.rows() - 1);
    }
    return out;
}

AugmentedTensor build_receive_augmented(const Tensor3& y, const MaskTensor& mask) {
    const std::size_t n = y.dims()[1];
    if (n < 2) throw std::invalid_argument("receive augmentation needs N >= 2");
    if (mask.tensor.dims() != y.dims()) throw std::invalid_argument("receive augmentation: mask dims differ");

    AugmentedTensor out;
    out.data = concat(slice(y, 2, 0, n - 1), slice(y, 2, 1, n), 2);
    out.mask.tensor = concat(slice(mask.tensor, 2, 0, n - 1), slice(mask.tensor, 2, 1, n), 2);
    out.mask.generator = mask.generator;
    return out;
}

double angle_from_eigenvalue(cplx lambda, bool& clamped) {
    double s = -std::arg(lambda) / kPi;
    if (s > 1.0 || s < -1.0) {
        clamped = true;
        s = std::clamp(s, -1.0, 1.0);
    }
    return std::asin(s);
}

StackedAngles shift_invariance_angles(const CMatrix& stacked) {
    const Eigen::Index k = stacked.cols();
    if (stacked.rows() % 2 != 0) throw std::invalid_argument("stacked factor must have an even row count");
    const Eigen::Index p = stacked.rows() / 2;
    if (p < k) {
        throw std::invalid_argument("stacked factor: subarray size " + std::to_string(p) +
                                    " is smaller than the number of targets " + std::to_string(k));
    }
    const CMatrix psi = pinv(stacked.topRows(p)) * stacked.bottomRows(p);
    const EigResult e = eig(psi);

    StackedAngles out;
    out.eigenvalues = e.eigenvalues;
    out.column = assign_rows(e.eigenvectors);
    out.angles.resize(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
        out.angles[static_cast<std::size_t>(i)] = angle_from_eigenvalue(e.eigenvalues(i), out.clamped);
    }
    return out;
}

std::vector<double> angles_from_stacked_factor(const CMatrix& stacked) {
    std::vector<double> a = shift_invariance_angles(stacked).angles;
    std::sort(a.begin(), a.end());
    return a;
}

PairingResult pair_angles(const CMatrix& c_tx, const CMatrix& c_rx) {
    if (c_tx.cols() != c_rx.cols() || c_tx.rows() != c_rx.rows()) {
        throw std::invalid_argument("pair_angles: C factors must have identical shapes");
    }
    const Eigen::Index k = c_tx.cols();
    Eigen::MatrixXd corr(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) {
            const double denom = c_tx.col(i).norm() * c_rx.col(j).norm();
            corr(i, j) = denom > 0.0 ? std::abs(c_tx.col(i).dot(c_rx.col(j))) / denom : 0.0;
        }

    PairingResult out;
    out.rx_for_tx.assign(static_cast<std::size_t>(k), 0);
    std::vector<bool> row_used(static_cast<std::size_t>(k), false), col_used(static_cast<std::size_t>(k), false);
    for (Eigen::Index step = 0; step < k; ++step) {
        double best = -1.0;
        Eigen::Index bi = 0, bj = 0;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (row_used[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (col_used[static_cast<std::size_t>(j)]) continue;
                if (corr(i, j) > best) {
                    best = corr(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        // a competing candidate in the same row or column that is just as good
        for (Eigen::Index t = 0; t < k; ++t) {
            if (t != bj && !col_used[static_cast<std::size_t>(t)] && best - corr(bi, t) < kPairingTie) out.ambiguous = true;
            if (t != bi && !row_used[static_cast<std::size_t>(t)] && best - corr(t, bj) < kPairingTie) out.ambiguous = true;
        }
        row_used[static_cast<std::size_t>(bi)] = true;
        col_used[static_cast<std::size_t>(bj)] = true;
        out.rx_for_tx[static_cast<std::size_t>(bi)] = static_cast<std::size_t>(bj);
        out.weakest_correlation = std::min(out.weakest_correlation, best);
    }
    return out;
}

UniquenessReport uniqueness_check(std::size_t m, std::size_t n, std::size_t q, std::size_t k) {
    UniquenessReport r;
    const Dims3 dims{m, n, q};
    r.holds = satisfies_rank_bound(dims, k);
    for (std::size_t kk = 1; kk <= m + n + q; ++kk) {
        if (satisfies_rank_bound(dims, kk)) r.max_k = kk;
    }
    r.generic_max_k = std::min({m * n, m * q, n * q});
    r.generic_holds = k <= r.generic_max_k;
    return r;
}

EstimationResult estimate_proposed(const Tensor3& y, const MaskTensor& mask, std::size_t k, const AlsOptions& opts) {
    const auto [m, n, q] = y.dims();
    EstimationResult out;
    out.method = "proposed";
    out.identifiable = k == 1 || uniqueness_check(m, n, q, k).holds;

    AlsOptions tx_opts = opts;
    tx_opts.seed = derive_seed(opts.seed, {1});
    AlsOptions rx_opts = opts;
    rx_opts.seed = derive_seed(opts.seed, {2});

    const AugmentedTensor tx = build_transmit_augmented(y, mask);
    const FactorSet ftx = als_masked(tx.data, tx.mask, k, tx_opts);
    const AugmentedTensor rx = build_receive_augmented(y, mask);
    const FactorSet frx = als_masked(rx.data, rx.mask, k, rx_opts);

    const StackedAngles sa_tx = shift_invariance_angles(ftx.a);
    const StackedAngles sa_rx = shift_invariance_angles(frx.b);
    const std::vector<double> dod_col = angles_by_column(sa_tx, k);
    const std::vector<double> doa_col = angles_by_column(sa_rx, k);
    const PairingResult pr = pair_angles(ftx.c, frx.c);

    for (std::size_t j = 0; j < k; ++j) out.pairs.push_back({dod_col[j], doa_col[pr.rx_for_tx[j]]});
    sort_pairs(out.pairs);

    out.gamma_tx = sa_tx.eigenvalues;
    out.gamma_rx = sa_rx.eigenvalues;
    out.fits = {ftx.fit, frx.fit};
    out.iters = {ftx.iters_used, frx.iters_used};
    out.not_converged = flag_not_converged(ftx) || flag_not_converged(frx);
    out.clamped = sa_tx.clamped || sa_rx.clamped;
    out.pairing_ambiguous = pr.ambiguous;
    out.pairing_correlation = pr.weakest_correlation;
    return out;
}

EstimationResult baseline_parafac_small(const Tensor3& y_small, std::size_t k, const AlsOptions& opts) {
    const auto [m, n, q] = y_small.dims();
    if (m < 2 || n < 2) throw std::invalid_argument("PARAFAC baseline needs M >= 2 and N >= 2");

    EstimationResult out;
    out.method = "parafac_small";
    out.identifiable = k == 1 || uniqueness_check(m, n, q, k).holds;

    const FactorSet f = als_standard(y_small, k, opts);
    const StackedAngles sa_tx = shift_invariance_angles(stack_shift(f.a));
    const StackedAngles sa_rx = shift_invariance_angles(stack_shift(f.b));
    const std::vector<double> dod_col = angles_by_column(sa_tx, k);
    const std::vector<double> doa_col = angles_by_column(sa_rx, k);
    for (std::size_t j = 0; j < k; ++j) out.pairs.push_back({dod_col[j], doa_col[j]});
    sort_pairs(out.pairs);

    out.gamma_tx = sa_tx.eigenvalues;
    out.gamma_rx = sa_rx.eigenvalues;
    out.fits = {f.fit};
    out.iters = {f.iters_used};
    out.not_converged = flag_not_converged(f);
    out.clamped = sa_tx.clamped || sa_rx.clamped;
    return out;
}

EstimationResult baseline_esprit(const Tensor3& y_small, std::size_t k) {
    const auto [m, n, q] = y_small.dims();
    if (m < 2 || n < 2) throw std::invalid_argument("ESPRIT baseline needs M >= 2 and N >= 2");
    if (k < 1 || k >= m * n) throw std::invalid_argument("ESPRIT baseline needs 1 <= K < MN");
    if (q < k) throw std::invalid_argument("ESPRIT baseline needs at least K snapshots");
    if ((m - 1) * n < k || (n - 1) * m < k) throw std::invalid_argument("ESPRIT baseline: subarrays too small for K");

    const CMatrix y3 = unfold(y_small, 3);  // row m*N + n
    Eigen::JacobiSVD<CMatrix> svd(y3, Eigen::ComputeThinU);
    const RVector& s = svd.singularValues();
    const auto kk = static_cast<Eigen::Index>(k);
    if (s(kk - 1) <= static_cast<double>(std::max(y3.rows(), y3.cols())) * std::numeric_limits<double>::epsilon() * s(0)) {
        throw std::runtime_error("ESPRIT baseline: signal subspace collapsed (rank < K)");
    }
    const CMatrix es = svd.matrixU().leftCols(kk);

    const auto mm = static_cast<Eigen::Index>(m);
    const auto nn = static_cast<Eigen::Index>(n);
    // transmit shift: rows with m <= M-2 vs m >= 1 are contiguous blocks
    const CMatrix t1 = es.topRows((mm - 1) * nn);
    const CMatrix t2 = es.bottomRows((mm - 1) * nn);
    CMatrix r1((nn - 1) * mm, kk), r2((nn - 1) * mm, kk);
    for (Eigen::Index a = 0; a < mm; ++a) {
        r1.middleRows(a * (nn - 1), nn - 1) = es.middleRows(a * nn, nn - 1);
        r2.middleRows(a * (nn - 1), nn - 1) = es.middleRows(a * nn + 1, nn - 1);
    }
    const CMatrix psi_tx = pinv(t1) * t2;
    const CMatrix psi_rx = pinv(r1) * r2;

    const EigResult e = eig(psi_tx);
    const CMatrix v_inv = e.eigenvectors.fullPivLu().solve(CMatrix::Identity(kk, kk));
    const CVector gamma_rx = (v_inv * psi_rx * e.eigenvectors).diagonal();

    EstimationResult out;
    out.method = "esprit";
    out.gamma_tx = e.eigenvalues;
    out.gamma_rx = gamma_rx;
    for (Eigen::Index i = 0; i < kk; ++i) {
        out.pairs.push_back(
            {angle_from_eigenvalue(e.eigenvalues(i), out.clamped), angle_from_eigenvalue(gamma_rx(i), out.clamped)});
    }
    sort_pairs(out.pairs);
    return out;
}

}  // namespace stmimo
