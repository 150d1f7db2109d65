#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "tensor.hpp"

namespace ttedopa {

/// Applies a fixed Hermitian operator to tensors of one declared shape.
using LinearMap = std::function<DenseTensor(const DenseTensor&)>;

inline constexpr std::size_t unlimited_rank = std::numeric_limits<std::size_t>::max();

namespace detail {

struct Matricized {
    DenseTensor permuted;
    Shape left_dims;
    Shape right_dims;
};

inline Matricized matricize(const DenseTensor& t, std::span<const std::size_t> left_axes) {
    if (left_axes.empty() || left_axes.size() >= t.rank())
        throw TensorError("left_axes must be a nonempty proper subset of the " + std::to_string(t.rank()) + " axes");
    std::vector<bool> is_left(t.rank(), false);
    for (auto ax : left_axes) {
        if (ax >= t.rank() || is_left[ax]) throw TensorError("left_axes contains an invalid or repeated axis");
        is_left[ax] = true;
    }
    std::vector<std::size_t> perm(left_axes.begin(), left_axes.end());
    Matricized m;
    for (auto ax : left_axes) m.left_dims.push_back(t.dim(ax));
    for (std::size_t k = 0; k < t.rank(); ++k)
        if (!is_left[k]) {
            perm.push_back(k);
            m.right_dims.push_back(t.dim(k));
        }
    m.permuted = t.permuted(perm);
    return m;
}

inline Shape with_back(Shape s, std::size_t k) {
    s.push_back(k);
    return s;
}

inline Shape with_front(const Shape& s, std::size_t k) {
    Shape out{k};
    out.insert(out.end(), s.begin(), s.end());
    return out;
}

}  // namespace detail

struct SvdResult {
    DenseTensor U;  ///< left axes, then the new bond
    std::vector<double> S;
    DenseTensor Vh;  ///< new bond, then right axes
    double truncation_error = 0.0;
};

/// Singular values closer than this (relative to the largest) are one cluster.
inline constexpr double degeneracy_gap = 1e-12;

/**
 * Number of singular values to keep.
 *
 * Keeps the fewest values whose discarded squared weight, relative to the
 * total, is at most `tol`; a degenerate cluster is never split, growing the
 * kept set unless `max_rank` forbids it, in which case the cluster is dropped.
 */
inline std::size_t truncation_rank(std::span<const double> s, std::size_t max_rank, double tol) {
    const std::size_t n = s.size();
    if (n == 0) return 0;
    double total = 0.0;
    for (double x : s) total += x * x;
    if (total == 0.0) return 1;

    std::size_t keep = n;
    double discarded = 0.0;
    while (keep > 1 && discarded + s[keep - 1] * s[keep - 1] <= tol * total) {
        discarded += s[keep - 1] * s[keep - 1];
        --keep;
    }
    const double gap = degeneracy_gap * s[0];
    auto splits_cluster = [&](std::size_t k) { return k < n && k > 0 && s[k - 1] - s[k] <= gap && s[k] > 0.0; };
    while (splits_cluster(keep)) ++keep;

    if (keep > max_rank) {
        std::size_t k = max_rank;
        while (k > 0 && splits_cluster(k)) --k;
        keep = k == 0 ? max_rank : k;
    }
    return keep;
}

inline SvdResult svd_split(const DenseTensor& t, std::span<const std::size_t> left_axes,
                           std::size_t max_rank = unlimited_rank, double tol = 0.0) {
    if (max_rank == 0) throw TensorError("svd_split: max_rank must be positive");
    if (tol < 0.0) throw TensorError("svd_split: tol must be nonnegative");
    auto m = detail::matricize(t, left_axes);
    const auto mat = m.permuted.as_matrix(m.left_dims.size());

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(Eigen::MatrixXcd(mat), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    std::vector<double> s(sv.data(), sv.data() + sv.size());
    const std::size_t keep = truncation_rank(s, max_rank, tol);

    double total = 0.0, discarded = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        total += s[i] * s[i];
        if (i >= keep) discarded += s[i] * s[i];
    }

    SvdResult r;
    r.truncation_error = total > 0.0 ? discarded / total : 0.0;
    r.S.assign(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(keep));
    const auto k = static_cast<Eigen::Index>(keep);
    RowMatrix u = svd.matrixU().leftCols(k);
    RowMatrix vh = svd.matrixV().leftCols(k).adjoint();
    r.U = DenseTensor::from_rows(u, detail::with_back(m.left_dims, keep));
    r.Vh = DenseTensor::from_rows(vh, detail::with_front(m.right_dims, keep));
    return r;
}

inline SvdResult svd_split(const DenseTensor& t, std::initializer_list<std::size_t> left_axes,
                           std::size_t max_rank = unlimited_rank, double tol = 0.0) {
    return svd_split(t, std::span<const std::size_t>(left_axes.begin(), left_axes.size()), max_rank, tol);
}

struct QrResult {
    DenseTensor Q;  ///< left axes, then the new bond; isometric over the left group
    DenseTensor R;  ///< new bond, then right axes
};

namespace detail {

// Thin Householder QR with the gauge fixed so that diag(R) is real and >= 0.
inline std::pair<RowMatrix, RowMatrix> thin_qr(const Eigen::MatrixXcd& a) {
    const Eigen::Index k = std::min(a.rows(), a.cols());
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
    RowMatrix q = qr.householderQ() * Eigen::MatrixXcd::Identity(a.rows(), k);
    RowMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i) {
        const double mag = std::abs(r(i, i));
        if (mag == 0.0) continue;
        const cplx phase = r(i, i) / mag;
        q.col(i) *= phase;
        r.row(i) *= std::conj(phase);
    }
    return {std::move(q), std::move(r)};
}

}  // namespace detail

inline QrResult qr_orthogonalize(const DenseTensor& t, std::span<const std::size_t> left_axes) {
    auto m = detail::matricize(t, left_axes);
    auto [q, r] = detail::thin_qr(Eigen::MatrixXcd(m.permuted.as_matrix(m.left_dims.size())));
    const auto k = static_cast<std::size_t>(q.cols());
    return {DenseTensor::from_rows(q, detail::with_back(m.left_dims, k)),
            DenseTensor::from_rows(r, detail::with_front(m.right_dims, k))};
}

inline QrResult qr_orthogonalize(const DenseTensor& t, std::initializer_list<std::size_t> left_axes) {
    return qr_orthogonalize(t, std::span<const std::size_t>(left_axes.begin(), left_axes.size()));
}

struct LqResult {
    DenseTensor L;  ///< left axes, then the new bond
    DenseTensor Q;  ///< new bond, then right axes; rows orthonormal
};

/// Mirror of qr_orthogonalize: the isometry sits on the right axis group.
inline LqResult lq_orthogonalize(const DenseTensor& t, std::span<const std::size_t> left_axes) {
    auto m = detail::matricize(t, left_axes);
    Eigen::MatrixXcd adj = m.permuted.as_matrix(m.left_dims.size()).adjoint();
    auto [q, r] = detail::thin_qr(adj);
    const auto k = static_cast<std::size_t>(q.cols());
    RowMatrix l = r.adjoint();
    RowMatrix qh = q.adjoint();
    return {DenseTensor::from_rows(l, detail::with_back(m.left_dims, k)),
            DenseTensor::from_rows(qh, detail::with_front(m.right_dims, k))};
}

inline LqResult lq_orthogonalize(const DenseTensor& t, std::initializer_list<std::size_t> left_axes) {
    return lq_orthogonalize(t, std::span<const std::size_t>(left_axes.begin(), left_axes.size()));
}

class KrylovError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct KrylovOptions {
    std::size_t dim = 30;
    double tol = 1e-12;
};

/**
 * Lanczos approximation of exp(prefactor * H) v for Hermitian H.
 *
 * Full reorthogonalization; stops once the a-posteriori residual estimate
 * beta_j |e_j^T exp(prefactor T) e_1| drops below tol (relative to |v|), or
 * exactly on breakdown. Exhausting the subspace without convergence throws:
 * there is no restart.
 */
inline DenseTensor krylov_expm_apply(const LinearMap& h, const DenseTensor& v, cplx prefactor,
                                     KrylovOptions opts = {}) {
    if (opts.dim == 0) throw KrylovError("krylov_expm_apply: krylov_dim must be positive");
    const double beta0 = v.norm();
    if (beta0 == 0.0) return v;

    std::vector<DenseTensor> basis;
    basis.reserve(opts.dim + 1);
    basis.push_back((1.0 / beta0) * v);
    std::vector<double> alpha, beta;

    auto propagate = [&](std::size_t m) {
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            tri(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = alpha[i];
            if (i + 1 < m) {
                tri(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = beta[i];
                tri(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(i)) = beta[i];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        const auto& vecs = es.eigenvectors();
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(m));
        for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(m); ++k)
            c += std::exp(prefactor * es.eigenvalues()(k)) * vecs(0, k) * vecs.col(k).cast<cplx>();
        return c;
    };

    auto assemble = [&](const Eigen::VectorXcd& c) {
        DenseTensor out(v.dims());
        for (Eigen::Index i = 0; i < c.size(); ++i) out.axpy(beta0 * c(i), basis[static_cast<std::size_t>(i)]);
        return out;
    };

    double scale = 0.0;
    for (std::size_t j = 0; j < opts.dim; ++j) {
        DenseTensor w = h(basis[j]);
        const double a = inner(basis[j], w).real();
        alpha.push_back(a);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) w.axpy(-inner(q, w), q);
        const double b = w.norm();
        scale = std::max({scale, std::abs(a), j > 0 ? beta[j - 1] : 0.0});

        const bool breakdown = b <= 1e-14 * std::max(scale, 1.0);
        if (breakdown && j == 0) {
            DenseTensor out = v;
            out *= std::exp(prefactor * a);
            return out;
        }
        Eigen::VectorXcd c = propagate(j + 1);
        if (breakdown || b * std::abs(c(static_cast<Eigen::Index>(j))) < opts.tol) return assemble(c);
        beta.push_back(b);
        basis.push_back((1.0 / b) * w);
    }
    throw KrylovError("krylov_expm_apply: no convergence within " + std::to_string(opts.dim) +
                      " Lanczos vectors; reduce the time step or raise krylov_dim");
}

}  // namespace ttedopa
