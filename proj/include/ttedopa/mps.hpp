#pragma once

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "linalg.hpp"

namespace ttedopa {

class MpsError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Chain of rank-3 site tensors with axes (left bond, physical, right bond).
 *
 * The outer bonds have extent 1. `ortho_center`, when set, promises that
 * every site to its left is left-isometric and every site to its right is
 * right-isometric.
 */
class MatrixProductState {
  public:
    MatrixProductState() = default;

    explicit MatrixProductState(std::vector<DenseTensor> sites, std::optional<std::size_t> center = std::nullopt)
        : sites_(std::move(sites)), center_(center) {
        validate();
    }

    std::size_t length() const { return sites_.size(); }
    const DenseTensor& site(std::size_t n) const { return sites_.at(n); }
    const std::vector<DenseTensor>& sites() const { return sites_; }
    std::optional<std::size_t> ortho_center() const { return center_; }

    std::size_t local_dim(std::size_t n) const { return sites_.at(n).dim(1); }

    std::vector<std::size_t> local_dims() const {
        std::vector<std::size_t> d;
        for (const auto& s : sites_) d.push_back(s.dim(1));
        return d;
    }

    /// Interior bond extents; entry n joins sites n and n+1.
    std::vector<std::size_t> bond_dims() const {
        std::vector<std::size_t> b;
        for (std::size_t n = 0; n + 1 < sites_.size(); ++n) b.push_back(sites_[n].dim(2));
        return b;
    }

    std::size_t max_bond() const {
        std::size_t m = 1;
        for (auto b : bond_dims()) m = std::max(m, b);
        return m;
    }

    // Mutation is reserved for the sweep engines, which own their working copy.
    DenseTensor& mutable_site(std::size_t n) {
        center_.reset();
        return sites_.at(n);
    }
    void set_ortho_center(std::optional<std::size_t> c) { center_ = c; }

    void validate() const {
        if (sites_.empty()) throw MpsError("MatrixProductState: no sites");
        for (std::size_t n = 0; n < sites_.size(); ++n) {
            if (sites_[n].rank() != 3)
                throw MpsError("MatrixProductState: site " + std::to_string(n) + " is not rank 3");
            if (n + 1 < sites_.size() && sites_[n].dim(2) != sites_[n + 1].dim(0))
                throw MpsError("MatrixProductState: bond " + std::to_string(n) + " extents " +
                               std::to_string(sites_[n].dim(2)) + " and " + std::to_string(sites_[n + 1].dim(0)) +
                               " differ");
        }
        if (sites_.front().dim(0) != 1 || sites_.back().dim(2) != 1)
            throw MpsError("MatrixProductState: boundary bonds must have extent 1");
        if (center_ && *center_ >= sites_.size()) throw MpsError("MatrixProductState: ortho center out of range");
    }

  private:
    std::vector<DenseTensor> sites_;
    std::optional<std::size_t> center_;
};

/// A site's initial state: a Fock/basis label or an explicit normalized vector.
class LocalState {
  public:
    static LocalState basis(std::size_t label) { return LocalState(label); }
    static LocalState vector(std::vector<cplx> amplitudes) { return LocalState(std::move(amplitudes)); }

    std::vector<cplx> dense(std::size_t d) const {
        if (const auto* label = std::get_if<std::size_t>(&value_)) {
            if (*label >= d)
                throw MpsError("LocalState: basis label " + std::to_string(*label) + " outside local dimension " +
                               std::to_string(d));
            std::vector<cplx> v(d, 0.0);
            v[*label] = 1.0;
            return v;
        }
        const auto& v = std::get<std::vector<cplx>>(value_);
        if (v.size() != d)
            throw MpsError("LocalState: vector of length " + std::to_string(v.size()) + " for local dimension " +
                           std::to_string(d));
        double n2 = 0.0;
        for (auto x : v) n2 += std::norm(x);
        if (std::abs(std::sqrt(n2) - 1.0) > 1e-12) throw MpsError("LocalState: vector is not normalized");
        return v;
    }

  private:
    explicit LocalState(std::size_t label) : value_(label) {}
    explicit LocalState(std::vector<cplx> v) : value_(std::move(v)) {}
    std::variant<std::size_t, std::vector<cplx>> value_;
};

inline MatrixProductState product_state(const std::vector<std::size_t>& local_dims, const std::vector<LocalState>& states) {
    if (local_dims.size() != states.size())
        throw MpsError("product_state: " + std::to_string(local_dims.size()) + " local dimensions but " +
                       std::to_string(states.size()) + " local states");
    std::vector<DenseTensor> sites;
    for (std::size_t n = 0; n < local_dims.size(); ++n)
        sites.emplace_back(Shape{1, local_dims[n], 1}, states[n].dense(local_dims[n]));
    return MatrixProductState(std::move(sites), std::size_t{0});
}

/// Largest rank bond n can carry: min of the Hilbert-space dimensions on either side.
inline std::vector<std::size_t> full_rank_bounds(const std::vector<std::size_t>& local_dims) {
    const std::size_t n = local_dims.size();
    constexpr std::size_t cap = std::size_t{1} << 40;
    std::vector<std::size_t> left(n, 1), right(n, 1);
    std::size_t acc = 1;
    for (std::size_t k = 0; k < n; ++k) left[k] = acc = std::min(cap, acc * local_dims[k]);
    acc = 1;
    for (std::size_t k = n; k-- > 0;) right[k] = acc = std::min(cap, acc * local_dims[k]);
    std::vector<std::size_t> bounds;
    for (std::size_t k = 0; k + 1 < n; ++k) bounds.push_back(std::min(left[k], right[k + 1]));
    return bounds;
}

namespace detail {

inline void left_orthogonalize_site(MatrixProductState& psi, std::size_t n) {
    auto qr = qr_orthogonalize(psi.site(n), {0, 1});
    auto next = contract(qr.R, psi.site(n + 1), {{1, 0}});
    psi.mutable_site(n) = std::move(qr.Q);
    psi.mutable_site(n + 1) = std::move(next);
}

inline void right_orthogonalize_site(MatrixProductState& psi, std::size_t n) {
    auto lq = lq_orthogonalize(psi.site(n), {0});
    auto prev = contract(psi.site(n - 1), lq.L, {{2, 0}});
    psi.mutable_site(n) = std::move(lq.Q);
    psi.mutable_site(n - 1) = std::move(prev);
}

}  // namespace detail

/// Mixed canonical form centered at `center`. Always performs full sweeps, so
/// zero-padded bonds acquire orthonormal completions.
inline MatrixProductState canonicalize(MatrixProductState psi, std::size_t center) {
    if (center >= psi.length())
        throw MpsError("canonicalize: center " + std::to_string(center) + " out of range for " +
                       std::to_string(psi.length()) + " sites");
    for (std::size_t n = 0; n < center; ++n) detail::left_orthogonalize_site(psi, n);
    for (std::size_t n = psi.length() - 1; n > center; --n) detail::right_orthogonalize_site(psi, n);
    psi.set_ortho_center(center);
    return psi;
}

/// Zero-pads every interior bond to min(target_D, full-rank bound).
inline MatrixProductState enlarge_bonds(const MatrixProductState& psi, std::size_t target_D) {
    if (target_D == 0) throw MpsError("enlarge_bonds: target bond dimension must be positive");
    const auto bonds = psi.bond_dims();
    const auto bounds = full_rank_bounds(psi.local_dims());
    std::vector<std::size_t> goal(bonds.size());
    for (std::size_t b = 0; b < bonds.size(); ++b) {
        if (bonds[b] > target_D)
            throw MpsError("enlarge_bonds: bond " + std::to_string(b) + " already has dimension " +
                           std::to_string(bonds[b]) + " > " + std::to_string(target_D) +
                           "; use svd_split to truncate");
        goal[b] = std::max(bonds[b], std::min(target_D, bounds[b]));
    }
    std::vector<DenseTensor> sites;
    for (std::size_t n = 0; n < psi.length(); ++n) {
        const auto& src = psi.site(n);
        const std::size_t dl = n == 0 ? 1 : goal[n - 1];
        const std::size_t dr = n + 1 == psi.length() ? 1 : goal[n];
        DenseTensor t({dl, src.dim(1), dr});
        for (std::size_t a = 0; a < src.dim(0); ++a)
            for (std::size_t i = 0; i < src.dim(1); ++i)
                for (std::size_t b = 0; b < src.dim(2); ++b) t({a, i, b}) = src({a, i, b});
        sites.push_back(std::move(t));
    }
    return MatrixProductState(std::move(sites));
}

/// <a|b>, contracted left to right.
inline cplx overlap(const MatrixProductState& a, const MatrixProductState& b) {
    if (a.local_dims() != b.local_dims()) throw MpsError("overlap: local dimensions differ");
    DenseTensor env({1, 1}, {cplx{1.0}});
    for (std::size_t n = 0; n < a.length(); ++n) {
        auto t = contract(env, b.site(n), {{1, 0}});                   // (a', i, b)
        env = contract(a.site(n).conj(), t, {{0, 0}, {1, 1}});         // (a'', b)
    }
    return env.data()[0];
}

inline double norm(const MatrixProductState& psi) { return std::sqrt(std::max(0.0, overlap(psi, psi).real())); }

inline constexpr std::size_t dense_guard = std::size_t{1} << 20;

/// Full coefficient tensor psi_{i1...iN}. Exponential cost; guarded.
inline DenseTensor to_dense(const MatrixProductState& psi) {
    std::size_t total = 1;
    for (auto d : psi.local_dims()) {
        total *= d;
        if (total > dense_guard)
            throw MpsError("to_dense: total dimension exceeds the 2^20 guard");
    }
    DenseTensor acc = psi.site(0);  // (1, i1, D)
    for (std::size_t n = 1; n < psi.length(); ++n) acc = contract(acc, psi.site(n), {{acc.rank() - 1, 0}});
    Shape dims = psi.local_dims();
    return acc.reshaped(dims);
}

}  // namespace ttedopa
