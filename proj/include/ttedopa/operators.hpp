#pragma once

#include <cmath>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "tensor.hpp"

// Local operator catalog. Spin basis is (up, down) with sz = diag(1, -1);
// bosonic Fock spaces are truncated at d with occupations (0, 1, ..., d-1);
// a fermionic mode uses (empty, occupied).
namespace ttedopa::ops {

inline Operator identity(std::size_t d) { return Operator::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)); }

inline Operator zero(std::size_t d) { return Operator::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)); }

inline Operator sx() {
    Operator m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline Operator sy() {
    Operator m(2, 2);
    m << 0, cplx(0, -1), cplx(0, 1), 0;
    return m;
}

inline Operator sz() {
    Operator m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// |i><j| in a d-dimensional space.
inline Operator projector(std::size_t d, std::size_t i, std::size_t j) {
    Operator m = zero(d);
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
    return m;
}

/// Truncated bosonic annihilation operator, b|n> = sqrt(n)|n-1>.
inline Operator annihilation(std::size_t d) {
    Operator m = zero(d);
    for (std::size_t n = 1; n < d; ++n)
        m(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n)) = std::sqrt(static_cast<double>(n));
    return m;
}

inline Operator creation(std::size_t d) { return annihilation(d).adjoint(); }

inline Operator number(std::size_t d) {
    Operator m = zero(d);
    for (std::size_t n = 0; n < d; ++n) m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) = static_cast<double>(n);
    return m;
}

/// b + b^dagger, truncated.
inline Operator displacement(std::size_t d) { return annihilation(d) + creation(d); }

/// Single fermionic mode: annihilator and parity (-1)^n.
inline Operator fermion_annihilation() { return projector(2, 0, 1); }
inline Operator fermion_parity() { return sz(); }

inline Operator kron(const Operator& a, const Operator& b) { return Eigen::kroneckerProduct(a, b).eval(); }

/// Spinful site of dimension 4, basis |n_up n_dn> with index 2 n_up + n_dn.
/// The down annihilator carries the intra-site parity string of the up mode.
struct SpinfulSite {
    Operator c_up = kron(fermion_annihilation(), identity(2));
    Operator c_dn = kron(fermion_parity(), fermion_annihilation());
    Operator parity = kron(fermion_parity(), fermion_parity());
    Operator n_up = c_up.adjoint() * c_up;
    Operator n_dn = c_dn.adjoint() * c_dn;
};

/// True when |m - m^dagger| is below tol entrywise.
inline bool is_hermitian(const Operator& m, double tol = 1e-12) {
    return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

/// Embeds local operators at their sites in a dense operator on the product space.
inline Operator embed(const std::vector<std::size_t>& local_dims, const std::vector<std::pair<std::size_t, Operator>>& factors) {
    Operator acc = Operator::Identity(1, 1);
    for (std::size_t n = 0; n < local_dims.size(); ++n) {
        Operator local = identity(local_dims[n]);
        for (const auto& [site, op] : factors)
            if (site == n) local = local * op;
        acc = kron(acc, local);
    }
    return acc;
}

}  // namespace ttedopa::ops
