#pragma once

#include <cmath>
#include <vector>

#include "chain_coefficients.hpp"
#include "mpo.hpp"

// Built-in model Hamiltonians. Chain models place the system on site 1
// followed by the chain modes in ascending order.
namespace ttedopa {

struct XYZParams {
    double Jx = 0, Jy = 0, Jz = 0, hx = 0, hz = 0;
};

struct HubbardParams {
    double t = 1.0;
    double U = 0.0;
};

struct PureDephasingParams {
    double delta_e = 0.0;
};

struct SpinBosonParams {
    double omega0 = 0.0;
    double delta = 0.0;
};

struct TightBindingParams {
    double eps_d = 0.0;
};

/**
 * Enol (|e>, index 0) / keto (|k>, index 1) system coupled to a reaction
 * coordinate with state-dependent displacements g_e, g_k.
 */
struct ProtonTransferParams {
    double omega0e = 0.0;
    double omega0k = 0.0;
    double delta = 0.0;
    double omega_rc = 1.0;
    double g_e = 0.0;
    double g_k = 0.0;
    double lambda_reorg = 0.0;
};

/**
 * Linear coupling that centers a harmonic well of frequency omega_rc at
 * position x0 (unit mass): omega_rc^2 (x - x0)^2 / 2 contributes
 * -omega_rc^2 x0 x with x = (d + d^dagger) / sqrt(2 omega_rc).
 */
inline double well_displacement_coupling(double omega_rc, double x0) {
    return -omega_rc * std::sqrt(omega_rc / 2.0) * x0;
}

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw MpoError(msg);
}

// Appends chain modes after a site that opened one channel carrying
// `(a + a^dagger)`-type coupling with strength already folded into its C.
inline void append_boson_chain(std::vector<BlockSpec>& blocks, const ChainCoefficients& chain, std::size_t d) {
    const Operator b = ops::annihilation(d), bd = ops::creation(d), n = ops::number(d);
    const std::size_t modes = chain.size();
    for (std::size_t k = 0; k < modes; ++k) {
        BlockSpec s;
        s.d = d;
        s.D = chain.eps[k] * n;
        if (k == 0)
            s.B = {b + bd};
        else
            s.B = {b, bd};
        if (k + 1 < modes) s.C = {chain.t[k] * bd, chain.t[k] * b};
        blocks.push_back(std::move(s));
    }
}

inline void check_chain(const ChainCoefficients& chain, std::size_t N, std::size_t d, const char* who) {
    require(N >= 1, std::string(who) + ": need at least one chain mode");
    require(d >= 2, std::string(who) + ": local boson dimension must be >= 2");
    require(chain.size() == N, std::string(who) + ": chain has " + std::to_string(chain.size()) +
                                   " modes but N = " + std::to_string(N));
    chain.validate();
}

}  // namespace detail

/// Nearest-neighbour XYZ chain in fields (hx, 0, hz); MPO bond dimension 5.
inline MatrixProductOperator xyz_mpo(std::size_t N, const XYZParams& p) {
    detail::require(N >= 2, "xyz_mpo: need N >= 2");
    const Operator x = ops::sx(), y = ops::sy(), z = ops::sz();
    std::vector<BlockSpec> blocks;
    for (std::size_t k = 0; k < N; ++k) {
        BlockSpec s;
        s.d = 2;
        s.D = p.hx * x + p.hz * z;
        if (k > 0) s.B = {x, y, z};
        if (k + 1 < N) s.C = {p.Jx * x, p.Jy * y, p.Jz * z};
        if (k > 0 && k + 1 < N) s.A.assign(3, std::vector<Operator>(3, ops::zero(2)));
        blocks.push_back(std::move(s));
    }
    return mpo_from_blocks(blocks);
}

/**
 * Hubbard chain -t sum c^dag_{i s} c_{i+1 s} + h.c. + U sum n_up n_dn on
 * 4-dimensional sites in the Jordan-Wigner image (modes ordered site-major,
 * up before down). Bond dimension 6; the outgoing operators carry the site
 * parity so that no strings are needed across sites.
 */
inline MatrixProductOperator hubbard_mpo(std::size_t N, const HubbardParams& p) {
    detail::require(N >= 2, "hubbard_mpo: need N >= 2");
    const ops::SpinfulSite s;
    const Operator cu = s.c_up, cd = s.c_dn, F = s.parity;
    const Operator cud = cu.adjoint(), cdd = cd.adjoint();
    std::vector<BlockSpec> blocks;
    for (std::size_t k = 0; k < N; ++k) {
        BlockSpec b;
        b.d = 4;
        b.D = p.U * (s.n_up * s.n_dn);
        // c^dag_i c_{i+1} = (c^dag F)_i c_{i+1};  c^dag_{i+1} c_i = (F c)_i c^dag_{i+1} = -(c F)_i c^dag_{i+1}
        if (k + 1 < N) b.C = {-p.t * (cud * F), -p.t * (cdd * F), p.t * (cu * F), p.t * (cd * F)};
        if (k > 0) b.B = {cu, cd, cud, cdd};
        blocks.push_back(std::move(b));
    }
    return mpo_from_blocks(blocks);
}

/// Two-level system (sz/2) dE coupled through c0 (sz/2)(b0 + b0^dag) to a bosonic chain.
inline MatrixProductOperator puredephasing_mpo(double delta_e, std::size_t d, std::size_t N, const ChainCoefficients& chain) {
    detail::check_chain(chain, N, d, "puredephasing_mpo");
    std::vector<BlockSpec> blocks;
    BlockSpec sys;
    sys.d = 2;
    sys.D = 0.5 * delta_e * ops::sz();
    sys.C = {0.5 * chain.c0 * ops::sz()};
    blocks.push_back(std::move(sys));
    detail::append_boson_chain(blocks, chain, d);
    return mpo_from_blocks(blocks);
}

/// (omega0/2) sz + delta sx on the system, coupled through c0 sx (b0 + b0^dag).
inline MatrixProductOperator spinboson_mpo(double omega0, double delta, std::size_t d, std::size_t N,
                                           const ChainCoefficients& chain) {
    detail::check_chain(chain, N, d, "spinboson_mpo");
    std::vector<BlockSpec> blocks;
    BlockSpec sys;
    sys.d = 2;
    sys.D = 0.5 * omega0 * ops::sz() + delta * ops::sx();
    sys.C = {chain.c0 * ops::sx()};
    blocks.push_back(std::move(sys));
    detail::append_boson_chain(blocks, chain, d);
    return mpo_from_blocks(blocks);
}

/// Site layout of the two-lead resonant-level model.
struct TightBindingLayout {
    std::size_t N;
    std::size_t impurity() const { return N; }
    /// Site of filled-lead mode n (reversed, mode 0 next to the impurity).
    std::size_t filled(std::size_t n) const { return N - 1 - n; }
    std::size_t empty(std::size_t n) const { return N + 1 + n; }
    std::size_t sites() const { return 2 * N + 1; }
};

/**
 * Single-particle matrix h of the two-lead resonant-level model,
 * H = sum_ij h_ij c^dag_i c_j over sites filled-lead (reversed), impurity,
 * empty-lead.
 */
inline Eigen::MatrixXd tightbinding_single_particle(std::size_t N, double eps_d, const ChainCoefficients& chain_empty,
                                                    const ChainCoefficients& chain_filled) {
    const TightBindingLayout L{N};
    const auto M = static_cast<Eigen::Index>(L.sites());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(M, M);
    auto idx = [](std::size_t s) { return static_cast<Eigen::Index>(s); };
    auto hop = [&](std::size_t a, std::size_t b, double v) {
        h(idx(a), idx(b)) = v;
        h(idx(b), idx(a)) = v;
    };
    h(idx(L.impurity()), idx(L.impurity())) = eps_d;
    for (std::size_t n = 0; n < N; ++n) {
        h(idx(L.filled(n)), idx(L.filled(n))) = chain_filled.eps[n];
        h(idx(L.empty(n)), idx(L.empty(n))) = chain_empty.eps[n];
        if (n + 1 < N) {
            hop(L.filled(n), L.filled(n + 1), chain_filled.t[n]);
            hop(L.empty(n), L.empty(n + 1), chain_empty.t[n]);
        }
    }
    hop(L.filled(0), L.impurity(), chain_filled.c0);
    hop(L.impurity(), L.empty(0), chain_empty.c0);
    return h;
}

/// Resonant level between a filled and an empty lead on one spinless fermion line.
inline MatrixProductOperator tightbinding_mpo(std::size_t N, double eps_d, const ChainCoefficients& chain_empty,
                                              const ChainCoefficients& chain_filled) {
    detail::require(N >= 1, "tightbinding_mpo: need N >= 1");
    detail::require(chain_empty.size() == N && chain_filled.size() == N,
                    "tightbinding_mpo: both leads must have N = " + std::to_string(N) + " modes");
    chain_empty.validate();
    chain_filled.validate();
    const Eigen::MatrixXd h = tightbinding_single_particle(N, eps_d, chain_empty, chain_filled);
    const Operator f = ops::fermion_annihilation(), fd = f.adjoint();
    const std::size_t M = 2 * N + 1;
    std::vector<BlockSpec> blocks;
    for (std::size_t k = 0; k < M; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        BlockSpec b;
        b.d = 2;
        b.D = h(i, i) * (fd * f);
        // Nearest-neighbour hopping needs no parity string: c^dag_k c_{k+1} = f^dag_k f_{k+1}.
        if (k + 1 < M) b.C = {h(i, i + 1) * fd, h(i, i + 1) * f};
        if (k > 0) b.B = {f, fd};
        blocks.push_back(std::move(b));
    }
    return mpo_from_blocks(blocks);
}

/**
 * Proton transfer: system (site 1), reaction coordinate (site 2, dimension
 * d_rc) with counter-term lambda_reorg (d + d^dag)^2, then a bosonic chain
 * coupled through -c0 (d + d^dag)(b0 + b0^dag).
 */
inline MatrixProductOperator protontransfer_mpo(const ProtonTransferParams& p, std::size_t d_rc, std::size_t d, std::size_t N,
                                                const ChainCoefficients& chain) {
    detail::require(d_rc >= 2, "protontransfer_mpo: reaction-coordinate dimension must be >= 2");
    detail::check_chain(chain, N, d, "protontransfer_mpo");
    const Operator pe = ops::projector(2, 0, 0), pk = ops::projector(2, 1, 1);
    const Operator x = ops::displacement(d_rc);
    std::vector<BlockSpec> blocks;

    BlockSpec sys;
    sys.d = 2;
    sys.D = p.omega0e * pe + p.omega0k * pk + p.delta * (ops::projector(2, 0, 1) + ops::projector(2, 1, 0));
    sys.C = {p.g_e * pe + p.g_k * pk};
    blocks.push_back(std::move(sys));

    BlockSpec rc;
    rc.d = d_rc;
    rc.D = p.omega_rc * (ops::number(d_rc) + 0.5 * ops::identity(d_rc)) + p.lambda_reorg * (x * x);
    rc.B = {x};
    rc.C = {-chain.c0 * x};
    blocks.push_back(std::move(rc));

    detail::append_boson_chain(blocks, chain, d);
    return mpo_from_blocks(blocks);
}

}  // namespace ttedopa
