#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "linalg.hpp"
#include "mpo.hpp"
#include "mps.hpp"
#include "observables.hpp"
#include "results.hpp"

namespace ttedopa {

class EvolutionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// One-site TDVP at fixed bond dimension D.
struct Tdvp1 {
    std::size_t D = 1;
};

/// Two-site TDVP with SVD truncation.
struct Tdvp2 {
    double trunc_tol = 1e-10;
    std::size_t D_max = 64;
};

/// One-site TDVP with bonds grown ahead of each sweep.
struct Dtdvp {
    double growth_tol = 1e-6;
    std::size_t D_max = 64;
};

using EvolutionMethod = std::variant<Tdvp1, Tdvp2, Dtdvp>;

inline std::string method_name(const EvolutionMethod& m) {
    return std::visit(
        [](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Tdvp1>)
                return "tdvp1";
            else if constexpr (std::is_same_v<T, Tdvp2>)
                return "tdvp2";
            else
                return "dtdvp";
        },
        m);
}

inline void validate_method(const EvolutionMethod& m) {
    std::visit(
        [](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Tdvp1>) {
                if (x.D < 1) throw EvolutionError("tdvp1: D must be >= 1");
            } else if constexpr (std::is_same_v<T, Tdvp2>) {
                if (!(x.trunc_tol >= 0.0)) throw EvolutionError("tdvp2: trunc_tol must be >= 0");
                if (x.D_max < 1) throw EvolutionError("tdvp2: D_max must be >= 1");
            } else {
                if (!(x.growth_tol > 0.0)) throw EvolutionError("dtdvp: growth_tol must be > 0");
                if (x.D_max < 1) throw EvolutionError("dtdvp: D_max must be >= 1");
            }
        },
        m);
}

/// Operator added to the on-site slot of `site` during step k (one per step).
struct TimeDependentTerm {
    std::size_t site = 0;
    std::vector<Operator> operators;

    void validate(const MatrixProductOperator& mpo, std::size_t steps) const {
        if (site >= mpo.length())
            throw EvolutionError("time-dependent term: site " + std::to_string(site + 1) + " outside the chain");
        if (operators.size() != steps)
            throw EvolutionError("time-dependent term: " + std::to_string(operators.size()) + " operators for " +
                                 std::to_string(steps) + " steps");
        const auto d = static_cast<Eigen::Index>(mpo.local_dims()[site]);
        for (const auto& op : operators) {
            if (op.rows() != d || op.cols() != d)
                throw EvolutionError("time-dependent term: operator does not match local dimension " + std::to_string(d));
            if (!ops::is_hermitian(op)) throw EvolutionError("time-dependent term: operator is not Hermitian");
        }
    }
};

/// amplitude sin(omega t) op for each step, held constant over the step at its midpoint value.
inline std::vector<Operator> sinusoidal_drive(const Operator& op, double amplitude, double omega, double dt,
                                              std::size_t steps) {
    std::vector<Operator> out;
    out.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k)
        out.push_back(amplitude * std::sin(omega * (static_cast<double>(k) + 0.5) * dt) * op);
    return out;
}

/**
 * Left/right partial contractions of <psi|H|psi>. left[n] closes sites < n
 * with axes (bra, mpo, ket); right[n] closes sites >= n.
 */
struct SweepEnvironments {
    std::vector<DenseTensor> left, right;

    static DenseTensor edge() { return DenseTensor({1, 1, 1}, {cplx{1.0}}); }

    static DenseTensor grow_left(const DenseTensor& L, const DenseTensor& A, const DenseTensor& W) {
        auto t = contract(L, A, {{2, 0}});                     // (a', w, j, b)
        t = contract(t, W, {{1, 0}, {2, 3}});                  // (a', b, w', i)
        auto out = contract(A.conj(), t, {{0, 0}, {1, 3}});    // (b', b, w')
        return out.permuted(std::vector<std::size_t>{0, 2, 1});
    }

    static DenseTensor grow_right(const DenseTensor& R, const DenseTensor& A, const DenseTensor& W) {
        auto t = contract(A, R, {{2, 2}});                     // (a, j, b', w')
        t = contract(t, W, {{3, 1}, {1, 3}});                  // (a, b', w, i)
        auto out = contract(A.conj(), t, {{2, 1}, {1, 3}});    // (a', a, w)
        return out.permuted(std::vector<std::size_t>{0, 2, 1});
    }

    /// Right environments from a right-canonical tail; left[0] only.
    static SweepEnvironments build(const MatrixProductState& psi, const MatrixProductOperator& mpo) {
        const std::size_t n = psi.length();
        SweepEnvironments e;
        e.left.assign(n + 1, edge());
        e.right.assign(n + 1, edge());
        for (std::size_t k = n; k-- > 1;) e.right[k] = grow_right(e.right[k + 1], psi.site(k), mpo.site(k));
        return e;
    }
};

namespace detail {

inline DenseTensor apply_h1(const DenseTensor& L, const DenseTensor& W, const DenseTensor& R, const DenseTensor& A) {
    auto t = contract(L, A, {{2, 0}});         // (a', w, j, c)
    t = contract(t, W, {{1, 0}, {2, 3}});      // (a', c, w2, i)
    return contract(t, R, {{1, 2}, {2, 1}});   // (a', i, c')
}

inline DenseTensor apply_h0(const DenseTensor& L, const DenseTensor& R, const DenseTensor& C) {
    auto t = contract(L, C, {{2, 0}});         // (a', w, c)
    return contract(t, R, {{1, 1}, {2, 2}});   // (a', c')
}

inline DenseTensor apply_h2(const DenseTensor& L, const DenseTensor& W1, const DenseTensor& W2, const DenseTensor& R,
                            const DenseTensor& T) {
    auto t = contract(L, T, {{2, 0}});         // (a', w, i, j, c)
    t = contract(t, W1, {{1, 0}, {2, 3}});     // (a', j, c, w1, i')
    t = contract(t, W2, {{3, 0}, {1, 3}});     // (a', c, i', w2, j')
    return contract(t, R, {{1, 2}, {3, 1}});   // (a', i', j', c')
}

inline void check_pair(const MatrixProductState& psi, const MatrixProductOperator& mpo) {
    if (psi.local_dims() != mpo.local_dims())
        throw EvolutionError("state and Hamiltonian have different local dimensions");
}

// Symmetric one-site sweep; psi must be canonical with center 0. Leaves center 0.
inline MatrixProductState tdvp1_sweep(MatrixProductState psi, const MatrixProductOperator& H, double dt,
                                      const KrylovOptions& kopts) {
    const std::size_t n = psi.length();
    const double tau = dt / 2.0;
    const cplx fwd{0.0, -tau}, bwd{0.0, tau};
    auto env = SweepEnvironments::build(psi, H);

    for (std::size_t k = 0; k < n; ++k) {
        const auto &L = env.left[k], &R = env.right[k + 1];
        const auto& W = H.site(k);
        auto A = krylov_expm_apply([&](const DenseTensor& x) { return apply_h1(L, W, R, x); }, psi.site(k), fwd, kopts);
        if (k + 1 == n) {
            psi.mutable_site(k) = std::move(A);
            break;
        }
        auto qr = qr_orthogonalize(A, {0, 1});
        env.left[k + 1] = SweepEnvironments::grow_left(L, qr.Q, W);
        const auto& L1 = env.left[k + 1];
        auto C = krylov_expm_apply([&](const DenseTensor& x) { return apply_h0(L1, R, x); }, qr.R, bwd, kopts);
        psi.mutable_site(k) = std::move(qr.Q);
        psi.mutable_site(k + 1) = contract(C, psi.site(k + 1), {{1, 0}});
    }
    for (std::size_t k = n; k-- > 0;) {
        const auto &L = env.left[k], &R = env.right[k + 1];
        const auto& W = H.site(k);
        auto A = krylov_expm_apply([&](const DenseTensor& x) { return apply_h1(L, W, R, x); }, psi.site(k), fwd, kopts);
        if (k == 0) {
            psi.mutable_site(k) = std::move(A);
            break;
        }
        auto lq = lq_orthogonalize(A, {0});
        env.right[k] = SweepEnvironments::grow_right(R, lq.Q, W);
        const auto& R1 = env.right[k];
        auto C = krylov_expm_apply([&](const DenseTensor& x) { return apply_h0(L, R1, x); }, lq.L, bwd, kopts);
        psi.mutable_site(k) = std::move(lq.Q);
        psi.mutable_site(k - 1) = contract(psi.site(k - 1), C, {{2, 0}});
    }
    psi.set_ortho_center(0);
    return psi;
}

inline MatrixProductState centered(MatrixProductState psi) {
    if (psi.ortho_center() == std::optional<std::size_t>{0}) return psi;
    return canonicalize(std::move(psi), 0);
}

}  // namespace detail

/// Target bond extents of a TDVP1 state: min(D, full-rank bound) per bond.
inline std::vector<std::size_t> tdvp1_target_bonds(const MatrixProductState& psi, std::size_t D) {
    auto b = full_rank_bounds(psi.local_dims());
    for (auto& x : b) x = std::min(x, D);
    return b;
}

/// One symmetric TDVP1 step of length dt. Bond extents must already equal the target.
inline MatrixProductState tdvp1_step(const MatrixProductState& psi, const MatrixProductOperator& H, double dt,
                                     const Tdvp1& method, const KrylovOptions& kopts = {}) {
    detail::check_pair(psi, H);
    if (psi.bond_dims() != tdvp1_target_bonds(psi, method.D))
        throw EvolutionError("tdvp1_step: bond dimensions do not match the target D = " + std::to_string(method.D) +
                             "; use enlarge_bonds first");
    return detail::tdvp1_sweep(detail::centered(psi), H, dt, kopts);
}

struct Tdvp2Outcome {
    MatrixProductState psi;
    double max_trunc_error = 0.0;
};

/// One symmetric two-site step; bonds follow (trunc_tol, D_max).
inline Tdvp2Outcome tdvp2_step(const MatrixProductState& psi_in, const MatrixProductOperator& H, double dt,
                               const Tdvp2& method, const KrylovOptions& kopts = {}) {
    detail::check_pair(psi_in, H);
    auto psi = detail::centered(psi_in);
    const std::size_t n = psi.length();
    if (n == 1) return {detail::tdvp1_sweep(std::move(psi), H, dt, kopts), 0.0};

    const double tau = dt / 2.0;
    const cplx fwd{0.0, -tau}, bwd{0.0, tau};
    auto env = SweepEnvironments::build(psi, H);
    double worst = 0.0;

    for (std::size_t k = 0; k + 1 < n; ++k) {
        const auto &L = env.left[k], &R = env.right[k + 2];
        const auto &W1 = H.site(k), &W2 = H.site(k + 1);
        auto theta = contract(psi.site(k), psi.site(k + 1), {{2, 0}});
        theta = krylov_expm_apply([&](const DenseTensor& x) { return detail::apply_h2(L, W1, W2, R, x); }, theta, fwd,
                                  kopts);
        auto svd = svd_split(theta, {0, 1}, method.D_max, method.trunc_tol);
        worst = std::max(worst, svd.truncation_error);
        DenseTensor sv = svd.Vh;
        for (std::size_t a = 0; a < sv.dim(0); ++a)
            for (std::size_t i = 0; i < sv.dim(1); ++i)
                for (std::size_t b = 0; b < sv.dim(2); ++b) sv({a, i, b}) *= svd.S[a];
        env.left[k + 1] = SweepEnvironments::grow_left(L, svd.U, W1);
        psi.mutable_site(k) = std::move(svd.U);
        if (k + 2 < n) {
            const auto& L1 = env.left[k + 1];
            const auto& Rk = env.right[k + 2];
            sv = krylov_expm_apply([&](const DenseTensor& x) { return detail::apply_h1(L1, W2, Rk, x); }, sv, bwd, kopts);
        }
        psi.mutable_site(k + 1) = std::move(sv);
    }
    for (std::size_t k = n - 1; k-- > 0;) {
        const auto &L = env.left[k], &R = env.right[k + 2];
        const auto &W1 = H.site(k), &W2 = H.site(k + 1);
        auto theta = contract(psi.site(k), psi.site(k + 1), {{2, 0}});
        theta = krylov_expm_apply([&](const DenseTensor& x) { return detail::apply_h2(L, W1, W2, R, x); }, theta, fwd,
                                  kopts);
        auto svd = svd_split(theta, {0, 1}, method.D_max, method.trunc_tol);
        worst = std::max(worst, svd.truncation_error);
        DenseTensor us = svd.U;
        for (std::size_t a = 0; a < us.dim(0); ++a)
            for (std::size_t i = 0; i < us.dim(1); ++i)
                for (std::size_t b = 0; b < us.dim(2); ++b) us({a, i, b}) *= svd.S[b];
        env.right[k + 1] = SweepEnvironments::grow_right(R, svd.Vh, W2);
        psi.mutable_site(k + 1) = std::move(svd.Vh);
        if (k > 0) {
            const auto& Lk = env.left[k];
            const auto& R1 = env.right[k + 1];
            us = krylov_expm_apply([&](const DenseTensor& x) { return detail::apply_h1(Lk, W1, R1, x); }, us, bwd, kopts);
        }
        psi.mutable_site(k) = std::move(us);
    }
    psi.set_ortho_center(0);
    return {std::move(psi), worst};
}

struct DtdvpOutcome {
    MatrixProductState psi;
    std::vector<std::size_t> bond_dims;
};

/**
 * Grows each bond by the dominant directions of the two-site residual that
 * the one-site tangent space misses, (1 - P_left) H_2 theta (1 - P_right),
 * keeping those whose singular value times dt exceeds growth_tol. Runs right
 * to left: the new directions join the right-orthonormal site and the center
 * tensor on the left is zero-padded, so the state itself is unchanged.
 * Returns a state with center 0; `grew` reports whether any bond changed.
 */
inline MatrixProductState expand_bonds(const MatrixProductState& psi_in, const MatrixProductOperator& H, double dt,
                                       const Dtdvp& method, bool& grew) {
    const std::size_t n = psi_in.length();
    auto psi = canonicalize(psi_in, n - 1);
    const auto bounds = full_rank_bounds(psi.local_dims());
    std::vector<DenseTensor> left(n + 1, SweepEnvironments::edge());
    for (std::size_t k = 0; k + 1 < n; ++k) left[k + 1] = SweepEnvironments::grow_left(left[k], psi.site(k), H.site(k));
    DenseTensor right = SweepEnvironments::edge();  // closes sites > k+1
    grew = false;

    for (std::size_t k = n - 1; k-- > 0;) {
        const auto& Q = psi.site(k);  // left-canonical
        auto lq = lq_orthogonalize(psi.site(k + 1), {0});
        const DenseTensor& B = lq.Q;
        const std::size_t dl = Q.dim(0), d1 = Q.dim(1), D = Q.dim(2), d2 = B.dim(1), dr = B.dim(2);

        std::size_t cap = std::min({method.D_max, bounds[k], dl * d1, d2 * dr});
        const std::size_t room = cap > D ? cap - D : 0;
        std::size_t add = 0;
        RowMatrix Vh_new;
        if (room > 0) {
            auto theta = contract(contract(Q, lq.L, {{2, 0}}), B, {{2, 0}});
            auto h = detail::apply_h2(left[k], H.site(k), H.site(k + 1), right, theta);
            Eigen::MatrixXcd M = h.as_matrix(2);
            const Eigen::MatrixXcd Qm = Q.as_matrix(2);
            const Eigen::MatrixXcd Bm = B.as_matrix(1);
            M -= Qm * (Qm.adjoint() * M);
            M -= (M * Bm.adjoint()) * Bm;
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const auto& s = svd.singularValues();
            while (add < room && add < static_cast<std::size_t>(s.size()) &&
                   std::abs(dt) * s(static_cast<Eigen::Index>(add)) > method.growth_tol)
                ++add;
            if (add > 0) {
                // Re-project before orthonormalizing: rounding leaks a little of the kept space.
                Eigen::MatrixXcd v = svd.matrixV().leftCols(static_cast<Eigen::Index>(add));
                v -= Bm.adjoint() * (Bm * v);
                Vh_new = detail::thin_qr(v).first.adjoint();
            }
        }

        const std::size_t Dn = D + add;
        DenseTensor Bn({Dn, d2, dr});
        for (std::size_t a = 0; a < D; ++a)
            for (std::size_t j = 0; j < d2; ++j)
                for (std::size_t c = 0; c < dr; ++c) Bn({a, j, c}) = B({a, j, c});
        for (std::size_t a = 0; a < add; ++a)
            for (std::size_t j = 0; j < d2; ++j)
                for (std::size_t c = 0; c < dr; ++c)
                    Bn({D + a, j, c}) = Vh_new(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j * dr + c));
        // New center: Q times the bond matrix, zero on the added columns.
        DenseTensor QC = contract(Q, lq.L, {{2, 0}});
        DenseTensor An({dl, d1, Dn});
        for (std::size_t a = 0; a < dl; ++a)
            for (std::size_t i = 0; i < d1; ++i)
                for (std::size_t b = 0; b < D; ++b) An({a, i, b}) = QC({a, i, b});
        if (add > 0) grew = true;
        right = SweepEnvironments::grow_right(right, Bn, H.site(k + 1));
        psi.mutable_site(k + 1) = std::move(Bn);
        psi.mutable_site(k) = std::move(An);
    }
    psi.set_ortho_center(0);
    return psi;
}

/// Bond growth followed by a TDVP1 sweep; without growth this is exactly the TDVP1 sweep.
inline DtdvpOutcome dtdvp_step(const MatrixProductState& psi, const MatrixProductOperator& H, double dt,
                               const Dtdvp& method, const KrylovOptions& kopts = {}) {
    detail::check_pair(psi, H);
    bool grew = false;
    auto expanded = expand_bonds(psi, H, dt, method, grew);
    auto out = detail::tdvp1_sweep(grew ? std::move(expanded) : detail::centered(psi), H, dt, kopts);
    auto bonds = out.bond_dims();
    return {std::move(out), std::move(bonds)};
}

// ---------------------------------------------------------------------------
// Driver

struct EvolveOptions {
    KrylovOptions krylov;
    /// 0-based sites whose reduced density matrices are recorded.
    std::vector<std::size_t> reduced_density;
    /// Called after every step with (step, time, state).
    std::function<void(std::size_t, double, const MatrixProductState&)> on_step;
};

/// Number of steps t_final / dt; errors unless dt divides t_final within 1e-12.
inline std::size_t step_count(double dt, double t_final) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw EvolutionError("dt must be positive");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) throw EvolutionError("t_final must be >= 0");
    const double k = std::round(t_final / dt);
    if (std::abs(k * dt - t_final) > 1e-12 * std::max(1.0, t_final))
        throw EvolutionError("dt = " + format_number(dt) + " does not divide t_final = " + format_number(t_final));
    return static_cast<std::size_t>(k);
}

namespace detail {

inline std::string site_label(std::size_t s) { return std::to_string(s + 1); }

inline void record(ResultsStore& r, const MatrixProductState& psi, const std::vector<Observable>& observables,
                   const std::vector<std::size_t>& rdm_sites) {
    for (const auto& obs : observables) {
        auto& s = r.series[obs.name];
        if (obs.kind == ObservableKind::one_site) {
            s.rows.push_back(expect_one_site(psi, obs));
        } else {
            const auto m = expect_two_site(psi, obs);
            std::vector<cplx> row;
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            s.rows.push_back(std::move(row));
        }
    }
    for (auto site : rdm_sites) {
        auto& s = r.series["rho" + site_label(site)];
        const auto rho = reduced_density_matrix(psi, site);
        std::vector<cplx> row;
        for (Eigen::Index i = 0; i < rho.rows(); ++i)
            for (Eigen::Index j = 0; j < rho.cols(); ++j) row.push_back(rho(i, j));
        s.rows.push_back(std::move(row));
    }
}

inline void declare_series(ResultsStore& r, const MatrixProductState& psi, const std::vector<Observable>& observables,
                           const std::vector<std::size_t>& rdm_sites) {
    for (const auto& obs : observables) {
        if (r.series.count(obs.name)) throw EvolutionError("duplicate observable name '" + obs.name + "'");
        check_observable(obs, psi.local_dims());
        Series s;
        if (obs.kind == ObservableKind::one_site) {
            s.is_complex = !obs.hermitian();
            for (auto site : obs.sites) s.columns.push_back(obs.name + "[" + site_label(site) + "]");
        } else {
            s.is_complex = true;
            for (auto i : obs.sites)
                for (auto j : obs.sites) s.columns.push_back(obs.name + "[" + site_label(i) + "," + site_label(j) + "]");
        }
        r.series[obs.name] = std::move(s);
    }
    for (auto site : rdm_sites) {
        if (site >= psi.length()) throw EvolutionError("reduced density: site " + site_label(site) + " outside the chain");
        Series s;
        s.is_complex = true;
        const auto d = psi.local_dim(site);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                s.columns.push_back("rho" + site_label(site) + "[" + std::to_string(a) + "," + std::to_string(b) + "]");
        const auto name = "rho" + site_label(site);
        if (r.series.count(name)) throw EvolutionError("duplicate observable name '" + name + "'");
        r.series[name] = std::move(s);
    }
}

}  // namespace detail

/**
 * Evolves psi0 for t_final / dt steps, measuring at t = 0 and after every
 * step. With a time-dependent term, step k uses H + op_k on the term's site;
 * the energy at t_k is taken with the Hamiltonian of the step that ended
 * there (step 0's at t = 0).
 */
inline ResultsStore evolve(const MatrixProductState& psi0, const MatrixProductOperator& mpo, double dt, double t_final,
                           const EvolutionMethod& method, const std::vector<Observable>& observables,
                           const std::optional<TimeDependentTerm>& td_term = std::nullopt,
                           const EvolveOptions& options = {}) {
    validate_method(method);
    detail::check_pair(psi0, mpo);
    const std::size_t steps = step_count(dt, t_final);
    if (td_term) td_term->validate(mpo, steps);

    ResultsStore r;
    detail::declare_series(r, psi0, observables, options.reduced_density);

    MatrixProductState psi = psi0;
    if (const auto* m = std::get_if<Tdvp1>(&method)) psi = enlarge_bonds(psi, m->D);
    psi = canonicalize(std::move(psi), 0);

    auto hamiltonian = [&](std::size_t k) {
        if (!td_term || td_term->operators.empty()) return mpo;
        return mpo.with_onsite_term(td_term->site, td_term->operators[std::min(k, steps - 1)]);
    };
    double worst_trunc = 0.0;
    auto measure = [&](double t, std::size_t k) {
        r.times.push_back(t);
        detail::record(r, psi, observables, options.reduced_density);
        r.norm.push_back(norm(psi));
        r.energy.push_back(mpo_expectation(psi, hamiltonian(k)).real());
        r.bond_dims.push_back(psi.bond_dims());
    };

    const auto start = std::chrono::steady_clock::now();
    measure(0.0, 0);
    for (std::size_t k = 0; k < steps; ++k) {
        const auto H = hamiltonian(k);
        std::visit(
            [&](const auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, Tdvp1>)
                    psi = detail::tdvp1_sweep(std::move(psi), H, dt, options.krylov);
                else if constexpr (std::is_same_v<T, Tdvp2>) {
                    auto out = tdvp2_step(psi, H, dt, m, options.krylov);
                    worst_trunc = std::max(worst_trunc, out.max_trunc_error);
                    psi = std::move(out.psi);
                } else
                    psi = dtdvp_step(psi, H, dt, m, options.krylov).psi;
            },
            method);
        const double t = static_cast<double>(k + 1) * dt;
        measure(t, k);
        if (options.on_step) options.on_step(k + 1, t, psi);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    r.manifest["method"] = method_name(method);
    r.manifest["dt"] = dt;
    r.manifest["t_final"] = t_final;
    r.manifest["steps"] = steps;
    r.manifest["wall_seconds"] = secs;
    r.manifest["final_bond_dims"] = psi.bond_dims();
    if (std::holds_alternative<Tdvp2>(method)) r.manifest["max_trunc_error"] = worst_trunc;
    return r;
}

}  // namespace ttedopa
