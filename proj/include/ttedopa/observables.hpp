#pragma once

#include <string>
#include <vector>

#include "mps.hpp"
#include "operators.hpp"

namespace ttedopa {

enum class ObservableKind { one_site, two_site };

/**
 * A named measurement. One-site observables act with `ops[0]` on each
 * selected site; two-site observables measure <ops[0]_i ops[1]_j> for every
 * ordered pair (i, j) of selected sites. Sites are 0-based here.
 */
struct Observable {
    std::string name;
    ObservableKind kind = ObservableKind::one_site;
    std::vector<Operator> ops;
    std::vector<std::size_t> sites;

    static Observable one_site(std::string name, Operator op, std::vector<std::size_t> sites) {
        return {std::move(name), ObservableKind::one_site, {std::move(op)}, std::move(sites)};
    }
    static Observable two_site(std::string name, Operator op1, Operator op2, std::vector<std::size_t> sites) {
        return {std::move(name), ObservableKind::two_site, {std::move(op1), std::move(op2)}, std::move(sites)};
    }

    /// Values are reported as reals only when this holds.
    bool hermitian() const {
        if (kind == ObservableKind::one_site) return ops::is_hermitian(ops.at(0));
        return false;
    }
};

/// Throws unless every operator matches the local dimension of every selected site.
inline void check_observable(const Observable& obs, const std::vector<std::size_t>& local_dims) {
    const std::size_t need = obs.kind == ObservableKind::one_site ? 1 : 2;
    if (obs.ops.size() != need)
        throw MpsError("observable '" + obs.name + "': expected " + std::to_string(need) + " operator(s)");
    if (obs.sites.empty()) throw MpsError("observable '" + obs.name + "': no sites selected");
    for (auto s : obs.sites) {
        if (s >= local_dims.size())
            throw MpsError("observable '" + obs.name + "': site " + std::to_string(s + 1) + " outside a chain of " +
                           std::to_string(local_dims.size()) + " sites");
        for (const auto& op : obs.ops)
            if (static_cast<std::size_t>(op.rows()) != local_dims[s] || op.rows() != op.cols())
                throw MpsError("observable '" + obs.name + "': operator is " + std::to_string(op.rows()) + "x" +
                               std::to_string(op.cols()) + " but site " + std::to_string(s + 1) +
                               " has local dimension " + std::to_string(local_dims[s]));
    }
}

namespace detail {

// Norm environments: left[n] closes sites < n, right[n] closes sites >= n.
struct NormEnvironments {
    std::vector<DenseTensor> left, right;
};

inline DenseTensor transfer_left(const DenseTensor& env, const DenseTensor& a, const Operator* op) {
    auto t = contract(env, a, {{1, 0}});  // (a', j, b)
    if (op) t = contract(t, DenseTensor::from_matrix(*op), {{1, 1}}).permuted(std::vector<std::size_t>{0, 2, 1});
    return contract(a.conj(), t, {{0, 0}, {1, 1}});  // (b', b)
}

inline DenseTensor transfer_right(const DenseTensor& env, const DenseTensor& a) {
    auto t = contract(a, env, {{2, 1}});              // (a, i, b')
    return contract(a.conj(), t, {{2, 2}, {1, 1}});  // (a', a)
}

inline NormEnvironments norm_environments(const MatrixProductState& psi) {
    const std::size_t n = psi.length();
    NormEnvironments e;
    e.left.assign(n + 1, DenseTensor({1, 1}, {cplx{1.0}}));
    e.right.assign(n + 1, DenseTensor({1, 1}, {cplx{1.0}}));
    for (std::size_t k = 0; k < n; ++k) e.left[k + 1] = transfer_left(e.left[k], psi.site(k), nullptr);
    for (std::size_t k = n; k-- > 0;) e.right[k] = transfer_right(e.right[k + 1], psi.site(k));
    return e;
}

inline cplx close(const DenseTensor& left_env, const DenseTensor& right_env) {
    return inner(right_env.conj(), left_env);  // sum_{b',b} L[b',b] R[b',b]
}

}  // namespace detail

/// <psi|O_n|psi> for every selected site, without renormalization.
inline std::vector<cplx> expect_one_site(const MatrixProductState& psi, const Observable& obs) {
    if (obs.kind != ObservableKind::one_site) throw MpsError("expect_one_site: '" + obs.name + "' is not one-site");
    check_observable(obs, psi.local_dims());
    const auto env = detail::norm_environments(psi);
    const bool herm = obs.hermitian();
    std::vector<cplx> out;
    for (auto s : obs.sites) {
        auto l = detail::transfer_left(env.left[s], psi.site(s), &obs.ops[0]);
        cplx v = detail::close(l, env.right[s + 1]);
        if (herm) v = v.real();
        out.push_back(v);
    }
    return out;
}

/// Matrix of <op1_i op2_j> over selected sites (i, j), without renormalization.
inline Eigen::MatrixXcd expect_two_site(const MatrixProductState& psi, const Observable& obs) {
    if (obs.kind != ObservableKind::two_site) throw MpsError("expect_two_site: '" + obs.name + "' is not two-site");
    check_observable(obs, psi.local_dims());
    const auto env = detail::norm_environments(psi);
    const auto& sel = obs.sites;
    const auto m = static_cast<Eigen::Index>(sel.size());
    Eigen::MatrixXcd out(m, m);

    auto pair_value = [&](std::size_t first, const Operator& op_first, std::size_t second, const Operator& op_second) {
        auto x = detail::transfer_left(env.left[first], psi.site(first), &op_first);
        for (std::size_t k = first + 1; k < second; ++k) x = detail::transfer_left(x, psi.site(k), nullptr);
        x = detail::transfer_left(x, psi.site(second), &op_second);
        return detail::close(x, env.right[second + 1]);
    };

    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            const auto i = sel[static_cast<std::size_t>(a)];
            const auto j = sel[static_cast<std::size_t>(b)];
            if (i == j) {
                Operator prod = obs.ops[0] * obs.ops[1];
                auto l = detail::transfer_left(env.left[i], psi.site(i), &prod);
                out(a, b) = detail::close(l, env.right[i + 1]);
            } else if (i < j) {
                out(a, b) = pair_value(i, obs.ops[0], j, obs.ops[1]);
            } else {
                out(a, b) = pair_value(j, obs.ops[1], i, obs.ops[0]);
            }
        }
    return out;
}

/// rho_{ab} = sum over the rest of psi_{..a..} conj(psi_{..b..}); trace(rho O) = <O>.
inline Eigen::MatrixXcd reduced_density_matrix(const MatrixProductState& psi, std::size_t site) {
    if (site >= psi.length())
        throw MpsError("reduced_density_matrix: site " + std::to_string(site + 1) + " out of range");
    const auto env = detail::norm_environments(psi);
    const std::size_t d = psi.local_dim(site);
    Eigen::MatrixXcd rho(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) {
            Operator proj = ops::projector(d, b, a);
            auto l = detail::transfer_left(env.left[site], psi.site(site), &proj);
            rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = detail::close(l, env.right[site + 1]);
        }
    return rho;
}

}  // namespace ttedopa
