#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chain_coefficients.hpp"
#include "spectral_density.hpp"
#include "tensor.hpp"

namespace ttedopa {

/// Inverse temperature; empty means zero temperature.
struct TemperatureSpec {
    std::optional<double> beta;

    static TemperatureSpec zero() { return {}; }
    static TemperatureSpec inverse(double b) {
        if (!(b > 0.0) || !std::isfinite(b)) throw ChainError("temperature: beta must be positive and finite");
        return {b};
    }
    bool is_zero() const { return !beta.has_value(); }
    std::string describe() const { return beta ? "beta=" + format_number(*beta) : "beta=inf"; }
};

/**
 * Jacobi-matrix coefficients of the polynomials orthonormal under the
 * discrete measure (nodes, weights), by Lanczos with full
 * reorthogonalization on the diagonal node matrix. Computes N energies and
 * N hoppings; the last hopping becomes `t_tail`.
 */
inline ChainCoefficients chaincoeffs_from_measure(const DiscreteMeasure& m, std::size_t N, std::string provenance = {}) {
    if (N == 0) throw ChainError("chain mapping: N must be >= 1");
    const auto M = static_cast<Eigen::Index>(m.nodes.size());
    if (m.nodes.size() != m.weights.size()) throw ChainError("chain mapping: node and weight counts differ");
    double mass = 0.0;
    for (double w : m.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ChainError("chain mapping: weights must be finite and >= 0");
        mass += w;
    }
    if (!(mass > 0.0)) throw ChainError("chain mapping: measure has no weight");
    if (static_cast<std::size_t>(M) <= N)
        throw ChainError("chain mapping: unstable recurrence at index " + std::to_string(M) + ": only " +
                         std::to_string(M) + " quadrature nodes carry weight");

    const Eigen::Map<const Eigen::VectorXd> x(m.nodes.data(), M);
    double scale = x.cwiseAbs().maxCoeff();
    if (scale == 0.0) scale = 1.0;
    Eigen::MatrixXd Q(M, static_cast<Eigen::Index>(N));
    Eigen::VectorXd q(M);
    for (Eigen::Index i = 0; i < M; ++i) q(i) = std::sqrt(m.weights[static_cast<std::size_t>(i)] / mass);

    ChainCoefficients c;
    c.c0 = std::sqrt(mass);
    c.provenance = std::move(provenance);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(M);
    double b_prev = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        const auto col = static_cast<Eigen::Index>(n);
        Q.col(col) = q;
        Eigen::VectorXd v = x.cwiseProduct(q);
        const double a = q.dot(v);
        v -= a * q + b_prev * prev;
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd proj = Q.leftCols(col + 1).transpose() * v;
            v -= Q.leftCols(col + 1) * proj;
        }
        const double b = v.norm();
        if (!(b > 1e-12 * scale))
            throw ChainError("chain mapping: unstable recurrence at index " + std::to_string(n) +
                             " (hopping collapsed to " + format_number(b) + ")");
        c.eps.push_back(a);
        if (n + 1 < N)
            c.t.push_back(b);
        else
            c.t_tail = b;
        prev = q;
        q = v / b;
        b_prev = b;
    }
    return c;
}

inline std::size_t default_quad_points(std::size_t N) { return 10 * N; }

/// Chain of N modes for the weight J on its support. quad_points = 0 picks 10 N.
inline ChainCoefficients chaincoeffs_from_sd(const SpectralDensity& J, std::size_t N, std::size_t quad_points = 0) {
    if (N == 0) throw ChainError("chaincoeffs_from_sd: N must be >= 1");
    if (quad_points == 0) quad_points = default_quad_points(N);
    if (quad_points < 4 * N)
        throw ChainError("chaincoeffs_from_sd: quad_points = " + std::to_string(quad_points) + " is below the floor 4N = " +
                         std::to_string(4 * N));
    return chaincoeffs_from_measure(discretize(J, quad_points), N, J.describe());
}

/// Max relative change of every coefficient when the quadrature order is doubled.
inline double chaincoeffs_convergence(const SpectralDensity& J, std::size_t N, std::size_t quad_points = 0) {
    if (quad_points == 0) quad_points = default_quad_points(N);
    const auto a = chaincoeffs_from_sd(J, N, quad_points);
    const auto b = chaincoeffs_from_sd(J, N, 2 * quad_points);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    double worst = rel(a.c0, b.c0);
    for (std::size_t n = 0; n < N; ++n) {
        // on-site energies may vanish by symmetry; measure them against the hopping scale
        worst = std::max(worst, std::abs(a.eps[n] - b.eps[n]) / std::max(std::abs(b.eps[n]), b.t_tail));
        if (n + 1 < N) worst = std::max(worst, rel(a.t[n], b.t[n]));
    }
    return std::max(worst, rel(a.t_tail, b.t_tail));
}

/// Closed-form zero-temperature coefficients of J(w) = 2 alpha w_c (w/w_c)^s on [0, w_c].
inline ChainCoefficients chaincoeffs_ohmic_analytic(std::size_t N, double alpha, double s, double omega_c) {
    if (N == 0) throw ChainError("chaincoeffs_ohmic_analytic: N must be >= 1");
    if (!(s > -1.0)) throw ChainError("chaincoeffs_ohmic_analytic: s must exceed -1");
    if (!(omega_c > 0.0) || !(alpha >= 0.0)) throw ChainError("chaincoeffs_ohmic_analytic: need omega_c > 0, alpha >= 0");
    ChainCoefficients c;
    for (std::size_t k = 0; k < N; ++k) {
        const double n = static_cast<double>(k);
        c.eps.push_back(omega_c / 2.0 * (1.0 + s * s / ((s + 2.0 * n) * (2.0 + s + 2.0 * n))));
        const double t = omega_c * (1.0 + n) * (1.0 + s + n) / ((s + 2.0 + 2.0 * n) * (3.0 + s + 2.0 * n)) *
                         std::sqrt((3.0 + s + 2.0 * n) / (1.0 + s + 2.0 * n));
        if (k + 1 < N)
            c.t.push_back(t);
        else
            c.t_tail = t;
    }
    // s = 0, n = 0 is a 0/0 in the energy formula; its limit is w_c/2.
    if (s == 0.0) c.eps[0] = omega_c / 2.0;
    c.c0 = omega_c * std::sqrt(2.0 * alpha / (s + 1.0));
    c.provenance = SpectralDensity(OhmicSD{alpha, s, omega_c}).describe() + " beta=inf analytic";
    return c;
}

/// Chain for J at the given temperature: thermalized weight when beta is finite.
inline ChainCoefficients chain_coefficients(const SpectralDensity& J, std::size_t N, const TemperatureSpec& temp,
                                            std::size_t quad_points = 0) {
    if (temp.is_zero()) {
        auto c = chaincoeffs_from_sd(J, N, quad_points);
        c.provenance += " beta=inf";
        return c;
    }
    auto c = chaincoeffs_from_sd(thermalized_sd(J, *temp.beta), N, quad_points);
    return c;
}

// ---------------------------------------------------------------------------
// Fermionic leads

enum class LeadKind { filled, empty };

/**
 * Band of a fermionic lead parametrized by k on [k_min, k_max], with
 * dispersion eps(k) and coupling V(k). Integration runs over k.
 */
struct FermionicBand {
    std::function<double(double)> dispersion;
    std::function<double(double)> coupling;
    double k_min = -1.0;
    double k_max = 1.0;
    double mu = 0.0;

    /// eps(k) = k on [-half_width, half_width] with constant coupling v.
    static FermionicBand flat(double half_width, double v) {
        return {[](double k) { return k; }, [v](double) { return v; }, -half_width, half_width, 0.0};
    }
};

/// Occupation 1 / (1 + exp(beta x)); beta = inf gives the step with 1/2 at x = 0.
inline double fermi_factor(double x, double beta) {
    if (std::isinf(beta)) return x < 0.0 ? 1.0 : (x > 0.0 ? 0.0 : 0.5);
    const double y = beta * x;
    if (y > 0.0) {
        const double e = std::exp(-y);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(y));
}

/// Discrete measure in energy space of |V|^2 f_lead over the band.
inline DiscreteMeasure fermionic_measure(double beta, LeadKind lead, const FermionicBand& band, std::size_t quad_points) {
    if (!(beta > 0.0)) throw ChainError("chaincoeffs_fermionic: beta must be positive");
    if (!(band.k_max > band.k_min)) throw ChainError("chaincoeffs_fermionic: empty band interval");
    if (!band.dispersion || !band.coupling) throw ChainError("chaincoeffs_fermionic: band needs dispersion and coupling");

    // Split the band where eps(k) crosses mu so that the Fermi edge is a panel boundary.
    std::vector<double> cuts{band.k_min};
    const int scan = 2000;
    auto g = [&](double k) { return band.dispersion(k) - band.mu; };
    double k_prev = band.k_min, g_prev = g(k_prev);
    for (int i = 1; i <= scan; ++i) {
        const double k = band.k_min + (band.k_max - band.k_min) * i / scan;
        const double gk = g(k);
        if (g_prev == 0.0 && i > 1) cuts.push_back(k_prev);
        if (g_prev * gk < 0.0) {
            double lo = k_prev, hi = k;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * (std::abs(lo) + 1.0); ++it) {
                const double mid = 0.5 * (lo + hi);
                (g(lo) * g(mid) <= 0.0 ? hi : lo) = mid;
            }
            cuts.push_back(0.5 * (lo + hi));
        }
        k_prev = k;
        g_prev = gk;
    }
    cuts.push_back(band.k_max);

    const auto ref = quadrature::gauss_legendre(quad_points);
    DiscreteMeasure m;
    auto add = [&](const quadrature::Rule& r) {
        for (std::size_t i = 0; i < r.nodes.size(); ++i) {
            const double k = r.nodes[i];
            const double e = band.dispersion(k);
            const double v = band.coupling(k);
            const double nf = fermi_factor(e - band.mu, beta);
            const double f = lead == LeadKind::filled ? nf : fermi_factor(band.mu - e, beta);
            const double w = r.weights[i] * v * v * f;
            if (w > 0.0) {
                m.nodes.push_back(e);
                m.weights.push_back(w);
            }
        }
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        if (!(b > a)) continue;
        // Grade toward the Fermi edge when the panel touches one.
        const bool edge_left = i > 0, edge_right = i + 2 < cuts.size();
        quadrature::Rule r;
        auto toward = [&](double lo, double hi, bool at_lo) {
            auto g = at_lo ? quadrature::graded_rule(0.0, hi - lo, ref) : quadrature::graded_rule(lo - hi, 0.0, ref);
            const double shift = at_lo ? lo : hi;
            for (std::size_t j = 0; j < g.nodes.size(); ++j) {
                r.nodes.push_back(shift + g.nodes[j]);
                r.weights.push_back(g.weights[j]);
            }
        };
        if (edge_left && edge_right) {
            const double mid = 0.5 * (a + b);
            toward(a, mid, true);
            toward(mid, b, false);
        } else if (edge_left || edge_right) {
            toward(a, b, edge_left);
        } else {
            quadrature::add_panel(r, ref, a, b);
        }
        add(r);
    }
    double mass = 0.0;
    for (double w : m.weights) mass += w;
    if (!(mass > 1e-300))
        throw ChainError(std::string("chaincoeffs_fermionic: the ") + (lead == LeadKind::filled ? "filled" : "empty") +
                         " lead has no weight at this temperature");
    return m;
}

inline ChainCoefficients chaincoeffs_fermionic(std::size_t N, double beta, LeadKind lead, const FermionicBand& band,
                                               std::size_t quad_points = 0) {
    if (N == 0) throw ChainError("chaincoeffs_fermionic: N must be >= 1");
    if (quad_points == 0) quad_points = default_quad_points(N);
    if (quad_points < 4 * N) throw ChainError("chaincoeffs_fermionic: quad_points below the floor 4N");
    auto c = chaincoeffs_from_measure(fermionic_measure(beta, lead, band, quad_points), N);
    c.provenance = std::string("fermionic(") + (lead == LeadKind::filled ? "filled" : "empty") + ",k=[" +
                   format_number(band.k_min) + "," + format_number(band.k_max) + "],mu=" + format_number(band.mu) +
                   ") beta=" + format_number(beta);
    return c;
}

// ---------------------------------------------------------------------------
// Chain length

/// Rule of thumb from the propagation speed along the chain.
inline std::size_t find_chain_length(double t_final, double omega_c, const TemperatureSpec& temp) {
    if (!(t_final > 0.0) || !(omega_c > 0.0)) throw ChainError("find_chain_length: t_final and omega_c must be positive");
    const double speed = temp.is_zero() ? 4.0 : 2.0;
    // Guard against 25.000000000000004 rounding up.
    const double raw = omega_c * t_final / speed;
    return static_cast<std::size_t>(std::max(1.0, std::ceil(raw * (1.0 - 1e-14))));
}

// ---------------------------------------------------------------------------
// Frequency modes

/// Orthonormal polynomials P_n under J, n < N, from the chain recurrence.
class OrthonormalPolyBasis {
  public:
    OrthonormalPolyBasis(SpectralDensity J, ChainCoefficients chain) : J_(std::move(J)), chain_(std::move(chain)) {
        chain_.validate();
        if (!(chain_.c0 > 0.0)) throw ChainError("OrthonormalPolyBasis: c0 must be positive");
    }

    std::size_t size() const { return chain_.size(); }
    const SpectralDensity& weight() const { return J_; }
    const ChainCoefficients& chain() const { return chain_; }

    /// P_0(w) .. P_{N-1}(w).
    Eigen::VectorXd polys(double w) const {
        const std::size_t N = size();
        Eigen::VectorXd p(static_cast<Eigen::Index>(N));
        p(0) = 1.0 / chain_.c0;
        for (std::size_t n = 0; n + 1 < N; ++n) {
            const auto i = static_cast<Eigen::Index>(n);
            const double back = n > 0 ? chain_.t[n - 1] * p(i - 1) : 0.0;
            p(i + 1) = ((w - chain_.eps[n]) * p(i) - back) / chain_.t[n];
        }
        return p;
    }

    /// U_n(w) = sqrt(J(w)) P_n(w).
    Eigen::VectorXd mode_amplitudes(double w) const { return std::sqrt(J_(w)) * polys(w); }

    /// max_{n,m} |int P_n P_m J - delta_nm| with the given quadrature order.
    double orthonormality_residual(std::size_t quad_points = 0) const {
        if (quad_points == 0) quad_points = default_quad_points(size());
        const auto m = discretize(J_, quad_points);
        const auto N = static_cast<Eigen::Index>(size());
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, N);
        for (std::size_t k = 0; k < m.nodes.size(); ++k) {
            const Eigen::VectorXd p = polys(m.nodes[k]);
            G += m.weights[k] * p * p.transpose();
        }
        return (G - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff();
    }

  private:
    SpectralDensity J_;
    ChainCoefficients chain_;
};

namespace detail {

inline Eigen::MatrixXd mode_matrix(const OrthonormalPolyBasis& basis, const std::vector<double>& grid) {
    auto [lo, hi] = basis.weight().support();
    Eigen::MatrixXd U(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= lo && grid[k] <= hi))
            throw ChainError("chain_to_mode_transform: frequency " + format_number(grid[k]) + " lies outside the support [" +
                             format_number(lo) + ", " + format_number(hi) + "]");
        U.col(static_cast<Eigen::Index>(k)) = basis.mode_amplitudes(grid[k]);
    }
    return U;
}

}  // namespace detail

/**
 * Frequency-resolved correlations M(w, w') = sum_nm U_n(w) U_m(w') C_nm from
 * a chain matrix C_nm (<b^dag_n b_m>, or <b^dag_n b^dag_m> for the anomalous
 * variant; the transform is the same since U is real).
 */
inline Eigen::MatrixXcd chain_to_mode_transform(const OrthonormalPolyBasis& basis, const Eigen::MatrixXcd& chain_matrix,
                                                const std::vector<double>& grid) {
    const auto N = static_cast<Eigen::Index>(basis.size());
    if (chain_matrix.rows() != N || chain_matrix.cols() != N)
        throw ChainError("chain_to_mode_transform: chain data must cover all " + std::to_string(N) + " modes");
    const Eigen::MatrixXd U = detail::mode_matrix(basis, grid);
    return U.transpose().cast<cplx>() * chain_matrix * U.cast<cplx>();
}

/// <a^dag_w> from <b^dag_n>.
inline Eigen::VectorXcd chain_to_mode_transform(const OrthonormalPolyBasis& basis, const Eigen::VectorXcd& chain_vector,
                                                const std::vector<double>& grid) {
    const auto N = static_cast<Eigen::Index>(basis.size());
    if (chain_vector.size() != N)
        throw ChainError("chain_to_mode_transform: chain data must cover all " + std::to_string(N) + " modes");
    const Eigen::MatrixXd U = detail::mode_matrix(basis, grid);
    return U.transpose().cast<cplx>() * chain_vector;
}

/// Connected correlations M(w, w') - m(w) m(w'), with m the transformed one-operator means.
inline Eigen::MatrixXcd chain_to_mode_connected(const OrthonormalPolyBasis& basis, const Eigen::MatrixXcd& chain_matrix,
                                                const Eigen::VectorXcd& chain_means, const std::vector<double>& grid) {
    const Eigen::MatrixXcd full = chain_to_mode_transform(basis, chain_matrix, grid);
    const Eigen::VectorXcd m = chain_to_mode_transform(basis, chain_means, grid);
    return full - m * m.transpose();
}

}  // namespace ttedopa
