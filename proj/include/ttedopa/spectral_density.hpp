#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "chain_coefficients.hpp"

namespace ttedopa {

/// J(w) = 2 alpha w_c (w / w_c)^s on [0, w_c], zero outside.
struct OhmicSD {
    double alpha = 0.0;
    double s = 1.0;
    double omega_c = 1.0;
};

/// Linear interpolation of (omega_i, J_i), ascending omega, clamped to >= 0.
struct TabulatedSD {
    std::vector<double> omega;
    std::vector<double> values;
};

class SpectralDensity;

/// J_beta(w) = sign(w) J(|w|) / (1 - exp(-beta w)) on [-w_max, w_max].
struct ThermalizedSD {
    std::shared_ptr<const SpectralDensity> base;
    double beta = 0.0;
};

class SpectralDensity {
  public:
    SpectralDensity(OhmicSD o) : kind_(o) {
        if (!(o.omega_c > 0.0) || !(o.s > -1.0) || !(o.alpha >= 0.0))
            throw ChainError("ohmic spectral density needs omega_c > 0, s > -1, alpha >= 0");
    }
    SpectralDensity(TabulatedSD t) : kind_(std::move(t)) {
        const auto& tab = std::get<TabulatedSD>(kind_);
        if (tab.omega.size() < 2 || tab.omega.size() != tab.values.size())
            throw ChainError("tabulated spectral density needs at least two (omega, J) rows");
        for (std::size_t i = 1; i < tab.omega.size(); ++i)
            if (!(tab.omega[i] > tab.omega[i - 1])) throw ChainError("tabulated spectral density: omega must ascend");
    }
    SpectralDensity(ThermalizedSD t) : kind_(std::move(t)) {}

    const auto& kind() const { return kind_; }
    bool is_thermalized() const { return std::holds_alternative<ThermalizedSD>(kind_); }

    double operator()(double w) const {
        return std::visit([w](const auto& k) { return eval(k, w); }, kind_);
    }

    std::pair<double, double> support() const {
        return std::visit(
            [](const auto& k) -> std::pair<double, double> {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, OhmicSD>)
                    return {0.0, k.omega_c};
                else if constexpr (std::is_same_v<K, TabulatedSD>)
                    return {k.omega.front(), k.omega.back()};
                else {
                    auto [lo, hi] = k.base->support();
                    const double w = std::max(std::abs(lo), std::abs(hi));
                    return {-w, w};
                }
            },
            kind_);
    }

    /// Interior points where J is not smooth; quadrature panels split here.
    std::vector<double> breakpoints() const {
        auto [lo, hi] = support();
        std::vector<double> pts;
        if (const auto* t = std::get_if<TabulatedSD>(&kind_))
            pts.assign(t->omega.begin() + 1, t->omega.end() - 1);
        if (const auto* t = std::get_if<ThermalizedSD>(&kind_)) {
            pts.push_back(0.0);
            for (double p : t->base->breakpoints()) {
                pts.push_back(p);
                pts.push_back(-p);
            }
            auto [blo, bhi] = t->base->support();
            if (blo > 0.0) {
                pts.push_back(blo);
                pts.push_back(-blo);
            }
            if (bhi < hi) {
                pts.push_back(bhi);
                pts.push_back(-bhi);
            }
        }
        std::erase_if(pts, [&](double p) { return !(p > lo && p < hi); });
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    }

    std::string describe() const {
        std::ostringstream os;
        os << std::setprecision(17);
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, OhmicSD>)
                    os << "ohmic(alpha=" << k.alpha << ",s=" << k.s << ",omega_c=" << k.omega_c << ")";
                else if constexpr (std::is_same_v<K, TabulatedSD>)
                    os << "table(" << k.omega.size() << " rows on [" << k.omega.front() << "," << k.omega.back()
                       << "])";
                else
                    os << "thermalized(beta=" << k.beta << "," << k.base->describe() << ")";
            },
            kind_);
        return os.str();
    }

  private:
    static double eval(const OhmicSD& o, double w) {
        if (w < 0.0 || w > o.omega_c) return 0.0;
        if (w == 0.0) return o.s == 0.0 ? 2.0 * o.alpha * o.omega_c : (o.s > 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        return 2.0 * o.alpha * o.omega_c * std::pow(w / o.omega_c, o.s);
    }

    static double eval(const TabulatedSD& t, double w) {
        if (w < t.omega.front() || w > t.omega.back()) return 0.0;
        auto it = std::upper_bound(t.omega.begin(), t.omega.end(), w);
        std::size_t i = it == t.omega.end() ? t.omega.size() - 1 : static_cast<std::size_t>(it - t.omega.begin());
        const double w0 = t.omega[i - 1], w1 = t.omega[i];
        const double f = (w - w0) / (w1 - w0);
        return std::max(0.0, (1.0 - f) * t.values[i - 1] + f * t.values[i]);
    }

    static double eval(const ThermalizedSD& t, double w) {
        if (w == 0.0) {
            // Removable point: J(w)/(beta w) as w -> 0+.
            const double eps = 1e-9 * std::max(t.base->support().second, 1.0);
            return (*t.base)(eps) / (t.beta * eps);
        }
        const double j = (*t.base)(std::abs(w));
        if (j == 0.0) return 0.0;
        // 1 - exp(-beta w) = -expm1(-beta w) has the sign of w.
        return (w > 0.0 ? 1.0 : -1.0) * j / (-std::expm1(-t.beta * w));
    }

    std::variant<OhmicSD, TabulatedSD, ThermalizedSD> kind_;
};

/**
 * Finite-temperature bath as an effective zero-temperature bath on the
 * extended support [-w_max, w_max]; satisfies J_beta(-w) = exp(-beta w) J_beta(w).
 */
inline SpectralDensity thermalized_sd(const SpectralDensity& J, double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ChainError("thermalized_sd: beta must be positive and finite");
    if (J.is_thermalized()) throw ChainError("thermalized_sd: spectral density is already thermalized");
    if (J.support().first < 0.0) throw ChainError("thermalized_sd: base spectral density must live on w >= 0");
    return SpectralDensity(ThermalizedSD{std::make_shared<const SpectralDensity>(J), beta});
}

/// Reads `kind = ohmic` (alpha, s, omega_c) or `kind = table` followed by
/// two-column rows (omega J). `#` starts a comment.
inline SpectralDensity load_spectral_density(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ChainError("cannot read spectral density file " + path);
    std::string kind;
    OhmicSD o{};
    bool seen[3] = {false, false, false};
    TabulatedSD tab;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto c = line.find('#'); c != std::string::npos) line.erase(c);
        line = trim(line);
        if (line.empty()) continue;
        auto where = path + ":" + std::to_string(lineno);
        if (auto eq = line.find('='); eq != std::string::npos) {
            auto key = trim(line.substr(0, eq));
            auto val = trim(line.substr(eq + 1));
            try {
                if (key == "kind")
                    kind = val;
                else if (key == "alpha")
                    o.alpha = std::stod(val), seen[0] = true;
                else if (key == "s")
                    o.s = std::stod(val), seen[1] = true;
                else if (key == "omega_c")
                    o.omega_c = std::stod(val), seen[2] = true;
                else
                    throw ChainError(where + ": unknown key '" + key + "'");
            } catch (const std::logic_error& e) {
                if (dynamic_cast<const ChainError*>(&e)) throw;
                throw ChainError(where + ": value of '" + key + "' is not a number");
            }
            continue;
        }
        std::istringstream ls(line);
        double w = 0.0, j = 0.0;
        if (!(ls >> w >> j)) throw ChainError(where + ": expected two numeric columns 'omega J'");
        tab.omega.push_back(w);
        tab.values.push_back(j);
    }
    if (kind == "ohmic") {
        if (!(seen[0] && seen[1] && seen[2])) throw ChainError(path + ": ohmic kind needs alpha, s and omega_c");
        return SpectralDensity(o);
    }
    if (kind == "table") return SpectralDensity(std::move(tab));
    throw ChainError(path + ": kind must be 'ohmic' or 'table', got '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Quadrature

namespace quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
inline Rule gauss_legendre(std::size_t n) {
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = p2;
        }
        if (n == 1) p0 = 1.0;
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    return r;
}

/// Adds an n-point Gauss rule on [a, b] to `out`.
inline void add_panel(Rule& out, const Rule& ref, double a, double b) {
    const double h = 0.5 * (b - a), m = 0.5 * (b + a);
    for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
        out.nodes.push_back(m + h * ref.nodes[i]);
        out.weights.push_back(h * ref.weights[i]);
    }
}

/// Panels on [a, b] graded geometrically toward an endpoint at 0 (if any),
/// resolving w^s endpoint behaviour and the thermal kink.
inline Rule graded_rule(double a, double b, const Rule& ref, int levels = 60) {
    Rule out;
    const bool zero_left = a == 0.0, zero_right = b == 0.0;
    if (!zero_left && !zero_right) {
        add_panel(out, ref, a, b);
        return out;
    }
    const double len = b - a;
    std::vector<double> cuts{0.0};
    for (int k = levels; k >= 0; --k) cuts.push_back(len * std::ldexp(1.0, -k));
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (zero_left)
            add_panel(out, ref, cuts[i], cuts[i + 1]);
        else
            add_panel(out, ref, -cuts[i + 1], -cuts[i]);
    }
    return out;
}

}  // namespace quadrature

/// Discrete measure (nodes, weights) approximating integration against J.
struct DiscreteMeasure {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Composite Gauss-Legendre discretization of J with `points` nodes per panel.
inline DiscreteMeasure discretize(const SpectralDensity& J, std::size_t points) {
    const auto ref = quadrature::gauss_legendre(points);
    auto [lo, hi] = J.support();
    std::vector<double> cuts{lo};
    for (double p : J.breakpoints()) cuts.push_back(p);
    cuts.push_back(hi);
    DiscreteMeasure m;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto panel = quadrature::graded_rule(cuts[i], cuts[i + 1], ref);
        for (std::size_t k = 0; k < panel.nodes.size(); ++k) {
            const double w = panel.weights[k] * J(panel.nodes[k]);
            if (w > 0.0) {
                m.nodes.push_back(panel.nodes[k]);
                m.weights.push_back(w);
            }
        }
    }
    return m;
}

/// Integral of f(w) J(w) over the support.
template <typename F>
double integrate(const SpectralDensity& J, F&& f, std::size_t points = 200) {
    const auto m = discretize(J, points);
    double s = 0.0;
    for (std::size_t k = 0; k < m.nodes.size(); ++k) s += m.weights[k] * f(m.nodes[k]);
    return s;
}

/// lambda_reorg = integral of J(w) / w.
inline double reorganization_energy(const SpectralDensity& J, std::size_t points = 200) {
    return integrate(J, [](double w) { return 1.0 / w; }, points);
}

}  // namespace ttedopa
