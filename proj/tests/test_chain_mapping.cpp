#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"

using namespace ttedopa;
using boost::math::quadrature::gauss_kronrod;

namespace {

template <class F>
double adaptive(F f, double a, double b) {
    return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

SpectralDensity ohmic(double alpha, double s, double wc = 1.0) { return SpectralDensity(OhmicSD{alpha, s, wc}); }

SpectralDensity flat(double lo, double hi, double v) { return SpectralDensity(TabulatedSD{{lo, hi}, {v, v}}); }

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "ttedopa_chain_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

template <class F>
std::string error_of(F f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

// ---------------------------------------------------------------------------
// Spectral densities and quadrature

TEST(SpectralDensity, OhmicForm) {
    auto J = ohmic(0.1, 0.5, 2.0);
    EXPECT_NEAR(J(0.5), 2 * 0.1 * 2.0 * std::pow(0.25, 0.5), 1e-15);
    EXPECT_EQ(J(2.5), 0.0);
    EXPECT_EQ(J(-0.1), 0.0);
    EXPECT_EQ(J.support(), (std::pair{0.0, 2.0}));
}

TEST(SpectralDensity, TableInterpolatesAndClamps) {
    SpectralDensity J(TabulatedSD{{0.0, 1.0, 2.0}, {0.0, 2.0, -2.0}});
    EXPECT_DOUBLE_EQ(J(0.5), 1.0);
    EXPECT_DOUBLE_EQ(J(1.25), 1.0);
    EXPECT_EQ(J(1.75), 0.0);
    EXPECT_EQ(J.breakpoints(), std::vector<double>{1.0});
    EXPECT_THROW(SpectralDensity(TabulatedSD{{0.0, 0.0}, {1.0, 1.0}}), ChainError);
}

TEST(SpectralDensity, GaussLegendreMatchesBoost) {
    const auto r = quadrature::gauss_legendre(7);
    const auto& x = boost::math::quadrature::gauss<double, 7>::abscissa();
    const auto& w = boost::math::quadrature::gauss<double, 7>::weights();
    // boost stores the non-negative half, the centre first
    for (std::size_t i = 0; i < x.size(); ++i) {
        bool found = false;
        for (std::size_t j = 0; j < r.nodes.size(); ++j)
            if (std::abs(r.nodes[j] - x[i]) < 1e-15) {
                EXPECT_NEAR(r.weights[j], w[i], 1e-15);
                found = true;
            }
        EXPECT_TRUE(found) << x[i];
    }
}

TEST(SpectralDensity, IntegralsAgainstAdaptiveQuadrature) {
    auto J = ohmic(0.3, 0.5, 1.5);
    const double want = adaptive([&](double w) { return J(w) * std::cos(w); }, 0.0, 1.5);
    EXPECT_NEAR(integrate(J, [](double w) { return std::cos(w); }), want, 1e-12);
    EXPECT_NEAR(reorganization_energy(ohmic(0.2, 1.0, 3.0)), 2 * 0.2 * 3.0, 1e-12);
    EXPECT_NEAR(reorganization_energy(J), 2 * 0.3 * 1.5 / 0.5, 1e-10);
}

TEST(ThermalizedSD, ZeroTemperatureLimit) {
    auto J = ohmic(0.1, 1.0);
    auto Jb = thermalized_sd(J, 1e6);
    double worst_pos = 0.0, worst_neg = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double w = 0.01 * i;
        worst_pos = std::max(worst_pos, std::abs(Jb(w) - J(w)) / J(w));
        worst_neg = std::max(worst_neg, std::abs(Jb(-w)) / J(w));
    }
    EXPECT_LT(worst_pos, 1e-6);
    EXPECT_LT(worst_neg, 1e-6);
}

TEST(ThermalizedSD, DetailedBalance) {
    auto Jb = thermalized_sd(ohmic(0.1, 1.0), 1.0);
    EXPECT_NEAR(Jb(-0.3) / Jb(0.3), std::exp(-0.3), 1e-12 * std::exp(-0.3));
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(1e-4, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double w = u(rng);
        EXPECT_NEAR(Jb(-w) / Jb(w), std::exp(-w), 1e-12);
    }
}

TEST(ThermalizedSD, HalfCothForm) {
    auto J = ohmic(0.1, 0.7);
    const double beta = 2.5;
    auto Jb = thermalized_sd(J, beta);
    for (double w : {-0.9, -0.2, 0.05, 0.6}) {
        const double ref = (w > 0 ? 1 : -1) * J(std::abs(w)) / 2 * (1 + 1 / std::tanh(beta * w / 2));
        EXPECT_NEAR(Jb(w), ref, 1e-13 * std::abs(ref));
    }
    // continuous through the removable point
    auto Jl = thermalized_sd(ohmic(0.1, 1.0), beta);
    EXPECT_NEAR(Jl(0.0), 2 * 0.1 / beta, 1e-8);
    EXPECT_NEAR(Jl(1e-7), Jl(0.0), 1e-7);
}

TEST(ThermalizedSD, TotalWeightAgainstAdaptiveQuadrature) {
    auto J = ohmic(0.1, 1.0);
    const double beta = 1.0;
    auto Jb = thermalized_sd(J, beta);
    EXPECT_EQ(Jb.support(), (std::pair{-1.0, 1.0}));
    const double want = adaptive([&](double w) { return J(w) / std::tanh(beta * w / 2); }, 0.0, 1.0);
    const auto m = discretize(Jb, 40);
    double mass = 0.0;
    for (double x : m.weights) mass += x;
    EXPECT_NEAR(mass, want, 1e-12 * want);
    EXPECT_NEAR(chaincoeffs_from_sd(Jb, 5).c0, std::sqrt(want), 1e-12);
}

TEST(ThermalizedSD, Errors) {
    auto J = ohmic(0.1, 1.0);
    EXPECT_THROW(thermalized_sd(J, 0.0), ChainError);
    EXPECT_THROW(thermalized_sd(J, -1.0), ChainError);
    EXPECT_THROW(thermalized_sd(thermalized_sd(J, 1.0), 1.0), ChainError);
    EXPECT_THROW(thermalized_sd(flat(-1, 1, 1), 1.0), ChainError);
    EXPECT_THROW(TemperatureSpec::inverse(0.0), ChainError);
}

// ---------------------------------------------------------------------------
// Chain coefficients

TEST(ChainCoeffs, LegendreRecurrence) {
    const auto c = chaincoeffs_from_sd(flat(-1, 1, 0.5), 12);
    EXPECT_NEAR(c.c0, 1.0, 1e-14);
    for (std::size_t n = 0; n < c.size(); ++n) EXPECT_NEAR(c.eps[n], 0.0, 1e-13);
    for (std::size_t n = 0; n < c.t.size(); ++n) {
        const double k = static_cast<double>(n + 1);
        EXPECT_NEAR(c.t[n], k / std::sqrt(4 * k * k - 1), 1e-13) << n;
    }
    EXPECT_NEAR(c.t[0], 1 / std::sqrt(3.0), 1e-14);
}

TEST(ChainCoeffs, SymmetricWeightHasZeroEnergies) {
    SpectralDensity J(TabulatedSD{{-2.0, -1.0, 0.0, 1.0, 2.0}, {0.0, 1.5, 0.2, 1.5, 0.0}});
    const auto c = chaincoeffs_from_sd(J, 20);
    for (double e : c.eps) EXPECT_NEAR(e, 0.0, 1e-12);
    for (double t : c.t) EXPECT_GT(t, 0.0);
}

TEST(ChainCoeffs, OhmicQuadratureMatchesClosedForm) {
    for (double s : {1.0, 0.5, 2.0}) {
        const std::size_t N = 40;
        const auto q = chaincoeffs_from_sd(ohmic(0.05, s), N);
        const auto a = chaincoeffs_ohmic_analytic(N, 0.05, s, 1.0);
        EXPECT_NEAR(q.c0, a.c0, 1e-12);
        for (std::size_t n = 0; n < N / 2; ++n) {
            EXPECT_NEAR(q.eps[n], a.eps[n], 1e-10) << "s=" << s << " n=" << n;
            EXPECT_NEAR(q.t[n], a.t[n], 1e-10) << "s=" << s << " n=" << n;
        }
    }
}

TEST(ChainCoeffs, AnalyticAsymptotics) {
    const auto c = chaincoeffs_ohmic_analytic(200, 0.1, 1.0, 1.0);
    // deviation from the limit falls like 1/(8 n^2); true values at n = 20
    EXPECT_NEAR(c.eps[20] - 0.5, 0.5 / (41.0 * 43.0), 1e-15);
    EXPECT_LT(std::abs(c.eps[20] - 0.5), 3e-4);
    EXPECT_LT(std::abs(c.t[20] - 0.25), 1e-4);
    EXPECT_LT(std::abs(c.eps[35] - 0.5), 1e-4);
    EXPECT_LT(std::abs(c.eps[199] - 0.5), 1e-5);
    EXPECT_LT(std::abs(c.t_tail - 0.25), 1e-5);
    const auto c2 = chaincoeffs_ohmic_analytic(60, 0.1, 0.3, 4.0);
    EXPECT_NEAR(c2.eps.back(), 2.0, 1e-3);
    EXPECT_NEAR(c2.t.back(), 1.0, 1e-3);
}

TEST(ChainCoeffs, AnalyticCouplingAndAlphaScaling) {
    for (double s : {0.0, 0.5, 1.0, 3.0}) {
        auto J = ohmic(0.07, s, 2.0);
        const double want = std::sqrt(adaptive([&](double w) { return J(w); }, 0.0, 2.0));
        EXPECT_NEAR(chaincoeffs_ohmic_analytic(4, 0.07, s, 2.0).c0, want, 1e-12);
        EXPECT_NEAR(chaincoeffs_ohmic_analytic(4, 0.07, s, 2.0).c0, 2.0 * std::sqrt(2 * 0.07 / (s + 1)), 1e-14);
    }
    const auto a = chaincoeffs_ohmic_analytic(10, 0.01, 0.5, 1.0);
    const auto b = chaincoeffs_ohmic_analytic(10, 0.4, 0.5, 1.0);
    EXPECT_EQ(a.eps, b.eps);
    EXPECT_EQ(a.t, b.t);
    EXPECT_NEAR(b.c0 / a.c0, std::sqrt(40.0), 1e-13);
    // s = 0 first energy is the finite limit
    EXPECT_NEAR(chaincoeffs_ohmic_analytic(3, 0.1, 0.0, 1.0).eps[0], chaincoeffs_from_sd(ohmic(0.1, 0.0), 3).eps[0], 1e-12);
    EXPECT_THROW(chaincoeffs_ohmic_analytic(3, 0.1, -1.0, 1.0), ChainError);
}

TEST(ChainCoeffs, RescalingInvariance) {
    SpectralDensity J(TabulatedSD{{0.0, 0.4, 1.0, 2.0}, {0.0, 0.8, 0.3, 0.0}});
    SpectralDensity J3(TabulatedSD{{0.0, 0.4, 1.0, 2.0}, {0.0, 2.4, 0.9, 0.0}});
    const auto a = chaincoeffs_from_sd(J, 25);
    const auto b = chaincoeffs_from_sd(J3, 25);
    EXPECT_NEAR(b.c0, std::sqrt(3.0) * a.c0, 1e-12);
    for (std::size_t n = 0; n < 25; ++n) EXPECT_NEAR(a.eps[n], b.eps[n], 1e-10 * std::abs(a.eps[n]));
    for (std::size_t n = 0; n < 24; ++n) EXPECT_NEAR(a.t[n], b.t[n], 1e-10 * a.t[n]);
}

TEST(ChainCoeffs, OrthonormalityResidual) {
    for (const auto& J : {ohmic(0.1, 1.0), ohmic(0.1, 0.3), thermalized_sd(ohmic(0.1, 1.0), 1.0)}) {
        OrthonormalPolyBasis basis(J, chaincoeffs_from_sd(J, 50));
        EXPECT_LT(basis.orthonormality_residual(), 1e-8) << J.describe();
        EXPECT_LT(basis.orthonormality_residual(1000), 1e-8) << J.describe();
    }
}

TEST(ChainCoeffs, ConvergenceUnderDoubling) {
    EXPECT_LT(chaincoeffs_convergence(ohmic(0.1, 1.0), 30), 1e-10);
    EXPECT_LT(chaincoeffs_convergence(ohmic(0.1, 0.5), 30), 1e-10);
    EXPECT_LT(chaincoeffs_convergence(thermalized_sd(ohmic(0.1, 1.0), 1.0), 30), 1e-10);
    EXPECT_LT(chaincoeffs_convergence(thermalized_sd(ohmic(0.1, 1.0), 0.2), 30), 1e-10);
}

TEST(ChainCoeffs, FiniteTemperatureChain) {
    auto J = ohmic(0.1, 1.0);
    const auto c = chain_coefficients(J, 20, TemperatureSpec::inverse(1.0));
    const auto d = chaincoeffs_from_sd(thermalized_sd(J, 1.0), 20);
    EXPECT_EQ(c.eps, d.eps);
    EXPECT_NE(c.provenance.find("thermalized(beta=1"), std::string::npos);
    // detailed balance pushes weight to w > 0, so the first energy is positive
    EXPECT_GT(c.eps[0], 0.0);
    const auto z = chain_coefficients(J, 20, TemperatureSpec::zero());
    EXPECT_NE(z.provenance.find("beta=inf"), std::string::npos);
}

TEST(ChainCoeffs, Errors) {
    auto J = ohmic(0.1, 1.0);
    EXPECT_THROW(chaincoeffs_from_sd(J, 0), ChainError);
    EXPECT_NE(error_of([&] { chaincoeffs_from_sd(J, 10, 39); }).find("floor 4N = 40"), std::string::npos);
    EXPECT_NO_THROW(chaincoeffs_from_sd(J, 10, 40));

    DiscreteMeasure few{{0.1, 0.2, 0.3, 0.4, 0.5}, {1, 1, 1, 1, 1}};
    EXPECT_NE(error_of([&] { chaincoeffs_from_measure(few, 10); }).find("unstable recurrence at index"), std::string::npos);

    // 30 nodes but only three distinct abscissae: the fourth polynomial vanishes on the support
    DiscreteMeasure degenerate;
    for (int i = 0; i < 30; ++i) {
        degenerate.nodes.push_back(0.1 * (i % 3 + 1));
        degenerate.weights.push_back(1.0);
    }
    EXPECT_NE(error_of([&] { chaincoeffs_from_measure(degenerate, 6); }).find("unstable recurrence at index 2"),
              std::string::npos);
}

TEST(ChainCoeffs, CoefficientFileRoundTrip) {
    auto c = chaincoeffs_from_sd(thermalized_sd(ohmic(0.1, 0.5), 2.0), 12);
    const auto path = scratch("coeffs.txt");
    write_chain_coefficients(path.string(), c);
    const auto r = read_chain_coefficients(path.string());
    EXPECT_EQ(r.eps, c.eps);
    EXPECT_EQ(r.t, c.t);
    EXPECT_EQ(r.c0, c.c0);
    EXPECT_EQ(r.t_tail, c.t_tail);
    EXPECT_EQ(r.provenance, c.provenance);

    write_file(path, "# c0 = 1\n0 0.5 0.2\n2 0.5 0.2\n");
    EXPECT_NE(error_of([&] { read_chain_coefficients(path.string()); }).find(":3:"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Spectral-density files

TEST(SdFile, OhmicAndTable) {
    const auto p = scratch("ohmic.sd");
    write_file(p, "# bath\nkind = ohmic\nalpha = 0.1\ns = 0.5  # sub-ohmic\nomega_c = 2\n");
    const auto J = load_spectral_density(p.string());
    EXPECT_NEAR(J(1.0), ohmic(0.1, 0.5, 2.0)(1.0), 1e-15);

    const auto q = scratch("table.sd");
    write_file(q, "kind = table\n0 0\n1 2\n2 0\n");
    const auto T = load_spectral_density(q.string());
    EXPECT_DOUBLE_EQ(T(0.5), 1.0);
    EXPECT_EQ(T.support(), (std::pair{0.0, 2.0}));
}

TEST(SdFile, Errors) {
    const auto p = scratch("bad.sd");
    write_file(p, "kind = table\n0 0\n1 x\n");
    EXPECT_NE(error_of([&] { load_spectral_density(p.string()); }).find("bad.sd:3"), std::string::npos);
    write_file(p, "kind = ohmic\nalpha = 0.1\n");
    EXPECT_NE(error_of([&] { load_spectral_density(p.string()); }).find("needs alpha, s and omega_c"), std::string::npos);
    write_file(p, "kind = lorentz\n");
    EXPECT_THROW(load_spectral_density(p.string()), ChainError);
    write_file(p, "kind = ohmic\nbeta = 2\n");
    EXPECT_NE(error_of([&] { load_spectral_density(p.string()); }).find("unknown key 'beta'"), std::string::npos);
    EXPECT_THROW(load_spectral_density(scratch("missing.sd").string()), ChainError);
}

// ---------------------------------------------------------------------------
// Fermionic leads

TEST(Fermionic, ZeroTemperatureSplit) {
    const auto band = FermionicBand::flat(1.0, 1.0);
    const double inf = std::numeric_limits<double>::infinity();
    const auto filled = fermionic_measure(inf, LeadKind::filled, band, 40);
    const auto empty = fermionic_measure(inf, LeadKind::empty, band, 40);
    double wrong = 0.0, total = 0.0;
    for (std::size_t i = 0; i < filled.nodes.size(); ++i) {
        total += filled.weights[i];
        if (filled.nodes[i] > 0) wrong += filled.weights[i];
    }
    for (std::size_t i = 0; i < empty.nodes.size(); ++i)
        if (empty.nodes[i] < 0) wrong += empty.weights[i];
    EXPECT_LT(wrong, 1e-8);
    EXPECT_NEAR(total, 1.0, 1e-12);
    const auto c = chaincoeffs_fermionic(10, inf, LeadKind::filled, band);
    for (double e : c.eps) {
        EXPECT_LE(e, 1e-8);
        EXPECT_GE(e, -1.0);
    }
}

TEST(Fermionic, LeadsSumToBareWeight) {
    // cosine band with a k-dependent coupling; the bare chain comes from plain Gauss in k
    FermionicBand band{[](double k) { return -std::cos(k); }, [](double k) { return 0.5 + 0.1 * k; }, 0.0,
                       std::numbers::pi, 0.2};
    const std::size_t N = 10;
    const auto ref = quadrature::gauss_legendre(400);
    DiscreteMeasure bare;
    for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
        const double k = std::numbers::pi / 2 * (ref.nodes[i] + 1);
        bare.nodes.push_back(band.dispersion(k));
        bare.weights.push_back(std::numbers::pi / 2 * ref.weights[i] * std::pow(band.coupling(k), 2));
    }
    const auto want = chaincoeffs_from_measure(bare, N);
    for (double beta : {0.37, 2.0, 11.5}) {
        auto m = fermionic_measure(beta, LeadKind::filled, band, 10 * N);
        const auto e = fermionic_measure(beta, LeadKind::empty, band, 10 * N);
        m.nodes.insert(m.nodes.end(), e.nodes.begin(), e.nodes.end());
        m.weights.insert(m.weights.end(), e.weights.begin(), e.weights.end());
        const auto got = chaincoeffs_from_measure(m, N);
        EXPECT_NEAR(got.c0, want.c0, 1e-12) << beta;
        for (std::size_t n = 0; n < N; ++n) EXPECT_NEAR(got.eps[n], want.eps[n], 1e-11) << beta << " " << n;
        for (std::size_t n = 0; n + 1 < N; ++n) EXPECT_NEAR(got.t[n], want.t[n], 1e-11) << beta << " " << n;
    }
}

TEST(Fermionic, FirstMomentAgainstAdaptiveQuadrature) {
    const double beta = 1.0;
    auto nf = [&](double e) { return 1 / (1 + std::exp(beta * e)); };
    const double mass = adaptive(nf, -1.0, 1.0);
    const double first = adaptive([&](double e) { return e * nf(e); }, -1.0, 1.0);
    const auto c = chaincoeffs_fermionic(8, beta, LeadKind::filled, FermionicBand::flat(1.0, 1.0));
    EXPECT_NEAR(c.c0, std::sqrt(mass), 1e-12);
    EXPECT_NEAR(c.eps[0], first / mass, 1e-12);
    const auto d = chaincoeffs_fermionic(8, beta, LeadKind::empty, FermionicBand::flat(1.0, 1.0));
    EXPECT_NEAR(d.eps[0], -c.eps[0], 1e-12);
}

TEST(Fermionic, Errors) {
    const auto band = FermionicBand::flat(1.0, 1.0);
    EXPECT_THROW(chaincoeffs_fermionic(5, 0.0, LeadKind::filled, band), ChainError);
    EXPECT_THROW(chaincoeffs_fermionic(5, -2.0, LeadKind::empty, band), ChainError);
    // band entirely above the chemical potential: nothing is filled at zero temperature
    FermionicBand high{[](double k) { return k; }, [](double) { return 1.0; }, 0.5, 1.0, 0.0};
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_NE(error_of([&] { chaincoeffs_fermionic(5, inf, LeadKind::filled, high); }).find("no weight"),
              std::string::npos);
    EXPECT_NO_THROW(chaincoeffs_fermionic(5, inf, LeadKind::empty, high));
}

// ---------------------------------------------------------------------------
// Chain length

TEST(ChainLength, RuleOfThumb) {
    EXPECT_EQ(find_chain_length(100, 1, TemperatureSpec::zero()), 25u);
    EXPECT_EQ(find_chain_length(100, 1, TemperatureSpec::inverse(1.0)), 50u);
    EXPECT_EQ(find_chain_length(10, 1, TemperatureSpec::zero()), 3u);
    EXPECT_EQ(find_chain_length(0.1, 1, TemperatureSpec::zero()), 1u);
    EXPECT_THROW(find_chain_length(0, 1, TemperatureSpec::zero()), ChainError);
}

TEST(ChainLength, Verifier) {
    ResultsStore r;
    Series occ;
    occ.columns = {"occ[1]", "occ[2]"};
    for (int k = 0; k <= 10; ++k) {
        r.times.push_back(0.5 * k);
        occ.rows.push_back({cplx{0.3}, cplx{1e-4 * std::pow(10.0, k / 10.0) * (k >= 4 ? 1.0 : 0.1)}});
    }
    r.series["occ"] = occ;
    const auto v = verify_chain_length(r, 1e-4);
    EXPECT_FALSE(v.pass);
    ASSERT_TRUE(v.first_violation);
    EXPECT_DOUBLE_EQ(*v.first_violation, 2.0);
    EXPECT_NEAR(v.max_occupation, 1e-3, 1e-15);
    EXPECT_TRUE(verify_chain_length(r, 2e-3).pass);

    r.series.erase("occ");
    EXPECT_THROW(verify_chain_length(r, 1e-4), ResultsError);
}

// ---------------------------------------------------------------------------
// Chain to frequency modes

TEST(ModeTransform, VacuumIsZero) {
    auto J = ohmic(0.1, 1.0);
    OrthonormalPolyBasis basis(J, chaincoeffs_from_sd(J, 6));
    const auto M = chain_to_mode_transform(basis, Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(6, 6)), {0.1, 0.5, 0.9});
    EXPECT_EQ(M.cwiseAbs().maxCoeff(), 0.0);
}

TEST(ModeTransform, SingleExcitationIsNormalized) {
    auto J = ohmic(0.1, 0.5);
    const std::size_t N = 12;
    OrthonormalPolyBasis basis(J, chaincoeffs_from_sd(J, N));
    // discretize weights carry J; divide it out to get plain d-omega weights
    const auto grid = discretize(J, 60);
    auto occupation_integral = [&](const Eigen::MatrixXcd& C) {
        double total = 0.0;
        for (std::size_t k = 0; k < grid.nodes.size(); ++k)
            total += grid.weights[k] / J(grid.nodes[k]) * chain_to_mode_transform(basis, C, {grid.nodes[k]})(0, 0).real();
        return total;
    };

    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(N, N);
    C(0, 0) = 1.0;
    for (double w : {0.01, 0.3, 0.99})
        EXPECT_NEAR(chain_to_mode_transform(basis, C, {w})(0, 0).real(), J(w) / std::pow(basis.chain().c0, 2), 1e-12);
    EXPECT_NEAR(occupation_integral(C), 1.0, 1e-10);

    // a spread-out excitation sum_n phi_n b^dag_n |vac>
    std::mt19937 rng(3);
    std::normal_distribution<double> g;
    Eigen::VectorXcd phi(N);
    for (auto& x : phi) x = {g(rng), g(rng)};
    phi.normalize();
    C = phi.conjugate() * phi.transpose();
    EXPECT_NEAR(occupation_integral(C), 1.0, 1e-10);
}

TEST(ModeTransform, TwoModeHandRotation) {
    auto J = ohmic(0.2, 1.0);
    const auto c = chaincoeffs_from_sd(J, 2);
    OrthonormalPolyBasis basis(J, c);
    std::mt19937 rng(11);
    const Eigen::MatrixXcd C = oracle::random_hermitian(rng, 2);
    const std::vector<double> grid{0.2, 0.7};
    auto U = [&](double w) {
        const double p0 = 1 / c.c0, p1 = (w - c.eps[0]) / (c.c0 * c.t[0]);
        return std::array<double, 2>{std::sqrt(J(w)) * p0, std::sqrt(J(w)) * p1};
    };
    const auto M = chain_to_mode_transform(basis, C, grid);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const auto ua = U(grid[a]), ub = U(grid[b]);
            cplx want = 0;
            for (int n = 0; n < 2; ++n)
                for (int m = 0; m < 2; ++m) want += ua[n] * ub[m] * C(n, m);
            EXPECT_LT(std::abs(M(a, b) - want), 1e-13);
        }

    Eigen::VectorXcd means(2);
    means << cplx{0.3, 0.1}, cplx{-0.2, 0.4};
    const auto K = chain_to_mode_connected(basis, C, means, grid);
    const auto m = chain_to_mode_transform(basis, means, grid);
    EXPECT_LT(std::abs(K(0, 1) - (M(0, 1) - m(0) * m(1))), 1e-14);
}

TEST(ModeTransform, Errors) {
    auto J = ohmic(0.1, 1.0);
    OrthonormalPolyBasis basis(J, chaincoeffs_from_sd(J, 4));
    EXPECT_NE(error_of([&] { chain_to_mode_transform(basis, Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(4, 4)), {0.5, 1.5}); })
                  .find("outside the support"),
              std::string::npos);
    EXPECT_THROW(chain_to_mode_transform(basis, Eigen::MatrixXcd(Eigen::MatrixXcd::Zero(3, 3)), {0.5}), ChainError);
}
