#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace ttedopa;

namespace {

XYZParams random_xyz(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), u(rng), u(rng), u(rng), u(rng)};
}

double dist(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) { return (a - b).norm(); }

MatrixProductState plus_state(std::size_t n) {
    const double r = 1 / std::sqrt(2.0);
    return product_state(std::vector<std::size_t>(n, 2), std::vector<LocalState>(n, LocalState::vector({r, r})));
}

ChainCoefficients short_chain(std::size_t N) { return chaincoeffs_ohmic_analytic(N, 0.1, 1.0, 1.0); }

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
// Environments

TEST(Environments, EnergyFromEveryCenterMatchesDense) {
    std::mt19937 rng(5);
    const auto H4 = xyz_mpo(4, random_xyz(rng));
    auto psi = oracle::random_mps(rng, {2, 2, 2, 2}, 3);
    const auto v = oracle::dense_vector(psi);
    const cplx want = v.dot(mpo_to_dense(H4) * v);
    for (std::size_t k = 0; k < 4; ++k) {
        auto c = canonicalize(psi, k);
        auto env = SweepEnvironments::build(canonicalize(psi, 0), H4);
        // right blocks from a freshly centered state, left blocks grown over the left-canonical part
        const auto right = SweepEnvironments::build(c, H4).right;
        DenseTensor L = SweepEnvironments::edge();
        for (std::size_t j = 0; j < k; ++j) L = SweepEnvironments::grow_left(L, c.site(j), H4.site(j));
        const auto hA = detail::apply_h1(L, H4.site(k), right[k + 1], c.site(k));
        cplx e = 0;
        for (std::size_t i = 0; i < hA.size(); ++i) e += std::conj(c.site(k).data()[i]) * hA.data()[i];
        EXPECT_LT(std::abs(e - want), 1e-12 * std::max(1.0, std::abs(want))) << k;
        if (k == 0)
            for (std::size_t j = 1; j < 4; ++j) {
                const auto& a = env.right[j];
                const auto& b = right[j];
                double d = 0;
                for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
                EXPECT_LT(d, 1e-12);
            }
    }
}

// ---------------------------------------------------------------------------
// TDVP1

TEST(Tdvp1, ZeroHamiltonianIsIdentity) {
    std::mt19937 rng(1);
    auto psi = canonicalize(oracle::random_mps(rng, {2, 2, 2}, 2), 0);
    const auto out = tdvp1_step(psi, xyz_mpo(3, {}), 0.3, Tdvp1{2});
    EXPECT_LT(dist(oracle::dense_vector(out), oracle::dense_vector(psi)), 1e-14);
}

TEST(Tdvp1, TwoSiteFullRankMatchesDense) {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 3; ++trial) {
        const auto H = xyz_mpo(2, random_xyz(rng));
        auto psi = oracle::random_mps(rng, {2, 2}, 2);
        const auto out = tdvp1_step(psi, H, 0.1, Tdvp1{2});
        const auto want = oracle::evolve_dense(mpo_to_dense(H), oracle::dense_vector(psi), 0.1);
        EXPECT_LT(dist(oracle::dense_vector(out), want), 1e-10);
        EXPECT_EQ(out.bond_dims(), psi.bond_dims());
    }
}

TEST(Tdvp1, FullRankChainMatchesDense) {
    std::mt19937 rng(3);
    const auto H = spinboson_mpo(0.5, 0.3, 3, 2, short_chain(2));
    auto psi = oracle::random_mps(rng, {2, 3, 3}, 6);
    auto phi = psi;
    for (int k = 0; k < 10; ++k) phi = tdvp1_step(phi, H, 0.05, Tdvp1{6});
    const auto want = oracle::evolve_dense(mpo_to_dense(H), oracle::dense_vector(psi), 0.5);
    EXPECT_LT(dist(oracle::dense_vector(phi), want), 1e-10);
}

TEST(Tdvp1, PureDephasingConservesSz) {
    const std::size_t N = 4, d = 4;
    const auto H = puredephasing_mpo(0.3, d, N, short_chain(N));
    std::vector<std::size_t> dims{2};
    dims.insert(dims.end(), N, d);
    std::vector<LocalState> states{LocalState::vector({std::sqrt(0.3), std::sqrt(0.7)})};
    states.insert(states.end(), N, LocalState::basis(0));
    auto psi = enlarge_bonds(product_state(dims, states), 4);
    const auto sz = Observable::one_site("sz", ops::sz(), {0});
    const double z0 = expect_one_site(psi, sz)[0].real();
    const double e0 = mpo_expectation(psi, H).real();
    double worst = 0, worst_norm = 0;
    for (int k = 0; k < 100; ++k) {
        psi = tdvp1_step(psi, H, 0.05, Tdvp1{4});
        worst = std::max(worst, std::abs(expect_one_site(psi, sz)[0].real() - z0));
        worst_norm = std::max(worst_norm, std::abs(norm(psi) - 1.0));
    }
    EXPECT_LT(worst, 1e-9);
    EXPECT_LT(worst_norm, 1e-10);
    EXPECT_LT(std::abs(mpo_expectation(psi, H).real() - e0), 1e-9 * std::abs(e0));
}

TEST(Tdvp1, BondMismatchAsksForEnlarge) {
    auto psi = plus_state(3);
    const auto msg = error_of([&] { tdvp1_step(psi, xyz_mpo(3, {1, 1, 1, 0, 0}), 0.1, Tdvp1{2}); });
    EXPECT_NE(msg.find("enlarge_bonds"), std::string::npos) << msg;
    EXPECT_NO_THROW(tdvp1_step(enlarge_bonds(psi, 2), xyz_mpo(3, {1, 1, 1, 0, 0}), 0.1, Tdvp1{2}));
    EXPECT_THROW(tdvp1_step(psi, xyz_mpo(4, {}), 0.1, Tdvp1{1}), EvolutionError);
}

// ---------------------------------------------------------------------------
// TDVP2

TEST(Tdvp2, OnsiteHamiltonianKeepsProductState) {
    const auto H = xyz_mpo(4, {0, 0, 0, 0.7, 0.3});
    auto psi = plus_state(4);
    auto a = psi, b = psi;
    for (int k = 0; k < 5; ++k) {
        auto out = tdvp2_step(a, H, 0.1, Tdvp2{1e-12, 8});
        a = out.psi;
        b = tdvp1_step(b, H, 0.1, Tdvp1{1});
    }
    EXPECT_EQ(a.bond_dims(), (std::vector<std::size_t>{1, 1, 1}));
    EXPECT_LT(dist(oracle::dense_vector(a), oracle::dense_vector(b)), 1e-12);
}

TEST(Tdvp2, ExactWithoutTruncation) {
    std::mt19937 rng(4);
    const auto H = xyz_mpo(4, random_xyz(rng));
    // exactness needs every bond at full rank from the start; a product state is first projected
    auto psi = enlarge_bonds(plus_state(4), 16);
    auto phi = psi;
    double worst = 0;
    for (int k = 0; k < 10; ++k) {
        auto out = tdvp2_step(phi, H, 0.1, Tdvp2{0.0, 16});
        phi = out.psi;
        worst = std::max(worst, out.max_trunc_error);
    }
    const auto want = oracle::evolve_dense(mpo_to_dense(H), oracle::dense_vector(psi), 1.0);
    EXPECT_LT(dist(oracle::dense_vector(phi), want), 1e-9);
    EXPECT_LT(worst, 1e-20);
}

TEST(Tdvp2, XYQuenchGrowsBonds) {
    const std::size_t n = 6;
    const auto H = xyz_mpo(n, {1, 1, 0, 0, 0});
    std::vector<LocalState> neel;
    for (std::size_t k = 0; k < n; ++k) neel.push_back(LocalState::basis(k % 2));
    auto psi = product_state(std::vector<std::size_t>(n, 2), neel);
    std::size_t prev = 1;
    bool grew = false;
    for (int k = 0; k < 30; ++k) {
        auto out = tdvp2_step(psi, H, 0.1, Tdvp2{1e-10, 6});
        psi = out.psi;
        EXPECT_GE(psi.max_bond(), prev);
        grew = grew || psi.max_bond() > prev;
        prev = psi.max_bond();
        EXPECT_LE(prev, 6u);
    }
    EXPECT_TRUE(grew);
    EXPECT_EQ(prev, 6u);
}

// ---------------------------------------------------------------------------
// DTDVP

TEST(Dtdvp, HugeToleranceIsTdvp1) {
    std::mt19937 rng(6);
    const auto H = xyz_mpo(4, random_xyz(rng));
    auto psi = canonicalize(oracle::random_mps(rng, {2, 2, 2, 2}, 2), 0);
    auto a = dtdvp_step(psi, H, 0.1, Dtdvp{1e300, 8});
    auto b = tdvp1_step(psi, H, 0.1, Tdvp1{2});
    EXPECT_EQ(a.bond_dims, b.bond_dims());
    double d = 0;
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 0; i < a.psi.site(k).size(); ++i)
            d = std::max(d, std::abs(a.psi.site(k).data()[i] - b.site(k).data()[i]));
    EXPECT_LT(d, 1e-13);
}

TEST(Dtdvp, GrowthKeepsStateAndNorm) {
    std::mt19937 rng(7);
    const auto H = xyz_mpo(5, random_xyz(rng));
    auto psi = plus_state(5);
    bool grew = false;
    const auto expanded = expand_bonds(psi, H, 0.1, Dtdvp{1e-8, 4}, grew);
    EXPECT_TRUE(grew);
    EXPECT_GT(expanded.max_bond(), 1u);
    EXPECT_LT(dist(oracle::dense_vector(expanded), oracle::dense_vector(psi)), 1e-14);
    // sites right of the center stay right-isometric after padding
    for (std::size_t k = 1; k < 5; ++k) {
        const auto m = expanded.site(k).as_matrix(1);
        EXPECT_LT((m * m.adjoint() - Eigen::MatrixXcd::Identity(m.rows(), m.rows())).norm(), 1e-12) << k;
    }
    for (int k = 0; k < 10; ++k) {
        auto out = dtdvp_step(psi, H, 0.1, Dtdvp{1e-8, 4});
        EXPECT_NEAR(norm(out.psi), 1.0, 1e-10);
        for (auto b : out.bond_dims) EXPECT_LE(b, 4u);
        psi = out.psi;
    }
}

TEST(Dtdvp, BondTraceIsNondecreasing) {
    const std::size_t N = 4, d = 3;
    const auto H = spinboson_mpo(1.0, 0.2, d, N, short_chain(N));
    std::vector<std::size_t> dims{2};
    dims.insert(dims.end(), N, d);
    std::vector<LocalState> states{LocalState::basis(0)};
    states.insert(states.end(), N, LocalState::basis(0));
    auto psi = product_state(dims, states);
    std::vector<std::size_t> prev(N, 1);
    for (int k = 0; k < 20; ++k) {
        psi = dtdvp_step(psi, H, 0.1, Dtdvp{1e-6, 6}).psi;
        const auto b = psi.bond_dims();
        for (std::size_t j = 0; j < N; ++j) EXPECT_GE(b[j], prev[j]) << "step " << k;
        prev = b;
    }
    EXPECT_GT(*std::max_element(prev.begin(), prev.end()), 1u);
}

// ---------------------------------------------------------------------------
// All methods

TEST(Methods, AgreeWithDenseOnThreeSites) {
    std::mt19937 rng(8);
    const auto H = xyz_mpo(3, random_xyz(rng));
    const auto psi = plus_state(3);
    const auto want = oracle::evolve_dense(mpo_to_dense(H), oracle::dense_vector(psi), 1.0);
    const std::vector<EvolutionMethod> methods{Tdvp1{2}, Tdvp2{0.0, 4}, Dtdvp{1e-10, 4}};
    for (const auto& m : methods) {
        std::optional<MatrixProductState> last;
        EvolveOptions opts;
        opts.on_step = [&](std::size_t, double, const MatrixProductState& s) { last = s; };
        evolve(psi, H, 0.01, 1.0, m, {}, std::nullopt, opts);
        ASSERT_TRUE(last);
        EXPECT_LT(dist(oracle::dense_vector(*last), want), 1e-7) << method_name(m);
    }
}

// ---------------------------------------------------------------------------
// Time dependence

TEST(TimeDependence, ConstantListEqualsFoldedTerm) {
    std::mt19937 rng(9);
    const auto H = xyz_mpo(3, random_xyz(rng));
    const Operator extra = 0.4 * ops::sx() + 0.1 * ops::sz();
    const std::size_t steps = 20;
    const auto sz = Observable::one_site("sz", ops::sz(), {0, 1, 2});
    const auto a = evolve(plus_state(3), H, 0.05, 1.0, Tdvp2{0.0, 4}, {sz},
                          TimeDependentTerm{1, std::vector<Operator>(steps, extra)});
    const auto b = evolve(plus_state(3), H.with_onsite_term(1, extra), 0.05, 1.0, Tdvp2{0.0, 4}, {sz});
    ASSERT_EQ(a.times.size(), steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        for (std::size_t j = 0; j < 3; ++j)
            EXPECT_NEAR(a.get("sz").rows[k][j].real(), b.get("sz").rows[k][j].real(), 1e-10);
        EXPECT_NEAR(a.energy[k], b.energy[k], 1e-10);
    }
}

TEST(TimeDependence, DriveMatchesDensePiecewisePropagator) {
    const auto H = spinboson_mpo(1.0, 0.1, 3, 2, short_chain(2));
    const double dt = 0.05;
    const std::size_t steps = 40;
    const auto drive = sinusoidal_drive(ops::sx(), 0.3, 2.0, dt, steps);
    EXPECT_NEAR(drive[0](0, 1).real(), 0.3 * std::sin(2.0 * 0.025), 1e-15);

    auto psi = product_state({2, 3, 3}, {LocalState::basis(0), LocalState::basis(0), LocalState::basis(0)});
    std::optional<MatrixProductState> last;
    EvolveOptions opts;
    opts.on_step = [&](std::size_t, double, const MatrixProductState& s) { last = s; };
    evolve(psi, H, dt, dt * steps, Tdvp1{6}, {}, TimeDependentTerm{0, drive}, opts);

    Eigen::VectorXcd v = oracle::dense_vector(psi);
    const Operator H0 = mpo_to_dense(H);
    for (std::size_t k = 0; k < steps; ++k) v = oracle::evolve_dense(H0 + oracle::embed({2, 3, 3}, 0, drive[k]), v, dt);
    EXPECT_LT(dist(oracle::dense_vector(*last), v), 1e-9);
}

TEST(TimeDependence, Validation) {
    const auto H = xyz_mpo(2, {1, 0, 0, 0, 0});
    Operator bad = ops::sx();
    bad(0, 1) = 2.0;
    EXPECT_NE(error_of([&] { evolve(plus_state(2), H, 0.1, 0.3, Tdvp1{2}, {}, TimeDependentTerm{0, {ops::sx(), ops::sx()}}); })
                  .find("2 operators for 3 steps"),
              std::string::npos);
    EXPECT_NE(error_of([&] { evolve(plus_state(2), H, 0.1, 0.1, Tdvp1{2}, {}, TimeDependentTerm{0, {bad}}); })
                  .find("not Hermitian"),
              std::string::npos);
    EXPECT_THROW(evolve(plus_state(2), H, 0.1, 0.1, Tdvp1{2}, {}, TimeDependentTerm{2, {ops::sx()}}), EvolutionError);
    EXPECT_THROW(evolve(plus_state(2), H, 0.1, 0.1, Tdvp1{2}, {}, TimeDependentTerm{0, {ops::identity(3)}}),
                 EvolutionError);
}

// ---------------------------------------------------------------------------
// Driver

TEST(Evolve, ZeroStepsRecordsInitialRow) {
    const auto H = xyz_mpo(3, {1, 1, 1, 0, 0});
    const auto r = evolve(plus_state(3), H, 0.1, 0.0, Tdvp1{2}, {Observable::one_site("sx", ops::sx(), {0, 2})});
    ASSERT_EQ(r.times, std::vector<double>{0.0});
    EXPECT_NEAR(r.get("sx").rows[0][0].real(), 1.0, 1e-14);
    EXPECT_EQ(r.manifest["steps"], 0);
    EXPECT_EQ(r.norm.size(), 1u);
}

TEST(Evolve, StepCountRequiresDivisibility) {
    EXPECT_EQ(step_count(0.1, 1.0), 10u);
    EXPECT_EQ(step_count(0.01, 1.0), 100u);
    EXPECT_THROW(step_count(0.3, 1.0), EvolutionError);
    EXPECT_THROW(step_count(0.0, 1.0), EvolutionError);
    EXPECT_THROW(step_count(0.1, -1.0), EvolutionError);
}

TEST(Evolve, SeriesLayoutAndDiagnostics) {
    const auto H = xyz_mpo(3, {1, 0.5, 0.2, 0.1, 0});
    EvolveOptions opts;
    opts.reduced_density = {1};
    const auto r = evolve(plus_state(3), H, 0.1, 0.5, Tdvp2{1e-12, 4},
                          {Observable::one_site("sz", ops::sz(), {0, 1}),
                           Observable::one_site("sp", ops::projector(2, 0, 1), {2}),
                           Observable::two_site("corr", ops::sz(), ops::sz(), {0, 2})},
                          std::nullopt, opts);
    EXPECT_EQ(r.times.size(), 6u);
    EXPECT_NEAR(r.times.back(), 0.5, 1e-15);
    EXPECT_EQ(r.get("sz").columns, (std::vector<std::string>{"sz[1]", "sz[2]"}));
    EXPECT_FALSE(r.get("sz").is_complex);
    EXPECT_TRUE(r.get("sp").is_complex);
    EXPECT_EQ(r.get("corr").columns, (std::vector<std::string>{"corr[1,1]", "corr[1,3]", "corr[3,1]", "corr[3,3]"}));
    EXPECT_EQ(r.get("rho2").columns.size(), 4u);
    EXPECT_EQ(r.get("rho2").columns[1], "rho2[0,1]");
    // trace(rho sz) equals <sz> on the same site
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        const auto& rho = r.get("rho2").rows[k];
        EXPECT_NEAR((rho[0] - rho[3]).real(), r.get("sz").rows[k][1].real(), 1e-12);
        EXPECT_NEAR(r.get("corr").rows[k][0].real(), 1.0, 1e-10);
        EXPECT_NEAR(r.norm[k], 1.0, 1e-10);
    }
    EXPECT_EQ(r.manifest["method"], "tdvp2");
    EXPECT_TRUE(r.manifest.contains("max_trunc_error"));
    EXPECT_EQ(r.bond_dims.size(), r.times.size());
    EXPECT_THROW(r.get("sx"), ResultsError);
}

TEST(Evolve, FailsFastOnBadObservables) {
    const auto H = xyz_mpo(3, {1, 0, 0, 0, 0});
    bool stepped = false;
    EvolveOptions opts;
    opts.on_step = [&](std::size_t, double, const MatrixProductState&) { stepped = true; };
    EXPECT_ANY_THROW(evolve(plus_state(3), H, 0.1, 1.0, Tdvp1{2}, {Observable::one_site("n", ops::number(3), {0})},
                            std::nullopt, opts));
    EXPECT_ANY_THROW(evolve(plus_state(3), H, 0.1, 1.0, Tdvp1{2}, {Observable::one_site("sz", ops::sz(), {3})},
                            std::nullopt, opts));
    EXPECT_ANY_THROW(evolve(plus_state(3), H, 0.1, 1.0, Tdvp1{2},
                            {Observable::one_site("sz", ops::sz(), {0}), Observable::one_site("sz", ops::sz(), {1})},
                            std::nullopt, opts));
    EXPECT_FALSE(stepped);
    EXPECT_THROW(evolve(plus_state(3), H, 0.1, 1.0, Tdvp1{0}, {}), EvolutionError);
    EXPECT_THROW(evolve(plus_state(3), H, 0.1, 1.0, Dtdvp{0.0, 4}, {}), EvolutionError);
}

TEST(Evolve, Tdvp1EnergyAndNormConserved) {
    const std::size_t N = 3, d = 3;
    const auto H = spinboson_mpo(0.8, 0.3, d, N, short_chain(N));
    std::vector<std::size_t> dims{2};
    dims.insert(dims.end(), N, d);
    std::vector<LocalState> states{LocalState::basis(0)};
    states.insert(states.end(), N, LocalState::basis(0));
    const auto r = evolve(product_state(dims, states), H, 0.05, 10.0, Tdvp1{4}, {});
    const double e0 = r.energy.front();
    double drift = 0, ndrift = 0;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        drift = std::max(drift, std::abs(r.energy[k] - e0) / std::abs(e0));
        ndrift = std::max(ndrift, std::abs(r.norm[k] - 1.0));
        EXPECT_EQ(r.bond_dims[k], (std::vector<std::size_t>{2, 4, 3}));
    }
    EXPECT_LT(drift, 1e-8);
    EXPECT_LT(ndrift, 1e-10);
}
