#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "config.hpp"
#include "models.hpp"
#include "observables.hpp"
#include "results.hpp"
#include "tdvp.hpp"

namespace ttedopa {

inline constexpr const char* code_version = "0.1.0";

/// Coefficients shared by every convergence branch. `filled` is set for the two-lead model.
struct ChainData {
    ChainCoefficients chain;
    std::optional<ChainCoefficients> filled;
    std::size_t quad_points = 0;
    /// Max relative coefficient change under doubled quadrature; NaN when not computed.
    double convergence = std::numeric_limits<double>::quiet_NaN();
    std::string source;
};

/// Named sites of a model, 0-based.
struct SiteLayout {
    std::size_t total = 0;
    std::optional<std::size_t> system, rc, impurity;
    std::vector<std::size_t> chain;
};

/// Everything evolve needs for one config.
struct Problem {
    MatrixProductOperator H;
    MatrixProductState psi0;
    std::vector<std::size_t> local_dims;
    SiteLayout layout;
    std::vector<Observable> observables;
    std::optional<TimeDependentTerm> drive;
    std::vector<std::size_t> reduced_density;
};

namespace detail {

inline SpectralDensity bath_sd(const SimulationConfig& c) {
    if (c.sd == "ohmic") return SpectralDensity(OhmicSD{c.alpha, c.s, c.omega_c});
    return load_spectral_density(c.sd_file);
}

inline ChainCoefficients truncate_chain(ChainCoefficients c, std::size_t N, const std::string& path) {
    if (c.size() < N)
        throw ConfigError("[bath] coeffs_file: " + path + " has " + std::to_string(c.size()) + " modes, N = " +
                          std::to_string(N));
    if (c.size() > N) {
        c.t_tail = c.t[N - 1];
        c.eps.resize(N);
        c.t.resize(N - 1);
    }
    return c;
}

inline double chain_difference(const ChainCoefficients& a, const ChainCoefficients& b) {
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    double worst = rel(a.c0, b.c0);
    for (std::size_t n = 0; n < a.size(); ++n) {
        worst = std::max(worst, std::abs(a.eps[n] - b.eps[n]) / std::max(std::abs(b.eps[n]), b.t_tail));
        if (n + 1 < a.size()) worst = std::max(worst, rel(a.t[n], b.t[n]));
    }
    return worst;
}

}  // namespace detail

/// Builds (or reads) the chain coefficients the config asks for.
inline ChainData build_chains(const SimulationConfig& c) {
    ChainData out;
    const auto bath = c.info().bath;
    if (bath == BathKind::none) return out;
    const std::size_t N = c.N;
    out.quad_points = c.quad_points == 0 ? default_quad_points(N) : c.quad_points;
    if (bath == BathKind::fermion) {
        auto band = FermionicBand::flat(c.half_width, c.coupling);
        band.mu = c.mu;
        const double beta = c.beta.value_or(std::numeric_limits<double>::infinity());
        out.chain = chaincoeffs_fermionic(N, beta, LeadKind::empty, band, out.quad_points);
        out.filled = chaincoeffs_fermionic(N, beta, LeadKind::filled, band, out.quad_points);
        const auto e2 = chaincoeffs_fermionic(N, beta, LeadKind::empty, band, 2 * out.quad_points);
        const auto f2 = chaincoeffs_fermionic(N, beta, LeadKind::filled, band, 2 * out.quad_points);
        out.convergence = std::max(detail::chain_difference(out.chain, e2), detail::chain_difference(*out.filled, f2));
        out.source = "fermionic quadrature";
        return out;
    }
    if (!c.coeffs_file.empty()) {
        out.chain = detail::truncate_chain(read_chain_coefficients(c.coeffs_file), N, c.coeffs_file);
        out.source = "file " + c.coeffs_file;
        return out;
    }
    if (c.sd == "ohmic" && !c.beta) {
        out.chain = chaincoeffs_ohmic_analytic(N, c.alpha, c.s, c.omega_c);
        out.convergence = 0.0;
        out.source = "closed form";
        return out;
    }
    const auto J = detail::bath_sd(c);
    const auto weight = c.beta ? thermalized_sd(J, *c.beta) : J;
    out.chain = chain_coefficients(J, N, c.temperature(), out.quad_points);
    out.convergence = chaincoeffs_convergence(weight, N, out.quad_points);
    out.source = "quadrature";
    return out;
}

inline SiteLayout site_layout(const SimulationConfig& c) {
    SiteLayout L;
    const std::size_t N = c.N;
    if (c.model == "tightbinding") {
        const TightBindingLayout tb{N};
        L.total = tb.sites();
        L.impurity = tb.impurity();
        L.system = tb.impurity();
        for (std::size_t s = 0; s < L.total; ++s)
            if (s != tb.impurity()) L.chain.push_back(s);
        return L;
    }
    if (c.info().bath == BathKind::none) {
        L.total = static_cast<std::size_t>(c.param("length"));
        return L;
    }
    L.system = 0;
    std::size_t first = 1;
    if (c.model == "protontransfer") {
        L.rc = 1;
        first = 2;
    }
    for (std::size_t n = 0; n < N; ++n) L.chain.push_back(first + n);
    L.total = first + N;
    return L;
}

/**
 * Site list from comma-separated tokens: 1-based numbers, ranges `a-b`,
 * and the names system, rc, impurity, chain, all. Result is 0-based.
 */
inline std::vector<std::size_t> resolve_sites(const std::string& text, const SiteLayout& L, const std::string& where) {
    std::vector<std::size_t> out;
    auto add = [&](std::size_t s1) {
        if (s1 < 1 || s1 > L.total)
            throw ConfigError(where + ": site " + std::to_string(s1) + " outside 1.." + std::to_string(L.total));
        out.push_back(s1 - 1);
    };
    auto named = [&](const std::optional<std::size_t>& s, const std::string& tok) {
        if (!s) throw ConfigError(where + ": this model has no '" + tok + "' site");
        out.push_back(*s);
    };
    const auto tokens = detail::split_list(text);
    if (tokens.empty()) throw ConfigError(where + ": no sites given");
    for (const auto& tok : tokens) {
        if (tok == "system")
            named(L.system, tok);
        else if (tok == "rc")
            named(L.rc, tok);
        else if (tok == "impurity")
            named(L.impurity, tok);
        else if (tok == "chain") {
            if (L.chain.empty()) throw ConfigError(where + ": this model has no chain");
            out.insert(out.end(), L.chain.begin(), L.chain.end());
        } else if (tok == "all") {
            for (std::size_t s = 0; s < L.total; ++s) out.push_back(s);
        } else if (auto dash = tok.find('-'); dash != std::string::npos && dash > 0) {
            const auto a = detail::parse_size(where, detail::trim(tok.substr(0, dash)));
            const auto b = detail::parse_size(where, detail::trim(tok.substr(dash + 1)));
            if (b < a) throw ConfigError(where + ": empty range '" + tok + "'");
            for (auto s = a; s <= b; ++s) add(s);
        } else {
            add(detail::parse_size(where, tok));
        }
    }
    return out;
}

inline const std::vector<std::string>& operator_catalog() {
    static const std::vector<std::string> names{"sx", "sy", "sz", "sp",  "sm",  "id",  "n",    "b",
                                                "bd", "x",  "c",  "cd",  "nup", "ndn", "docc"};
    return names;
}

/// Local operator by name for a site of dimension d.
inline Operator named_operator(const std::string& name, std::size_t d, const std::string& where) {
    auto need = [&](bool ok, const std::string& what) {
        if (!ok)
            throw ConfigError(where + ": operator '" + name + "' needs " + what + " but the site has dimension " +
                              std::to_string(d));
    };
    if (name == "id") return ops::identity(d);
    if (name == "sx" || name == "sy" || name == "sz" || name == "sp" || name == "sm") {
        need(d == 2, "a two-level site");
        if (name == "sx") return ops::sx();
        if (name == "sy") return ops::sy();
        if (name == "sz") return ops::sz();
        if (name == "sp") return ops::projector(2, 0, 1);
        return ops::projector(2, 1, 0);
    }
    if (name == "c" || name == "cd") {
        need(d == 2, "a fermion site");
        return name == "c" ? ops::fermion_annihilation() : Operator(ops::fermion_annihilation().adjoint());
    }
    if (name == "nup" || name == "ndn" || name == "docc") {
        need(d == 4, "a spinful site");
        const ops::SpinfulSite s;
        if (name == "nup") return s.n_up;
        if (name == "ndn") return s.n_dn;
        return s.n_up * s.n_dn;
    }
    if (name == "n") {
        if (d == 4) {
            const ops::SpinfulSite s;
            return s.n_up + s.n_dn;
        }
        return ops::number(d);
    }
    if (name == "b") return ops::annihilation(d);
    if (name == "bd") return ops::creation(d);
    if (name == "x") return ops::displacement(d);
    throw ConfigError(where + ": unknown operator '" + name + "'; catalog: " + detail::join(operator_catalog()));
}

namespace detail {

inline LocalState random_local_state(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> g;
    std::vector<cplx> v(d);
    double n2 = 0.0;
    for (auto& x : v) {
        x = {g(rng), g(rng)};
        n2 += std::norm(x);
    }
    for (auto& x : v) x /= std::sqrt(n2);
    return LocalState::vector(std::move(v));
}

inline LocalState spin_state(const std::string& name, std::mt19937_64& rng, const std::string& where) {
    const double r = 1.0 / std::sqrt(2.0);
    if (name == "up") return LocalState::basis(0);
    if (name == "down") return LocalState::basis(1);
    if (name == "plus") return LocalState::vector({r, r});
    if (name == "minus") return LocalState::vector({r, -r});
    if (name == "random") return random_local_state(rng, 2);
    throw ConfigError(where + ": expected up, down, plus, minus or random, got '" + name + "'");
}

inline std::vector<LocalState> lattice_states(const SimulationConfig& c, std::size_t n, std::size_t d,
                                              std::mt19937_64& rng) {
    const std::string where = "[initial] state";
    const auto& s = c.initial_state;
    std::vector<LocalState> out;
    // spinful labels: 2 = up, 1 = down
    const std::size_t up = d == 4 ? 2 : 0, down = 1;
    if (s == "neel") {
        for (std::size_t k = 0; k < n; ++k) out.push_back(LocalState::basis(k % 2 == 0 ? up : down));
    } else if (s == "up" || s == "down") {
        out.assign(n, LocalState::basis(s == "up" ? up : down));
    } else if (s == "random") {
        for (std::size_t k = 0; k < n; ++k) out.push_back(random_local_state(rng, d));
    } else if (d == 2 && (s == "plus" || s == "minus")) {
        out.assign(n, spin_state(s, rng, where));
    } else {
        for (const auto& tok : split_list(s)) {
            const auto label = parse_size(where, tok);
            if (label >= d) throw ConfigError(where + ": label " + tok + " outside local dimension " + std::to_string(d));
            out.push_back(LocalState::basis(label));
        }
        if (out.size() != n)
            throw ConfigError(where + ": expected neel, up, down, plus, minus, random or " + std::to_string(n) +
                              " labels, got '" + s + "'");
    }
    return out;
}

}  // namespace detail

/// MPO, initial state, observables and drive for one config.
inline Problem build_problem(const SimulationConfig& c, const ChainData& chains) {
    Problem p;
    p.layout = site_layout(c);
    const std::size_t N = c.N;
    std::mt19937_64 rng(c.seed);
    std::vector<LocalState> states;

    if (c.model == "xyz" || c.model == "hubbard") {
        const auto n = p.layout.total;
        const std::size_t d = c.model == "xyz" ? 2 : 4;
        if (c.model == "xyz")
            p.H = xyz_mpo(n, {c.param("Jx"), c.param("Jy"), c.param("Jz"), c.param("hx"), c.param("hz")});
        else
            p.H = hubbard_mpo(n, {c.param("t"), c.param("U")});
        p.local_dims.assign(n, d);
        states = detail::lattice_states(c, n, d, rng);
    } else if (c.model == "tightbinding") {
        p.H = tightbinding_mpo(N, c.param("eps_d"), chains.chain, *chains.filled);
        p.local_dims.assign(p.layout.total, 2);
        const TightBindingLayout tb{N};
        std::size_t imp = 0;
        if (c.initial_system == "occupied")
            imp = 1;
        else if (c.initial_system != "empty")
            throw ConfigError("[initial] system: expected empty or occupied, got '" + c.initial_system + "'");
        for (std::size_t s = 0; s < tb.sites(); ++s)
            states.push_back(LocalState::basis(s < tb.impurity() ? 1 : (s == tb.impurity() ? imp : 0)));
    } else {
        states.push_back(detail::spin_state(c.initial_system, rng, "[initial] system"));
        p.local_dims.push_back(2);
        if (c.model == "puredephasing") {
            p.H = puredephasing_mpo(c.param("delta_e"), c.d, N, chains.chain);
        } else if (c.model == "spinboson") {
            p.H = spinboson_mpo(c.param("omega0"), c.param("delta"), c.d, N, chains.chain);
        } else {
            const auto d_rc = static_cast<std::size_t>(c.param("d_rc"));
            ProtonTransferParams pt{c.param("omega0e"), c.param("omega0k"), c.param("delta"), c.param("omega_rc"),
                                    c.param("g_e"),     c.param("g_k"),     c.param("lambda_reorg")};
            p.H = protontransfer_mpo(pt, d_rc, c.d, N, chains.chain);
            if (c.initial_rc >= d_rc)
                throw ConfigError("[initial] rc: label " + std::to_string(c.initial_rc) + " outside d_rc = " +
                                  std::to_string(d_rc));
            states.push_back(LocalState::basis(c.initial_rc));
            p.local_dims.push_back(d_rc);
        }
        for (std::size_t n = 0; n < N; ++n) {
            states.push_back(LocalState::basis(0));
            p.local_dims.push_back(c.d);
        }
    }
    p.psi0 = product_state(p.local_dims, states);

    for (const auto& o : c.observables) {
        const std::string where = "[observables] " + o.name;
        const auto sites = resolve_sites(o.sites, p.layout, where);
        const std::size_t d = p.local_dims[sites.front()];
        for (auto s : sites)
            if (p.local_dims[s] != d)
                throw ConfigError(where + ": selected sites mix local dimensions " + std::to_string(d) + " and " +
                                  std::to_string(p.local_dims[s]));
        if (o.ops.size() == 1)
            p.observables.push_back(Observable::one_site(o.name, named_operator(o.ops[0], d, where), sites));
        else
            p.observables.push_back(Observable::two_site(o.name, named_operator(o.ops[0], d, where),
                                                         named_operator(o.ops[1], d, where), sites));
    }
    if (!p.layout.chain.empty()) {
        const bool fermion = c.info().bath == BathKind::fermion;
        if (c.chain_occupation) {
            // the two-lead model reports every site so the sum is the particle number
            std::vector<std::size_t> sites = p.layout.chain;
            if (fermion) {
                sites.clear();
                for (std::size_t s = 0; s < p.layout.total; ++s) sites.push_back(s);
            }
            p.observables.push_back(Observable::one_site("occ", ops::number(p.local_dims[sites.front()]), sites));
        }
        if (c.chain_correlations) {
            if (fermion)
                throw ConfigError("[measure] chain_correlations: only available for bosonic chains");
            p.observables.push_back(
                Observable::two_site("corr", ops::creation(c.d), ops::annihilation(c.d), p.layout.chain));
        }
    }
    for (auto s1 : c.reduced_density) {
        if (s1 < 1 || s1 > p.layout.total)
            throw ConfigError("[measure] reduced_density: site " + std::to_string(s1) + " outside 1.." +
                              std::to_string(p.layout.total));
        p.reduced_density.push_back(s1 - 1);
    }
    if (c.drive) {
        const std::string where = "[drive] operator";
        if (c.drive->site < 1 || c.drive->site > p.layout.total)
            throw ConfigError("[drive] site: " + std::to_string(c.drive->site) + " outside 1.." +
                              std::to_string(p.layout.total));
        const auto site = c.drive->site - 1;
        const auto op = named_operator(c.drive->op, p.local_dims[site], where);
        if (!ops::is_hermitian(op)) throw ConfigError(where + ": '" + c.drive->op + "' is not Hermitian");
        p.drive = TimeDependentTerm{site, sinusoidal_drive(op, c.drive->amplitude, c.drive->omega, c.dt,
                                                           step_count(c.dt, c.t_final))};
    }
    for (const auto& obs : p.observables) check_observable(obs, p.local_dims);
    for (const auto& name : c.convobs) {
        bool found = std::any_of(p.observables.begin(), p.observables.end(), [&](const auto& o) { return o.name == name; });
        if (!found && name.rfind("rho", 0) != 0 && name != "energy" && name != "norm")
            throw ConfigError("[measure] convobs: '" + name + "' is not a measured series");
    }
    return p;
}

/// One convergence branch's outcome; `results.manifest["status"]` is "ok" or "error".
struct BranchResult {
    std::size_t strength = 0;
    std::filesystem::path dir;
    ResultsStore results;
    bool ok() const { return results.manifest.value("status", "") == "ok"; }
};

struct RunOutcome {
    std::vector<BranchResult> branches;
    nlohmann::json convergence;
    std::filesystem::path dir;
    bool all_ok() const {
        return std::all_of(branches.begin(), branches.end(), [](const auto& b) { return b.ok(); });
    }
};

namespace detail {

inline nlohmann::json chain_manifest(const ChainData& chains) {
    nlohmann::json j;
    j["source"] = chains.source;
    j["provenance"] = chains.chain.provenance;
    j["c0"] = chains.chain.c0;
    j["modes"] = chains.chain.size();
    j["quad_points"] = chains.quad_points;
    if (std::isfinite(chains.convergence)) j["coefficient_convergence"] = chains.convergence;
    if (chains.filled) {
        j["filled_provenance"] = chains.filled->provenance;
        j["filled_c0"] = chains.filled->c0;
    }
    return j;
}

/// Series compared across branches: convobs, or every observable series.
inline std::vector<std::string> compared_series(const SimulationConfig& c, const std::vector<BranchResult>& branches) {
    if (!c.convobs.empty()) return c.convobs;
    for (const auto& b : branches)
        if (b.ok()) {
            std::vector<std::string> names;
            for (const auto& n : b.results.names())
                if (n.rfind("rho", 0) != 0) names.push_back(n);
            return names;
        }
    return {};
}

inline const Series* find_series(const ResultsStore& r, const std::string& name, Series& scratch) {
    if (auto it = r.series.find(name); it != r.series.end()) return &it->second;
    const auto diag = r.diagnostics();
    if (auto it = diag.find(name); it != diag.end()) {
        scratch = it->second;
        return &scratch;
    }
    return nullptr;
}

}  // namespace detail

/// Max deviation of each compared series from the last successful branch.
inline nlohmann::json convergence_report(const SimulationConfig& c, const std::vector<BranchResult>& branches) {
    nlohmann::json rep;
    rep["parameter"] = c.strength_name();
    rep["values"] = nlohmann::json::array();
    rep["failed"] = nlohmann::json::array();
    for (const auto& b : branches) {
        rep["values"].push_back(b.strength);
        if (!b.ok()) rep["failed"].push_back(b.strength);
    }
    const BranchResult* ref = nullptr;
    for (const auto& b : branches)
        if (b.ok()) ref = &b;
    rep["observables"] = nlohmann::json::object();
    double overall = 0.0;
    if (ref) {
        rep["reference"] = ref->strength;
        for (const auto& name : detail::compared_series(c, branches)) {
            Series s_ref, s_b;
            const Series* a = detail::find_series(ref->results, name, s_ref);
            if (!a) continue;
            nlohmann::json per = nlohmann::json::object();
            double worst = 0.0;
            for (const auto& b : branches) {
                if (!b.ok()) continue;
                const Series* x = detail::find_series(b.results, name, s_b);
                if (!x) continue;
                double dev = 0.0;
                for (std::size_t k = 0; k < x->rows.size() && k < a->rows.size(); ++k)
                    for (std::size_t j = 0; j < x->rows[k].size(); ++j)
                        dev = std::max(dev, std::abs(x->rows[k][j] - a->rows[k][j]));
                per[std::to_string(b.strength)] = dev;
                worst = std::max(worst, dev);
            }
            rep["observables"][name] = {{"max_deviation", worst}, {"per_value", per}};
            overall = std::max(overall, worst);
        }
    }
    rep["max_deviation"] = overall;
    return rep;
}

struct RunOptions {
    /// Where per-step progress goes when log_interval > 0.
    std::ostream* log = &std::clog;
    /// Called inside each branch before evolving; an exception fails only that branch.
    std::function<void(std::size_t)> on_branch_start;
};

/// Runs one evolution per convergence value and persists each under `dir`.
inline RunOutcome run(const SimulationConfig& config, const std::filesystem::path& dir, const RunOptions& opts = {}) {
    namespace fs = std::filesystem;
    validate_config(config);
    if (config.N_auto) throw ConfigError("[bath] N: unresolved auto; call resolve_config first");
    RunOutcome out;
    out.dir = dir;
    fs::create_directories(dir);

    const ChainData chains = build_chains(config);
    // validates sites, operators and states before any branch starts
    const Problem problem = build_problem(config, chains);

    std::vector<std::size_t> values = config.convparams;
    const bool single = values.empty();
    if (single) values.push_back(config.method == "tdvp1" ? config.D : config.D_max);

    for (auto v : values) {
        BranchResult b;
        b.strength = v;
        b.dir = single ? dir : dir / (config.strength_name() + std::to_string(v));
        SimulationConfig branch_cfg = config;
        if (config.method == "tdvp1")
            branch_cfg.D = v;
        else
            branch_cfg.D_max = v;
        branch_cfg.convparams.clear();

        const auto start = std::chrono::steady_clock::now();
        nlohmann::json m;
        try {
            if (opts.on_branch_start) opts.on_branch_start(v);
            EvolveOptions eo;
            eo.krylov.dim = config.krylov_dim;
            eo.krylov.tol = config.krylov_tol;
            eo.reduced_density = problem.reduced_density;
            const auto steps = step_count(config.dt, config.t_final);
            if (config.log_interval > 0 && opts.log) {
                const std::string tag = "[" + config.name + " " + config.strength_name() + "=" + std::to_string(v) + "] ";
                eo.on_step = [&, tag](std::size_t k, double t, const MatrixProductState& s) {
                    if (k % config.log_interval == 0 || k == steps)
                        *opts.log << tag << "step " << k << "/" << steps << " t=" << round_trip(t)
                                  << " max bond " << s.max_bond() << '\n';
                };
            }
            b.results = evolve(problem.psi0, problem.H, config.dt, config.t_final, branch_cfg.evolution_method(),
                               problem.observables, problem.drive, eo);
            m = b.results.manifest;
            m["status"] = "ok";
            if (config.verify_chain_length) {
                const auto verdict = verify_chain_length(b.results, *config.verify_chain_length);
                nlohmann::json vj{{"threshold", *config.verify_chain_length},
                                  {"pass", verdict.pass},
                                  {"max_occupation", verdict.max_occupation}};
                if (verdict.first_violation) vj["first_violation"] = *verdict.first_violation;
                m["verify_chain_length"] = vj;
            }
        } catch (const std::exception& e) {
            b.results = ResultsStore{};
            m["status"] = "error";
            m["error"] = e.what();
        }
        m["name"] = config.name;
        m["units_note"] = config.units_note;
        m["code_version"] = code_version;
        m["config"] = config_json(branch_cfg);
        m["convergence_parameter"] = {{config.strength_name(), v}};
        if (config.info().bath != BathKind::none) m["chain"] = detail::chain_manifest(chains);
        m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        b.results.manifest = m;

        save_results(b.results, b.dir);
        if (config.info().bath != BathKind::none) {
            fs::create_directories(b.dir / "chain");
            write_chain_coefficients((b.dir / "chain" / "coeffs.txt").string(), chains.chain);
            if (chains.filled) write_chain_coefficients((b.dir / "chain" / "coeffs_filled.txt").string(), *chains.filled);
        }
        if (opts.log && config.log_interval > 0)
            *opts.log << "[" << config.name << "] " << config.strength_name() << "=" << v << " " << m["status"].get<std::string>()
                      << '\n';
        out.branches.push_back(std::move(b));
    }

    out.convergence = convergence_report(config, out.branches);
    std::ofstream rep(dir / "convergence.json");
    if (!rep) throw ResultsError("cannot write " + (dir / "convergence.json").string());
    rep << out.convergence.dump(2) << '\n';
    return out;
}

/// Directory name derived from the run label.
inline std::string run_slug(const std::string& name) {
    std::string s;
    for (char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.')
            s += ch;
        else if (!s.empty() && s.back() != '_')
            s += '_';
    }
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s.empty() ? "run" : s;
}

/// Explicit directory, else `<root>/<slug>` with root from the config, TTEDOPA_OUTPUT_ROOT, or "results".
inline std::filesystem::path results_dir(const SimulationConfig& c, const std::optional<std::filesystem::path>& explicit_dir) {
    if (explicit_dir) return *explicit_dir;
    std::filesystem::path root = "results";
    if (!c.output_root.empty())
        root = c.output_root;
    else if (const char* env = std::getenv("TTEDOPA_OUTPUT_ROOT"); env && *env)
        root = env;
    return root / run_slug(c.name);
}

}  // namespace ttedopa
