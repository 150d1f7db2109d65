#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "chain_mapping.hpp"
#include "results.hpp"
#include "tdvp.hpp"

namespace ttedopa {

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Kind of environment a model carries.
enum class BathKind { none, boson, fermion };

/// A catalog entry: numeric parameters with their defaults, in file order.
struct ModelInfo {
    std::string name;
    BathKind bath;
    std::vector<std::pair<std::string, double>> params;
};

inline const std::vector<ModelInfo>& model_catalog() {
    static const std::vector<ModelInfo> catalog{
        {"puredephasing", BathKind::boson, {{"delta_e", 0.0}}},
        {"spinboson", BathKind::boson, {{"omega0", 0.0}, {"delta", 0.0}}},
        {"protontransfer",
         BathKind::boson,
         {{"omega0e", 0.0},
          {"omega0k", 0.0},
          {"delta", 0.0},
          {"omega_rc", 1.0},
          {"g_e", 0.0},
          {"g_k", 0.0},
          {"lambda_reorg", 0.0},
          {"d_rc", 10.0}}},
        {"tightbinding", BathKind::fermion, {{"eps_d", 0.0}}},
        {"xyz", BathKind::none, {{"length", 2.0}, {"Jx", 0.0}, {"Jy", 0.0}, {"Jz", 0.0}, {"hx", 0.0}, {"hz", 0.0}}},
        {"hubbard", BathKind::none, {{"length", 2.0}, {"t", 1.0}, {"U", 0.0}}},
    };
    return catalog;
}

inline const ModelInfo& model_info(const std::string& name) {
    for (const auto& m : model_catalog())
        if (m.name == name) return m;
    std::string names;
    for (const auto& m : model_catalog()) names += (names.empty() ? "" : ", ") + m.name;
    throw ConfigError("[model] kind: unknown model '" + name + "'; catalog: " + names);
}

/// `name = op @ sites` (one-site) or `name = op1 op2 @ sites` (two-site).
struct ObservableSpec {
    std::string name;
    std::vector<std::string> ops;
    std::string sites;

    std::string text() const {
        std::string s;
        for (const auto& o : ops) s += (s.empty() ? "" : " ") + o;
        return s + " @ " + sites;
    }
    bool operator==(const ObservableSpec&) const = default;
};

struct DriveSpec {
    std::size_t site = 1;  // 1-based
    std::string op = "sx";
    double amplitude = 0.0;
    double omega = 0.0;
    bool operator==(const DriveSpec&) const = default;
};

struct SimulationConfig {
    std::string name = "run";
    std::string units_note = "dimensionless units";
    std::uint64_t seed = 0;

    std::string model = "puredephasing";
    std::map<std::string, double> params;

    // bosonic bath
    std::string sd = "ohmic";  // ohmic | file
    double alpha = 0.1, s = 1.0, omega_c = 1.0;
    std::string sd_file;
    std::string coeffs_file;
    std::optional<double> beta;  // empty = zero temperature
    bool N_auto = false;
    std::size_t N = 0;
    std::size_t d = 6;
    std::size_t quad_points = 0;
    // fermionic leads
    double half_width = 1.0, coupling = 0.5, mu = 0.0;

    // evolution
    std::string method = "tdvp1";
    double dt = 0.05, t_final = 1.0;
    std::size_t D = 2;
    double trunc_tol = 1e-10;
    std::size_t D_max = 64;
    double growth_tol = 1e-6;
    std::vector<std::size_t> convparams;
    std::size_t krylov_dim = 30;
    double krylov_tol = 1e-12;

    std::string initial_system;  // empty = model default
    std::size_t initial_rc = 0;
    std::string initial_state;  // lattice models

    std::optional<DriveSpec> drive;

    std::vector<ObservableSpec> observables;
    std::vector<std::size_t> reduced_density;  // 1-based
    std::vector<std::string> convobs;
    bool chain_occupation = true;
    bool chain_correlations = false;

    std::string output_root;
    std::optional<double> verify_chain_length;
    std::size_t log_interval = 0;

    bool operator==(const SimulationConfig&) const = default;

    const ModelInfo& info() const { return model_info(model); }
    double param(const std::string& key) const { return params.at(key); }

    /// Base method; `strength` overrides D (tdvp1) or D_max (tdvp2, dtdvp).
    EvolutionMethod evolution_method(std::optional<std::size_t> strength = std::nullopt) const {
        if (method == "tdvp1") return Tdvp1{strength.value_or(D)};
        if (method == "tdvp2") return Tdvp2{trunc_tol, strength.value_or(D_max)};
        return Dtdvp{growth_tol, strength.value_or(D_max)};
    }
    std::string strength_name() const { return method == "tdvp1" ? "D" : "D_max"; }

    TemperatureSpec temperature() const { return beta ? TemperatureSpec::inverse(*beta) : TemperatureSpec::zero(); }
};

namespace detail {

inline std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
}

inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& where, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(where + ": '" + v + "' is not a number");
    return x;
}

inline std::size_t parse_size(const std::string& where, const std::string& v) {
    std::size_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(where + ": '" + v + "' is not a non-negative integer");
    return x;
}

inline bool parse_bool(const std::string& where, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigError(where + ": expected true or false, got '" + v + "'");
}

inline std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (auto x : v) s += (s.empty() ? "" : ", ") + std::to_string(x);
    return s;
}

inline std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
    return s;
}

/// Reads one section, rejecting keys outside `allowed`.
class Section {
  public:
    Section(const boost::property_tree::ptree& root, std::string name, std::vector<std::string> allowed)
        : name_(std::move(name)) {
        if (auto child = root.get_child_optional(name_)) tree_ = *child;
        for (const auto& [k, v] : tree_) {
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw ConfigError("[" + name_ + "] " + k + ": unknown key; allowed: " + join(allowed));
        }
    }
    bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }
    std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }
    std::optional<std::string> text(const std::string& key) const {
        auto v = tree_.get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return trim(*v);
    }
    void read(const std::string& key, std::string& out) const {
        if (auto v = text(key)) out = *v;
    }
    void read(const std::string& key, double& out) const {
        if (auto v = text(key)) out = parse_double(where(key), *v);
    }
    void read(const std::string& key, std::size_t& out) const {
        if (auto v = text(key)) out = parse_size(where(key), *v);
    }
    void read(const std::string& key, bool& out) const {
        if (auto v = text(key)) out = parse_bool(where(key), *v);
    }
    const boost::property_tree::ptree& tree() const { return tree_; }

  private:
    std::string name_;
    boost::property_tree::ptree tree_;
};

}  // namespace detail

/// Checks ranges and cross-field constraints; messages name `[section] key`.
inline void validate_config(const SimulationConfig& c) {
    const auto& info = c.info();
    for (const auto& [k, v] : c.params)
        if (!std::isfinite(v)) throw ConfigError("[model] " + k + ": must be finite");
    if (c.method != "tdvp1" && c.method != "tdvp2" && c.method != "dtdvp")
        throw ConfigError("[evolution] method: expected tdvp1, tdvp2 or dtdvp, got '" + c.method + "'");
    try {
        validate_method(c.evolution_method());
        for (auto p : c.convparams) validate_method(c.evolution_method(p));
        step_count(c.dt, c.t_final);
    } catch (const EvolutionError& e) {
        throw ConfigError(std::string("[evolution] ") + e.what());
    }
    if (c.krylov_dim < 2) throw ConfigError("[evolution] krylov_dim: must be >= 2");
    if (!(c.krylov_tol > 0.0)) throw ConfigError("[evolution] krylov_tol: must be > 0");
    if (info.bath != BathKind::none) {
        if (c.N == 0) throw ConfigError("[bath] N: must be >= 1 or auto");
        if (c.beta && !(*c.beta > 0.0)) throw ConfigError("[bath] beta: must be > 0 or inf");
        if (c.sd != "ohmic" && c.sd != "file") throw ConfigError("[bath] sd: expected ohmic or file, got '" + c.sd + "'");
        if (c.sd == "file" && c.sd_file.empty() && c.coeffs_file.empty())
            throw ConfigError("[bath] sd_file: required when sd = file");
        if (c.sd == "ohmic" && (!(c.omega_c > 0.0) || !(c.s > -1.0) || !(c.alpha >= 0.0)))
            throw ConfigError("[bath] ohmic needs omega_c > 0, s > -1, alpha >= 0");
    }
    if (info.bath == BathKind::boson && c.d < 2) throw ConfigError("[bath] d: must be >= 2");
    if (info.bath == BathKind::fermion && (!(c.half_width > 0.0) || !(c.coupling > 0.0)))
        throw ConfigError("[bath] half_width and coupling must be > 0");
    if (c.model == "protontransfer" && c.param("d_rc") < 2) throw ConfigError("[model] d_rc: must be >= 2");
    if (info.bath == BathKind::none && c.param("length") < 1) throw ConfigError("[model] length: must be >= 1");
    for (const auto& o : c.observables) {
        if (o.ops.empty() || o.ops.size() > 2)
            throw ConfigError("[observables] " + o.name + ": expected 'op @ sites' or 'op1 op2 @ sites'");
        if (o.name == "occ" || o.name == "corr" || o.name.rfind("rho", 0) == 0)
            throw ConfigError("[observables] " + o.name + ": name is reserved for automatic series");
    }
    if (c.verify_chain_length && !(*c.verify_chain_length > 0.0))
        throw ConfigError("[output] verify_chain_length: threshold must be > 0");
    if (c.verify_chain_length && (info.bath != BathKind::boson || !c.chain_occupation))
        throw ConfigError("[output] verify_chain_length: needs a bosonic chain with chain_occupation = true");
}

/// Parses the INI tree into a config, filling defaults. N stays unresolved when "auto".
inline SimulationConfig config_from_tree(const boost::property_tree::ptree& root) {
    using detail::Section;
    SimulationConfig c;
    const std::vector<std::string> sections{"model", "bath", "evolution", "initial", "drive", "observables", "measure", "output"};
    for (const auto& [k, v] : root) {
        if (!v.empty()) {
            if (std::find(sections.begin(), sections.end(), k) == sections.end())
                throw ConfigError("[" + k + "]: unknown section; allowed: " + detail::join(sections));
        } else if (k != "name" && k != "units_note" && k != "seed") {
            throw ConfigError(k + ": unknown top-level key; allowed: name, units_note, seed");
        }
    }
    if (auto v = root.get_optional<std::string>("name")) c.name = detail::trim(*v);
    if (auto v = root.get_optional<std::string>("units_note")) c.units_note = detail::trim(*v);
    if (auto v = root.get_optional<std::string>("seed")) c.seed = detail::parse_size("seed", detail::trim(*v));

    {
        auto kind = root.get_optional<std::string>("model.kind");
        if (!kind) throw ConfigError("[model] kind: missing");
        c.model = detail::trim(*kind);
        const auto& info = model_info(c.model);
        std::vector<std::string> allowed{"kind"};
        for (const auto& [k, v] : info.params) allowed.push_back(k);
        Section m(root, "model", allowed);
        for (const auto& [k, def] : info.params) {
            double v = def;
            m.read(k, v);
            c.params[k] = v;
        }
    }
    {
        Section b(root, "bath",
                  {"sd", "alpha", "s", "omega_c", "sd_file", "coeffs_file", "beta", "N", "d", "quad_points", "half_width",
                   "coupling", "mu"});
        b.read("sd", c.sd);
        b.read("alpha", c.alpha);
        b.read("s", c.s);
        b.read("omega_c", c.omega_c);
        b.read("sd_file", c.sd_file);
        b.read("coeffs_file", c.coeffs_file);
        if (auto v = b.text("beta"); v && *v != "inf") c.beta = detail::parse_double(b.where("beta"), *v);
        if (auto v = b.text("N")) {
            if (*v == "auto")
                c.N_auto = true;
            else
                c.N = detail::parse_size(b.where("N"), *v);
        }
        b.read("d", c.d);
        b.read("quad_points", c.quad_points);
        b.read("half_width", c.half_width);
        b.read("coupling", c.coupling);
        b.read("mu", c.mu);
    }
    {
        Section e(root, "evolution",
                  {"method", "dt", "t_final", "D", "trunc_tol", "D_max", "growth_tol", "convparams", "krylov_dim",
                   "krylov_tol"});
        e.read("method", c.method);
        if (!e.has("dt")) throw ConfigError("[evolution] dt: missing");
        if (!e.has("t_final")) throw ConfigError("[evolution] t_final: missing");
        e.read("dt", c.dt);
        e.read("t_final", c.t_final);
        e.read("D", c.D);
        e.read("trunc_tol", c.trunc_tol);
        e.read("D_max", c.D_max);
        e.read("growth_tol", c.growth_tol);
        if (auto v = e.text("convparams"))
            for (const auto& item : detail::split_list(*v))
                c.convparams.push_back(detail::parse_size(e.where("convparams"), item));
        e.read("krylov_dim", c.krylov_dim);
        e.read("krylov_tol", c.krylov_tol);
    }
    {
        Section i(root, "initial", {"system", "rc", "state"});
        i.read("system", c.initial_system);
        i.read("rc", c.initial_rc);
        i.read("state", c.initial_state);
    }
    if (root.get_child_optional("drive")) {
        Section dr(root, "drive", {"site", "operator", "amplitude", "omega"});
        DriveSpec d;
        dr.read("site", d.site);
        dr.read("operator", d.op);
        dr.read("amplitude", d.amplitude);
        dr.read("omega", d.omega);
        c.drive = d;
    }
    if (auto obs = root.get_child_optional("observables")) {
        for (const auto& [name, v] : *obs) {
            const auto text = detail::trim(v.data());
            const auto at = text.find('@');
            if (at == std::string::npos)
                throw ConfigError("[observables] " + name + ": expected 'op @ sites', got '" + text + "'");
            ObservableSpec o;
            o.name = name;
            std::istringstream ops(text.substr(0, at));
            for (std::string op; ops >> op;) o.ops.push_back(op);
            o.sites = detail::trim(text.substr(at + 1));
            c.observables.push_back(std::move(o));
        }
    }
    {
        Section m(root, "measure", {"reduced_density", "convobs", "chain_occupation", "chain_correlations"});
        if (auto v = m.text("reduced_density"))
            for (const auto& item : detail::split_list(*v))
                c.reduced_density.push_back(detail::parse_size(m.where("reduced_density"), item));
        if (auto v = m.text("convobs")) c.convobs = detail::split_list(*v);
        m.read("chain_occupation", c.chain_occupation);
        m.read("chain_correlations", c.chain_correlations);
    }
    {
        Section o(root, "output", {"root", "verify_chain_length", "log_interval"});
        o.read("root", c.output_root);
        if (auto v = o.text("verify_chain_length")) c.verify_chain_length = detail::parse_double(o.where("verify_chain_length"), *v);
        o.read("log_interval", c.log_interval);
    }
    return c;
}

/// Upper edge of the bath spectrum, used by the chain-length rule of thumb.
inline double bath_cutoff(const SimulationConfig& c) {
    if (c.info().bath == BathKind::fermion) return c.half_width;
    if (c.sd == "ohmic") return c.omega_c;
    return load_spectral_density(c.sd_file).support().second;
}

/// Fills N = auto from the rule of thumb and the model's default initial state.
inline SimulationConfig resolve_config(SimulationConfig c) {
    const auto bath = c.info().bath;
    if (bath == BathKind::boson && c.initial_system.empty()) c.initial_system = "up";
    if (bath == BathKind::fermion && c.initial_system.empty()) c.initial_system = "empty";
    if (bath == BathKind::none && c.initial_state.empty()) c.initial_state = "neel";
    if (bath == BathKind::none) {
        c.N_auto = false;
        c.N = 0;
        return c;
    }
    if (c.N_auto) {
        if (c.sd == "file" && c.sd_file.empty())
            throw ConfigError("[bath] N: auto needs a spectral density (sd_file) to read the cutoff");
        try {
            c.N = find_chain_length(c.t_final, bath_cutoff(c), c.temperature());
        } catch (const ChainError& e) {
            throw ConfigError(std::string("[bath] N: ") + e.what());
        }
        c.N_auto = false;
    }
    return c;
}

inline SimulationConfig load_config(const std::filesystem::path& path) {
    boost::property_tree::ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(path.string(), root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        if (e.line() == 0) throw ConfigError("cannot read config " + path.string() + ": " + e.message());
        throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    try {
        auto c = config_from_tree(root);
        // data files are looked up next to the config
        const auto base = std::filesystem::absolute(path).parent_path();
        for (auto* f : {&c.sd_file, &c.coeffs_file})
            if (!f->empty() && std::filesystem::path(*f).is_relative()) *f = (base / *f).lexically_normal().string();
        c = resolve_config(std::move(c));
        validate_config(c);
        return c;
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const ChainError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline boost::property_tree::ptree config_to_tree(const SimulationConfig& c) {
    boost::property_tree::ptree t;
    const auto num = [](double x) { return std::isinf(x) ? std::string("inf") : round_trip(x); };
    t.put("name", c.name);
    t.put("units_note", c.units_note);
    t.put("seed", std::to_string(c.seed));

    t.put("model.kind", c.model);
    for (const auto& [k, def] : c.info().params) t.put("model." + k, num(c.params.at(k)));

    if (c.info().bath != BathKind::none) {
        auto& b = t.put_child("bath", {});
        if (c.info().bath == BathKind::boson) {
            b.put("sd", c.sd);
            if (c.sd == "ohmic") {
                b.put("alpha", num(c.alpha));
                b.put("s", num(c.s));
                b.put("omega_c", num(c.omega_c));
            } else if (!c.sd_file.empty()) {
                b.put("sd_file", c.sd_file);
            }
            if (!c.coeffs_file.empty()) b.put("coeffs_file", c.coeffs_file);
            b.put("d", std::to_string(c.d));
            b.put("quad_points", std::to_string(c.quad_points));
        } else {
            b.put("half_width", num(c.half_width));
            b.put("coupling", num(c.coupling));
            b.put("mu", num(c.mu));
        }
        b.put("beta", c.beta ? num(*c.beta) : std::string("inf"));
        b.put("N", c.N_auto ? std::string("auto") : std::to_string(c.N));
    }

    auto& e = t.put_child("evolution", {});
    e.put("method", c.method);
    e.put("dt", num(c.dt));
    e.put("t_final", num(c.t_final));
    if (c.method == "tdvp1") e.put("D", std::to_string(c.D));
    if (c.method == "tdvp2") e.put("trunc_tol", num(c.trunc_tol));
    if (c.method == "dtdvp") e.put("growth_tol", num(c.growth_tol));
    if (c.method != "tdvp1") e.put("D_max", std::to_string(c.D_max));
    if (!c.convparams.empty()) e.put("convparams", detail::join_sizes(c.convparams));
    e.put("krylov_dim", std::to_string(c.krylov_dim));
    e.put("krylov_tol", num(c.krylov_tol));

    auto& i = t.put_child("initial", {});
    if (!c.initial_system.empty()) i.put("system", c.initial_system);
    if (c.model == "protontransfer") i.put("rc", std::to_string(c.initial_rc));
    if (!c.initial_state.empty()) i.put("state", c.initial_state);

    if (c.drive) {
        auto& d = t.put_child("drive", {});
        d.put("site", std::to_string(c.drive->site));
        d.put("operator", c.drive->op);
        d.put("amplitude", num(c.drive->amplitude));
        d.put("omega", num(c.drive->omega));
    }
    if (!c.observables.empty()) {
        auto& o = t.put_child("observables", {});
        // push_back keeps names containing dots intact
        for (const auto& ob : c.observables) o.push_back({ob.name, boost::property_tree::ptree(ob.text())});
    }
    auto& m = t.put_child("measure", {});
    if (!c.reduced_density.empty()) m.put("reduced_density", detail::join_sizes(c.reduced_density));
    if (!c.convobs.empty()) m.put("convobs", detail::join(c.convobs));
    m.put("chain_occupation", c.chain_occupation ? "true" : "false");
    m.put("chain_correlations", c.chain_correlations ? "true" : "false");

    auto& out = t.put_child("output", {});
    if (!c.output_root.empty()) out.put("root", c.output_root);
    if (c.verify_chain_length) out.put("verify_chain_length", num(*c.verify_chain_length));
    out.put("log_interval", std::to_string(c.log_interval));
    return t;
}

inline std::string config_text(const SimulationConfig& c) {
    std::ostringstream os;
    boost::property_tree::ini_parser::write_ini(os, config_to_tree(c));
    return os.str();
}

inline void save_config(const SimulationConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config " + path.string());
    out << config_text(c);
}

/// Flat JSON view of the resolved config for the manifest.
inline nlohmann::json config_json(const SimulationConfig& c) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : config_to_tree(c)) {
        if (v.empty()) {
            j[k] = v.data();
            continue;
        }
        auto& sec = j[k];
        for (const auto& [kk, vv] : v) sec[kk] = vv.data();
    }
    return j;
}

/// Inverse of config_json: a manifest's "config" block is enough to re-run.
inline SimulationConfig config_from_json(const nlohmann::json& j) {
    boost::property_tree::ptree root;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_object()) {
            root.put(k, v.get<std::string>());
            continue;
        }
        boost::property_tree::ptree sec;
        for (const auto& [kk, vv] : v.items()) sec.push_back({kk, boost::property_tree::ptree(vv.get<std::string>())});
        root.push_back({k, sec});
    }
    auto c = resolve_config(config_from_tree(root));
    validate_config(c);
    return c;
}

}  // namespace ttedopa
