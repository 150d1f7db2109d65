#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tensor.hpp"

namespace ttedopa {

class ResultsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double.
inline std::string round_trip(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw ResultsError("cannot format number");
    return std::string(buf, end);
}

/**
 * One measured quantity over time. `columns` names the components; complex
 * series store each component as a value and write `<col>_re`, `<col>_im`.
 */
struct Series {
    std::vector<std::string> columns;
    bool is_complex = false;
    std::vector<std::vector<cplx>> rows;
};

/**
 * Everything a run produces. All series share `times`; `bond_dims` holds the
 * interior bond extents after each recorded step.
 */
struct ResultsStore {
    nlohmann::json manifest = nlohmann::json::object();
    std::vector<double> times;
    std::map<std::string, Series> series;
    std::vector<double> norm;
    std::vector<double> energy;
    std::vector<std::vector<std::size_t>> bond_dims;

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : series) out.push_back(k);
        return out;
    }

    const Series& get(const std::string& name) const {
        auto it = series.find(name);
        if (it == series.end()) {
            std::string avail;
            for (const auto& n : names()) avail += (avail.empty() ? "" : ", ") + n;
            throw ResultsError("unknown observable '" + name + "'; available: " + avail);
        }
        return it->second;
    }

    /// Real series that live beside the observables in the saved layout.
    std::map<std::string, Series> diagnostics() const {
        std::map<std::string, Series> d;
        auto scalar = [&](const std::string& name, const std::vector<double>& v) {
            if (v.empty()) return;
            Series s;
            s.columns = {name};
            for (double x : v) s.rows.push_back({cplx{x}});
            d[name] = std::move(s);
        };
        scalar("norm", norm);
        scalar("energy", energy);
        if (!bond_dims.empty()) {
            Series s;
            for (std::size_t b = 0; b < bond_dims.front().size(); ++b) s.columns.push_back("bond[" + std::to_string(b + 1) + "]");
            for (const auto& row : bond_dims) {
                std::vector<cplx> r;
                for (auto x : row) r.emplace_back(static_cast<double>(x));
                s.rows.push_back(std::move(r));
            }
            d["bond_dims"] = std::move(s);
        }
        return d;
    }
};

inline void write_series_csv(const std::filesystem::path& path, const std::vector<double>& times, const Series& s) {
    if (s.rows.size() != times.size())
        throw ResultsError("series written to " + path.string() + " has " + std::to_string(s.rows.size()) +
                           " rows for " + std::to_string(times.size()) + " times");
    std::ofstream out(path);
    if (!out) throw ResultsError("cannot write " + path.string());
    // pair names such as corr[1,2] contain commas and are quoted
    auto cell = [](const std::string& c) { return c.find(',') == std::string::npos ? c : '"' + c + '"'; };
    out << "time";
    for (const auto& c : s.columns) {
        if (s.is_complex)
            out << ',' << cell(c + "_re") << ',' << cell(c + "_im");
        else
            out << ',' << cell(c);
    }
    out << '\n';
    for (std::size_t k = 0; k < times.size(); ++k) {
        out << round_trip(times[k]);
        for (const auto& v : s.rows[k]) {
            out << ',' << round_trip(v.real());
            if (s.is_complex) out << ',' << round_trip(v.imag());
        }
        out << '\n';
    }
}

/// Reads a CSV written by write_series_csv; returns the times through `times`.
inline Series read_series_csv(const std::filesystem::path& path, std::vector<double>& times) {
    std::ifstream in(path);
    if (!in) throw ResultsError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ResultsError(path.string() + ": empty file");
    std::vector<std::string> header(1);
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"')
            quoted = !quoted;
        else if (ch == ',' && !quoted)
            header.emplace_back();
        else if (ch != '\r')
            header.back() += ch;
    }
    if (header.empty() || header[0] != "time") throw ResultsError(path.string() + ": first column must be 'time'");
    Series s;
    auto ends_with = [](const std::string& a, const std::string& b) {
        return a.size() >= b.size() && a.compare(a.size() - b.size(), b.size(), b) == 0;
    };
    s.is_complex = header.size() >= 3 && ends_with(header[1], "_re") && ends_with(header[2], "_im");
    for (std::size_t c = 1; c < header.size(); c += s.is_complex ? 2 : 1)
        s.columns.push_back(s.is_complex ? header[c].substr(0, header[c].size() - 3) : header[c]);
    times.clear();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            auto next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            double x = 0.0;
            auto [p, ec] = std::from_chars(line.data() + pos, line.data() + next, x);
            if (ec != std::errc() || p != line.data() + next)
                throw ResultsError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
            vals.push_back(x);
            pos = next + 1;
        }
        if (vals.size() != header.size())
            throw ResultsError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(header.size()) + " columns");
        times.push_back(vals[0]);
        std::vector<cplx> row;
        for (std::size_t c = 1; c < vals.size(); c += s.is_complex ? 2 : 1)
            row.emplace_back(vals[c], s.is_complex ? vals[c + 1] : 0.0);
        s.rows.push_back(std::move(row));
    }
    return s;
}

/// Layout: manifest.json, series/<name>.csv (observables, norm, energy, bond_dims).
inline void save_results(const ResultsStore& r, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "series");
    nlohmann::json m = r.manifest;
    m["series"] = r.names();
    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw ResultsError("cannot write " + (dir / "manifest.json").string());
        out << m.dump(2) << '\n';
    }
    for (const auto& [name, s] : r.series) write_series_csv(dir / "series" / (name + ".csv"), r.times, s);
    for (const auto& [name, s] : r.diagnostics()) write_series_csv(dir / "series" / (name + ".csv"), r.times, s);
}

inline ResultsStore load_results(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    ResultsStore r;
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ResultsError("no results at " + dir.string() + " (manifest.json missing)");
    try {
        r.manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ResultsError((dir / "manifest.json").string() + ": " + e.what());
    }
    std::vector<std::string> names;
    if (r.manifest.contains("series")) names = r.manifest["series"].get<std::vector<std::string>>();
    r.manifest.erase("series");
    for (const auto& name : names) r.series[name] = read_series_csv(dir / "series" / (name + ".csv"), r.times);

    std::vector<double> t;
    auto column = [&](const char* name) {
        std::vector<double> v;
        if (fs::exists(dir / "series" / (std::string(name) + ".csv")))
            for (const auto& row : read_series_csv(dir / "series" / (std::string(name) + ".csv"), t).rows)
                v.push_back(row.at(0).real());
        return v;
    };
    r.norm = column("norm");
    r.energy = column("energy");
    if (r.times.empty()) r.times = t;
    if (fs::exists(dir / "series" / "bond_dims.csv"))
        for (const auto& row : read_series_csv(dir / "series" / "bond_dims.csv", t).rows) {
            std::vector<std::size_t> b;
            for (const auto& x : row) b.push_back(static_cast<std::size_t>(x.real()));
            r.bond_dims.push_back(std::move(b));
        }
    return r;
}

/// Writes <out_dir>/<name>.csv for one observable or every one ("all").
inline std::vector<std::filesystem::path> export_results(const std::filesystem::path& results_dir, const std::string& what,
                                                         const std::filesystem::path& out_dir) {
    const auto r = load_results(results_dir);
    std::vector<std::string> targets;
    if (what == "all") {
        targets = r.names();
        for (const auto& [name, s] : r.diagnostics()) targets.push_back(name);
    } else {
        targets = {what};
    }
    const auto diag = r.diagnostics();
    std::vector<std::filesystem::path> written;
    std::filesystem::create_directories(out_dir);
    for (const auto& name : targets) {
        auto d = diag.find(name);
        const Series& s = d != diag.end() ? d->second : r.get(name);
        auto path = out_dir / (name + ".csv");
        write_series_csv(path, r.times, s);
        written.push_back(path);
    }
    return written;
}

/// Outcome of the terminal-site occupation check.
struct ChainLengthVerdict {
    bool pass = true;
    double max_occupation = 0.0;
    std::optional<double> first_violation;
};

/// Checks the last column of the `occ` series (the terminal chain mode) against threshold.
inline ChainLengthVerdict verify_chain_length(const ResultsStore& r, double threshold) {
    auto it = r.series.find("occ");
    if (it == r.series.end() || it->second.columns.empty())
        throw ResultsError("verify_chain_length: results carry no chain occupation series 'occ'");
    ChainLengthVerdict v;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        const double occ = it->second.rows[k].back().real();
        v.max_occupation = std::max(v.max_occupation, occ);
        if (occ > threshold && v.pass) {
            v.pass = false;
            v.first_violation = r.times[k];
        }
    }
    return v;
}

}  // namespace ttedopa
