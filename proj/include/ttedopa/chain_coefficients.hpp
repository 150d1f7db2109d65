#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace ttedopa {

class ChainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Tight-binding chain produced by the orthogonal-polynomial mapping:
 * on-site energies eps[0..N-1], hoppings t[0..N-2] between modes n and n+1,
 * and the coupling c0 of the system to mode 0. `t_tail` is the hopping from
 * mode N-1 to the first discarded mode (kept for the coefficient file).
 */
struct ChainCoefficients {
    std::vector<double> eps;
    std::vector<double> t;
    double c0 = 0.0;
    double t_tail = 0.0;
    std::string provenance;

    std::size_t size() const { return eps.size(); }

    void validate() const {
        if (eps.empty()) throw ChainError("chain coefficients: empty chain");
        if (t.size() + 1 != eps.size())
            throw ChainError("chain coefficients: " + std::to_string(eps.size()) + " energies need " +
                             std::to_string(eps.size() - 1) + " hoppings, got " + std::to_string(t.size()));
        for (std::size_t n = 0; n < t.size(); ++n)
            if (!(t[n] > 0.0) || !std::isfinite(t[n]))
                throw ChainError("chain coefficients: hopping t_" + std::to_string(n) + " is not positive");
        for (double e : eps)
            if (!std::isfinite(e)) throw ChainError("chain coefficients: non-finite on-site energy");
        if (!(c0 >= 0.0) || !std::isfinite(c0)) throw ChainError("chain coefficients: invalid c0");
    }

    /// First n modes of this chain.
    ChainCoefficients truncated(std::size_t n) const {
        if (n == 0 || n > eps.size())
            throw ChainError("chain coefficients: cannot truncate " + std::to_string(eps.size()) + " modes to " +
                             std::to_string(n));
        ChainCoefficients out = *this;
        out.eps.resize(n);
        out.t.resize(n - 1);
        out.t_tail = n < eps.size() ? t[n - 1] : t_tail;
        return out;
    }
};

inline std::string format_number(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

/// Header `# c0 = <value> provenance = <text>`, then rows `n eps_n t_n`
/// where the last row's hopping is `t_tail`.
inline void write_chain_coefficients(const std::string& path, const ChainCoefficients& c) {
    std::ofstream out(path);
    if (!out) throw ChainError("cannot write chain coefficients to " + path);
    out << "# c0 = " << format_number(c.c0) << " provenance = " << c.provenance << '\n';
    for (std::size_t n = 0; n < c.eps.size(); ++n) {
        const double tn = n < c.t.size() ? c.t[n] : c.t_tail;
        out << n << ' ' << format_number(c.eps[n]) << ' ' << format_number(tn) << '\n';
    }
}

inline ChainCoefficients read_chain_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ChainError("cannot read chain coefficients from " + path);
    ChainCoefficients c;
    std::string line;
    bool have_c0 = false;
    std::vector<double> hops;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto pos = line.find("c0 =");
            if (pos != std::string::npos) {
                std::istringstream hs(line.substr(pos + 4));
                if (!(hs >> c.c0)) throw ChainError(path + ":" + std::to_string(lineno) + ": malformed c0");
                have_c0 = true;
                auto ppos = line.find("provenance =");
                if (ppos != std::string::npos) {
                    c.provenance = line.substr(ppos + 12);
                    c.provenance.erase(0, c.provenance.find_first_not_of(' '));
                }
            }
            continue;
        }
        std::istringstream ls(line);
        std::size_t n = 0;
        double e = 0.0, tn = 0.0;
        if (!(ls >> n >> e >> tn) || n != c.eps.size())
            throw ChainError(path + ":" + std::to_string(lineno) + ": expected row '" + std::to_string(c.eps.size()) +
                             " eps t'");
        c.eps.push_back(e);
        hops.push_back(tn);
    }
    if (!have_c0) throw ChainError(path + ": missing '# c0 = ...' header");
    if (c.eps.empty()) throw ChainError(path + ": no coefficient rows");
    c.t.assign(hops.begin(), hops.end() - 1);
    c.t_tail = hops.back();
    c.validate();
    return c;
}

}  // namespace ttedopa
