#pragma once

#include <vector>

#include "mps.hpp"
#include "operators.hpp"

namespace ttedopa {

class MpoError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Chain of rank-4 site tensors with axes (left bond, right bond, out, in).
class MatrixProductOperator {
  public:
    MatrixProductOperator() = default;
    explicit MatrixProductOperator(std::vector<DenseTensor> sites) : sites_(std::move(sites)) { validate(); }

    std::size_t length() const { return sites_.size(); }
    const DenseTensor& site(std::size_t n) const { return sites_.at(n); }
    const std::vector<DenseTensor>& sites() const { return sites_; }

    std::vector<std::size_t> local_dims() const {
        std::vector<std::size_t> d;
        for (const auto& w : sites_) d.push_back(w.dim(2));
        return d;
    }

    std::vector<std::size_t> bond_dims() const {
        std::vector<std::size_t> b;
        for (std::size_t n = 0; n + 1 < sites_.size(); ++n) b.push_back(sites_[n].dim(1));
        return b;
    }

    std::size_t max_bond() const {
        std::size_t m = 1;
        for (auto b : bond_dims()) m = std::max(m, b);
        return m;
    }

    /// Adds a local operator to the on-site (top-right) slot of site n.
    MatrixProductOperator with_onsite_term(std::size_t n, const Operator& op) const {
        MatrixProductOperator out = *this;
        auto& w = out.sites_.at(n);
        const std::size_t d = w.dim(2);
        if (static_cast<std::size_t>(op.rows()) != d || op.rows() != op.cols())
            throw MpoError("with_onsite_term: operator does not match local dimension of site " + std::to_string(n + 1));
        const std::size_t col = w.dim(1) - 1;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                w({0, col, i, j}) += op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return out;
    }

  private:
    void validate() const {
        if (sites_.empty()) throw MpoError("MatrixProductOperator: no sites");
        for (std::size_t n = 0; n < sites_.size(); ++n) {
            const auto& w = sites_[n];
            if (w.rank() != 4 || w.dim(2) != w.dim(3))
                throw MpoError("MatrixProductOperator: site " + std::to_string(n) + " must be (wl, wr, d, d)");
            if (n + 1 < sites_.size() && w.dim(1) != sites_[n + 1].dim(0))
                throw MpoError("MatrixProductOperator: bond " + std::to_string(n) + " extents differ");
        }
        if (sites_.front().dim(0) != 1 || sites_.back().dim(1) != 1)
            throw MpoError("MatrixProductOperator: boundary bonds must have extent 1");
    }

    std::vector<DenseTensor> sites_;
};

/**
 * Operator blocks of one site in the upper-block-triangular recurrence
 *
 *     W = | 1  C  D |
 *         | 0  A  B |
 *         | 0  0  1 |
 *
 * `B` lists the operators closing the channels arriving from the left bond,
 * `C` opens channels toward the right, `A` (rows = B.size(), cols = C.size())
 * carries channels across the site, `D` is the on-site term. An empty `A`
 * means zero.
 */
struct BlockSpec {
    std::size_t d = 0;
    Operator D;
    std::vector<Operator> B;
    std::vector<Operator> C;
    std::vector<std::vector<Operator>> A;
};

inline MatrixProductOperator mpo_from_blocks(const std::vector<BlockSpec>& blocks) {
    const std::size_t n = blocks.size();
    if (n == 0) throw MpoError("mpo_from_blocks: no sites");

    for (std::size_t k = 0; k < n; ++k) {
        const auto& b = blocks[k];
        auto site = std::to_string(k + 1);
        auto check = [&](const Operator& op, const char* what) {
            if (static_cast<std::size_t>(op.rows()) != b.d || static_cast<std::size_t>(op.cols()) != b.d)
                throw MpoError("mpo_from_blocks: block " + std::string(what) + " at site " + site + " is not " +
                               std::to_string(b.d) + "x" + std::to_string(b.d));
        };
        if (b.d == 0) throw MpoError("mpo_from_blocks: site " + site + " has zero local dimension");
        check(b.D, "D");
        for (const auto& op : b.B) check(op, "B");
        for (const auto& op : b.C) check(op, "C");
        if (!b.A.empty()) {
            if (b.A.size() != b.B.size())
                throw MpoError("mpo_from_blocks: A at site " + site + " has " + std::to_string(b.A.size()) +
                               " rows but B has " + std::to_string(b.B.size()));
            for (const auto& row : b.A) {
                if (row.size() != b.C.size())
                    throw MpoError("mpo_from_blocks: A at site " + site + " row length differs from C");
                for (const auto& op : row) check(op, "A");
            }
        }
        if (k == 0 && !b.B.empty()) throw MpoError("mpo_from_blocks: first site cannot close incoming channels (B)");
        if (k + 1 == n && !b.C.empty()) throw MpoError("mpo_from_blocks: last site cannot open channels (C)");
        if (k + 1 < n && b.C.size() != blocks[k + 1].B.size())
            throw MpoError("mpo_from_blocks: bond " + std::to_string(k + 1) + " opens " + std::to_string(b.C.size()) +
                           " channels but site " + std::to_string(k + 2) + " closes " +
                           std::to_string(blocks[k + 1].B.size()));
    }

    std::vector<DenseTensor> sites;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& b = blocks[k];
        const std::size_t in = b.B.size(), out = b.C.size();
        const std::size_t full_l = in + 2, full_r = out + 2;
        DenseTensor w({full_l, full_r, b.d, b.d});
        auto put = [&](std::size_t r, std::size_t c, const Operator& op) {
            for (std::size_t i = 0; i < b.d; ++i)
                for (std::size_t j = 0; j < b.d; ++j)
                    w({r, c, i, j}) += op(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        };
        const Operator id = ops::identity(b.d);
        put(0, 0, id);
        put(full_l - 1, full_r - 1, id);
        put(0, full_r - 1, b.D);
        for (std::size_t c = 0; c < out; ++c) put(0, 1 + c, b.C[c]);
        for (std::size_t r = 0; r < in; ++r) put(1 + r, full_r - 1, b.B[r]);
        for (std::size_t r = 0; r < b.A.size(); ++r)
            for (std::size_t c = 0; c < b.A[r].size(); ++c) put(1 + r, 1 + c, b.A[r][c]);

        // Row tensor at the left edge, column tensor at the right edge.
        std::size_t row_lo = 0, row_hi = full_l, col_lo = 0, col_hi = full_r;
        if (k == 0) row_hi = 1;
        if (k + 1 == n) col_lo = full_r - 1;
        DenseTensor slice({row_hi - row_lo, col_hi - col_lo, b.d, b.d});
        for (std::size_t r = row_lo; r < row_hi; ++r)
            for (std::size_t c = col_lo; c < col_hi; ++c)
                for (std::size_t i = 0; i < b.d; ++i)
                    for (std::size_t j = 0; j < b.d; ++j) slice({r - row_lo, c - col_lo, i, j}) = w({r, c, i, j});
        sites.push_back(std::move(slice));
    }
    return MatrixProductOperator(std::move(sites));
}

inline constexpr std::size_t dense_operator_guard = 4096;

/// Full contraction into a dense matrix (row index = output multi-index, site 1 slowest).
inline Operator mpo_to_dense(const MatrixProductOperator& mpo) {
    std::size_t total = 1;
    for (auto d : mpo.local_dims()) {
        total *= d;
        if (total > dense_operator_guard) throw MpoError("mpo_to_dense: dimension exceeds the 4096 guard");
    }
    // acc axes: (I, J, w)
    DenseTensor acc({1, 1, 1}, {cplx{1.0}});
    for (const auto& w : mpo.sites()) {
        auto t = contract(acc, w, {{2, 0}});  // (I, J, w', i, j)
        t = t.permuted(std::vector<std::size_t>{0, 3, 1, 4, 2});
        const auto& td = t.dims();
        acc = t.reshaped({td[0] * td[1], td[2] * td[3], td[4]});
    }
    const auto rows = static_cast<Eigen::Index>(acc.dim(0));
    Operator out(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < rows; ++j)
            out(i, j) = acc({static_cast<std::size_t>(i), static_cast<std::size_t>(j), 0});
    return out;
}

/// <psi|H|psi>, unnormalized.
inline cplx mpo_expectation(const MatrixProductState& psi, const MatrixProductOperator& mpo) {
    if (psi.local_dims() != mpo.local_dims()) throw MpoError("mpo_expectation: local dimensions of state and MPO differ");
    DenseTensor env({1, 1, 1}, {cplx{1.0}});  // (bra, w, ket)
    for (std::size_t n = 0; n < psi.length(); ++n) {
        const auto& a = psi.site(n);
        auto t = contract(env, a, {{2, 0}});                     // (bra, w, j, ket')
        t = contract(t, mpo.site(n), {{1, 0}, {2, 3}});          // (bra, ket', w', i)
        env = contract(a.conj(), t, {{0, 0}, {1, 3}});          // (bra', ket', w')
        env = env.permuted(std::vector<std::size_t>{0, 2, 1});
    }
    return env.data()[0];
}

}  // namespace ttedopa
