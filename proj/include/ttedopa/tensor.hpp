#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace ttedopa {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;

/// Row-major complex matrix; the layout every matricization in this library uses.
using RowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Local operators (d x d) and dense reference matrices.
using Operator = Eigen::MatrixXcd;

/// Raised on malformed shapes, index ranges and mismatched contractions.
class TensorError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

inline std::size_t shape_product(std::span<const std::size_t> dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(std::span<const std::size_t> dims) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
    os << ')';
    return os.str();
}

/**
 * Dense rank-k complex array stored row-major (last axis fastest).
 *
 * A default-constructed tensor is the rank-0 scalar 0. Extents may be zero
 * only transiently; every public factory produces positive extents.
 */
class DenseTensor {
  public:
    DenseTensor() : data_(1, cplx{0.0}) {}

    explicit DenseTensor(Shape dims) : dims_(std::move(dims)), data_(shape_product(dims_), cplx{0.0}) {}

    DenseTensor(Shape dims, std::vector<cplx> data) : dims_(std::move(dims)), data_(std::move(data)) {
        if (data_.size() != shape_product(dims_))
            throw TensorError("DenseTensor: " + std::to_string(data_.size()) + " entries do not fill shape " +
                              shape_string(dims_));
    }

    static DenseTensor scalar(cplx value) { return DenseTensor({}, {value}); }

    static DenseTensor from_matrix(const Operator& m) {
        DenseTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) t.data_[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
        return t;
    }

    const Shape& dims() const { return dims_; }
    std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return data_.size(); }

    std::span<cplx> data() { return data_; }
    std::span<const cplx> data() const { return data_; }

    std::size_t offset(std::span<const std::size_t> idx) const {
        if (idx.size() != dims_.size())
            throw TensorError("DenseTensor: index of rank " + std::to_string(idx.size()) + " for tensor of rank " +
                              std::to_string(dims_.size()));
        std::size_t off = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (idx[k] >= dims_[k]) throw TensorError("DenseTensor: index out of range on axis " + std::to_string(k));
            off = off * dims_[k] + idx[k];
        }
        return off;
    }

    cplx& operator()(std::initializer_list<std::size_t> idx) {
        return data_[offset(std::span<const std::size_t>(idx.begin(), idx.size()))];
    }
    cplx operator()(std::initializer_list<std::size_t> idx) const {
        return data_[offset(std::span<const std::size_t>(idx.begin(), idx.size()))];
    }

    DenseTensor reshaped(Shape dims) const {
        if (shape_product(dims) != data_.size())
            throw TensorError("reshape: " + shape_string(dims_) + " cannot become " + shape_string(dims));
        return DenseTensor(std::move(dims), data_);
    }

    /// Result axis k is input axis perm[k].
    DenseTensor permuted(std::span<const std::size_t> perm) const;

    DenseTensor conj() const {
        DenseTensor out = *this;
        for (auto& x : out.data_) x = std::conj(x);
        return out;
    }

    double norm() const {
        double s = 0.0;
        for (const auto& x : data_) s += std::norm(x);
        return std::sqrt(s);
    }

    DenseTensor& operator+=(const DenseTensor& o) {
        require_same_shape(o, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    DenseTensor& operator-=(const DenseTensor& o) {
        require_same_shape(o, "-=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    DenseTensor& operator*=(cplx s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    /// y += a * x
    void axpy(cplx a, const DenseTensor& x) {
        require_same_shape(x, "axpy");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
    }

    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(cplx s, DenseTensor a) { return a *= s; }

    /// Row-major matrix view with the first `row_axes` axes as rows.
    Eigen::Map<const RowMatrix> as_matrix(std::size_t row_axes) const {
        auto rows = shape_product(std::span<const std::size_t>(dims_).first(row_axes));
        auto cols = rows == 0 ? 0 : data_.size() / rows;
        return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    }

    static DenseTensor from_rows(const RowMatrix& m, Shape dims) {
        std::vector<cplx> data(m.data(), m.data() + m.size());
        return DenseTensor(std::move(dims), std::move(data));
    }

  private:
    void require_same_shape(const DenseTensor& o, const char* op) const {
        if (o.dims_ != dims_)
            throw TensorError(std::string("DenseTensor ") + op + ": shape " + shape_string(dims_) + " vs " +
                              shape_string(o.dims_));
    }

    Shape dims_;
    std::vector<cplx> data_;
};

inline DenseTensor DenseTensor::permuted(std::span<const std::size_t> perm) const {
    const std::size_t r = rank();
    if (perm.size() != r) throw TensorError("permute: permutation length does not match rank");
    std::vector<bool> seen(r, false);
    for (auto p : perm) {
        if (p >= r || seen[p]) throw TensorError("permute: not a permutation");
        seen[p] = true;
    }
    bool identity = true;
    for (std::size_t k = 0; k < r; ++k) identity = identity && perm[k] == k;
    if (identity) return *this;

    Shape new_dims(r);
    for (std::size_t k = 0; k < r; ++k) new_dims[k] = dims_[perm[k]];
    std::vector<std::size_t> in_strides(r, 1);
    for (std::size_t k = r; k-- > 1;) in_strides[k - 1] = in_strides[k] * dims_[k];
    std::vector<std::size_t> strides(r);
    for (std::size_t k = 0; k < r; ++k) strides[k] = in_strides[perm[k]];

    DenseTensor out(new_dims);
    std::vector<std::size_t> idx(r, 0);
    std::size_t src = 0;
    for (std::size_t n = 0; n < out.data_.size(); ++n) {
        out.data_[n] = data_[src];
        for (std::size_t k = r; k-- > 0;) {
            if (++idx[k] < new_dims[k]) {
                src += strides[k];
                break;
            }
            src -= strides[k] * (new_dims[k] - 1);
            idx[k] = 0;
        }
    }
    return out;
}

/// Sum of conj(a) * b over all entries.
inline cplx inner(const DenseTensor& a, const DenseTensor& b) {
    if (a.dims() != b.dims())
        throw TensorError("inner: shape " + shape_string(a.dims()) + " vs " + shape_string(b.dims()));
    cplx s{0.0};
    auto x = a.data();
    auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}

using AxisPair = std::pair<std::size_t, std::size_t>;

/**
 * Sums over the paired axes. The result carries the unpaired axes of `a`
 * followed by the unpaired axes of `b`, each in their original order.
 */
inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const AxisPair> pairs) {
    std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
    for (const auto& [ia, ib] : pairs) {
        auto label = "(" + std::to_string(ia) + "," + std::to_string(ib) + ")";
        if (ia >= a.rank() || ib >= b.rank()) throw TensorError("contract: axis pair " + label + " out of range");
        if (used_a[ia] || used_b[ib]) throw TensorError("contract: axis pair " + label + " reuses an axis");
        if (a.dim(ia) != b.dim(ib))
            throw TensorError("contract: axis pair " + label + " has extents " + std::to_string(a.dim(ia)) + " and " +
                              std::to_string(b.dim(ib)));
        used_a[ia] = used_b[ib] = true;
    }

    std::vector<std::size_t> perm_a, perm_b;
    Shape out_dims;
    for (std::size_t k = 0; k < a.rank(); ++k)
        if (!used_a[k]) {
            perm_a.push_back(k);
            out_dims.push_back(a.dim(k));
        }
    const std::size_t free_a = perm_a.size();
    for (const auto& p : pairs) {
        perm_a.push_back(p.first);
        perm_b.push_back(p.second);
    }
    for (std::size_t k = 0; k < b.rank(); ++k)
        if (!used_b[k]) {
            perm_b.push_back(k);
            out_dims.push_back(b.dim(k));
        }

    const DenseTensor ap = a.permuted(perm_a);
    const DenseTensor bp = b.permuted(perm_b);
    const auto ma = ap.as_matrix(free_a);
    const auto mb = bp.as_matrix(pairs.size());
    RowMatrix prod = ma * mb;
    return DenseTensor::from_rows(prod, std::move(out_dims));
}

inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::initializer_list<AxisPair> pairs) {
    return contract(a, b, std::span<const AxisPair>(pairs.begin(), pairs.size()));
}

}  // namespace ttedopa
