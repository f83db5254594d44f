// Core value types shared by all modules: complex scattering/impedance
// matrices with a reference impedance, and named ordered port partitions.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bdris {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Index = Eigen::Index;
using IndexSet = std::vector<Index>;

// Tolerance tiers: structural identities, composed quantities, passivity.
inline constexpr double kStructuralTol = 1e-12;
inline constexpr double kComposedTol = 1e-10;
inline constexpr double kPassivityTol = 1e-9;

inline constexpr double kPi = 3.14159265358979323846;

// Raised when a linear solve encounters a singular or non-finite system,
// which for passive inputs cannot happen.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by file readers on malformed input.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const CMatrix& m) {
    return m.allFinite();
}

} // namespace detail

/// Square complex scattering matrix with its reference impedance.
/// Entries are dimensionless wave ratios; immutable after construction.
class SMatrix {
public:
    explicit SMatrix(CMatrix data, double z0 = 50.0)
        : data_(std::move(data)), z0_(z0) {
        detail::require(data_.rows() == data_.cols(), "SMatrix: matrix must be square");
        detail::require(data_.rows() >= 1, "SMatrix: need at least one port");
        detail::require(detail::all_finite(data_), "SMatrix: entries must be finite");
        detail::require(z0_ > 0.0, "SMatrix: reference impedance must be positive");
    }

    Index ports() const { return data_.rows(); }
    double z0() const { return z0_; }
    const CMatrix& matrix() const { return data_; }
    Complex operator()(Index i, Index j) const { return data_(i, j); }

    static SMatrix identity(Index n, double z0 = 50.0) {
        return SMatrix(CMatrix::Identity(n, n), z0);
    }
    static SMatrix zero(Index n, double z0 = 50.0) {
        return SMatrix(CMatrix::Zero(n, n), z0);
    }

private:
    CMatrix data_;
    double z0_;
};

/// Square complex impedance matrix (ohms).
class ZMatrix {
public:
    explicit ZMatrix(CMatrix data) : data_(std::move(data)) {
        detail::require(data_.rows() == data_.cols(), "ZMatrix: matrix must be square");
        detail::require(data_.rows() >= 1, "ZMatrix: need at least one port");
        detail::require(detail::all_finite(data_), "ZMatrix: entries must be finite");
    }

    Index ports() const { return data_.rows(); }
    const CMatrix& matrix() const { return data_; }
    Complex operator()(Index i, Index j) const { return data_(i, j); }

private:
    CMatrix data_;
};

/// Ordered, named, pairwise-disjoint index sets covering 0..n_ports-1
/// exactly. Indices are 0-based. Set order is meaningful: composition
/// rules (which ports are kept, which are connected) go by position.
class PortPartition {
public:
    using NamedSet = std::pair<std::string, IndexSet>;

    PortPartition(Index n_ports, std::vector<NamedSet> sets)
        : n_ports_(n_ports), sets_(std::move(sets)) {
        detail::require(n_ports_ >= 1, "PortPartition: need at least one port");
        detail::require(!sets_.empty(), "PortPartition: need at least one set");
        std::vector<char> seen(static_cast<std::size_t>(n_ports_), 0);
        Index covered = 0;
        for (const auto& [name, idx] : sets_) {
            for (Index i : idx) {
                detail::require(i >= 0 && i < n_ports_,
                                "PortPartition: index out of range in set '" + name + "'");
                detail::require(!seen[static_cast<std::size_t>(i)],
                                "PortPartition: sets overlap at port " + std::to_string(i));
                seen[static_cast<std::size_t>(i)] = 1;
                ++covered;
            }
        }
        detail::require(covered == n_ports_, "PortPartition: sets must cover all ports");
    }

    Index n_ports() const { return n_ports_; }
    std::size_t n_sets() const { return sets_.size(); }

    bool has(std::string_view name) const {
        for (const auto& [n, _] : sets_)
            if (n == name) return true;
        return false;
    }

    const IndexSet& set(std::string_view name) const {
        for (const auto& [n, idx] : sets_)
            if (n == name) return idx;
        throw std::invalid_argument("PortPartition: no set named '" + std::string(name) + "'");
    }

    const IndexSet& set(std::size_t pos) const { return sets_.at(pos).second; }
    const std::string& name(std::size_t pos) const { return sets_.at(pos).first; }

    /// Concatenation of the named sets, in the order given.
    IndexSet merged(std::initializer_list<std::string_view> names) const {
        IndexSet out;
        for (auto n : names) {
            const auto& s = set(n);
            out.insert(out.end(), s.begin(), s.end());
        }
        return out;
    }

private:
    Index n_ports_;
    std::vector<NamedSet> sets_;
};

/// 0-based contiguous index range [first, first+count).
inline IndexSet index_range(Index first, Index count) {
    IndexSet out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) out.push_back(first + i);
    return out;
}

} // namespace bdris
