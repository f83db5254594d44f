// Coupled-dipole formulation of the same channels: interaction matrix,
// direct inversion, and the reduced closed form that shares its kernel
// with the scattering-parameter routes.
#pragma once

#include "bdris/environment.hpp"
#include "bdris/network.hpp"
#include "bdris/types.hpp"

namespace bdris {

/// Inverse-polarizability offsets of the tunable dipoles. May be empty
/// (a system with no tunable dipoles).
class DipoleConfig {
public:
    explicit DipoleConfig(CVector c) : c_(std::move(c)) {
        detail::require(c_.allFinite(), "DipoleConfig: entries must be finite");
    }

    static DipoleConfig zeros(Index n) { return DipoleConfig(CVector::Zero(n)); }

    Index size() const { return c_.size(); }
    const CVector& values() const { return c_; }
    Complex operator()(Index i) const { return c_(i); }

private:
    CVector c_;
};

/// Base interaction matrix of a coupled-dipole system: inverse
/// polarizabilities on the diagonal, negated background couplings off it.
/// Treated as an abstract given matrix; ports split into T, R, S with the
/// S dipoles tunable.
class DipoleSystem {
public:
    DipoleSystem(CMatrix w0, Index n_t, Index n_r)
        : w0_(std::move(w0)),
          part_(w0_.rows(), {{"T", index_range(0, n_t)},
                             {"R", index_range(n_t, n_r)},
                             {"S", index_range(n_t + n_r, w0_.rows() - n_t - n_r)}}) {
        detail::require(w0_.rows() == w0_.cols(), "DipoleSystem: matrix must be square");
        detail::require(w0_.allFinite(), "DipoleSystem: entries must be finite");
        const double sym = (w0_ - w0_.transpose()).cwiseAbs().maxCoeff();
        if (sym > kStructuralTol)
            throw std::invalid_argument("DipoleSystem: interaction matrix is not symmetric");
    }

    const CMatrix& w0() const { return w0_; }
    const PortPartition& partition() const { return part_; }
    Index n_t() const { return static_cast<Index>(part_.set("T").size()); }
    Index n_r() const { return static_cast<Index>(part_.set("R").size()); }
    Index n_s() const { return static_cast<Index>(part_.set("S").size()); }

private:
    CMatrix w0_;
    PortPartition part_;
};

/// W(c): the base matrix with diag(c) subtracted on the SS diagonal.
inline CMatrix interaction_matrix(const DipoleSystem& sys, const DipoleConfig& c) {
    detail::require(c.size() == sys.n_s(), "interaction_matrix: configuration length mismatch");
    CMatrix w = sys.w0();
    const IndexSet& s = sys.partition().set("S");
    for (Index i = 0; i < c.size(); ++i)
        w(s[static_cast<std::size_t>(i)], s[static_cast<std::size_t>(i)]) -= c(i);
    return w;
}

/// Channel by brute force: the RT block of W(c)^-1.
inline CMatrix channel_direct(const DipoleSystem& sys, const DipoleConfig& c) {
    const CMatrix w = interaction_matrix(sys, c);
    Eigen::FullPivLU<CMatrix> lu(w);
    if (!lu.isInvertible())
        throw NumericalError("channel_direct: W(c) is singular (polarizability resonance)");
    const CMatrix winv = lu.inverse();
    return detail::take(winv, sys.partition().set("R"), sys.partition().set("T"));
}

/// Precomputed inverse of the base interaction matrix. The channel for
/// any configuration follows from its blocks alone.
class ReducedDipoleModel {
public:
    ReducedDipoleModel(CMatrix omega0, Index n_t, Index n_r)
        : omega0_(std::move(omega0)),
          part_(omega0_.rows(), {{"T", index_range(0, n_t)},
                                 {"R", index_range(n_t, n_r)},
                                 {"S", index_range(n_t + n_r, omega0_.rows() - n_t - n_r)}}) {
        detail::require(omega0_.rows() == omega0_.cols(), "ReducedDipoleModel: matrix must be square");
        detail::require(omega0_.allFinite(), "ReducedDipoleModel: entries must be finite");
    }

    const CMatrix& omega0() const { return omega0_; }
    const PortPartition& partition() const { return part_; }
    Index n_t() const { return static_cast<Index>(part_.set("T").size()); }
    Index n_r() const { return static_cast<Index>(part_.set("R").size()); }
    Index n_s() const { return static_cast<Index>(part_.set("S").size()); }

private:
    CMatrix omega0_;
    PortPartition part_;
};

/// Omega^0 = W(0)^-1.
inline ReducedDipoleModel reduce(const DipoleSystem& sys) {
    Eigen::FullPivLU<CMatrix> lu(sys.w0());
    if (!lu.isInvertible())
        throw NumericalError("reduce: base interaction matrix is singular");
    return ReducedDipoleModel(lu.inverse(), sys.n_t(), sys.n_r());
}

/// Reduced closed form, written with Phi = diag(c) appearing linearly so
/// that c = 0 returns the RT block of Omega^0 exactly:
///   H = O_RT + O_RS (I - Phi O_SS)^-1 Phi O_ST.
/// This is the same kernel the scattering routes use, realizing the
/// Omega^0 <-> S^RE, Phi <-> S^L correspondence as shared code.
inline CMatrix channel_reduced(const ReducedDipoleModel& red, const DipoleConfig& c) {
    detail::require(c.size() == red.n_s(), "channel_reduced: configuration length mismatch");
    const auto& p = red.partition();
    const CMatrix phi = c.values().asDiagonal();
    return detail::loaded_coupling(red.omega0(), p.set("R"), p.set("T"), p.set("S"),
                                   phi, "channel_reduced");
}

/// Reinterprets the static cascade as a dipole model: one dipole per
/// antenna and per tunable lumped element, with the C ports playing the
/// tunable-dipole role.
inline ReducedDipoleModel bdris_dipole_model(const CascadeModel& k) {
    return ReducedDipoleModel(k.smatrix().matrix(), k.n_t(), k.n_r());
}

} // namespace bdris
