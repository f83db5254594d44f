// Radio-environment representation: synthetic reciprocal sub-unitary
// scattering matrices, the static cascade K of environment and load
// circuit, and both routes to the end-to-end channel.
#pragma once

#include "bdris/circuits.hpp"
#include "bdris/network.hpp"
#include "bdris/types.hpp"

#include <random>

namespace bdris {

/// Everything between the antennas and the RIS element ports, lumped into
/// one reciprocal, strictly sub-unitary scattering matrix with port sets
/// T (transmitters), R (receivers) and S (RIS elements).
class RadioEnvironment {
public:
    RadioEnvironment(SMatrix s, Index n_t, Index n_r)
        : s_(std::move(s)),
          part_(s_.ports(), {{"T", index_range(0, n_t)},
                             {"R", index_range(n_t, n_r)},
                             {"S", index_range(n_t + n_r, s_.ports() - n_t - n_r)}}) {
        const auto rep = validate(s_);
        if (rep.reciprocity_err > kStructuralTol)
            throw std::invalid_argument("RadioEnvironment: matrix is not reciprocal");
        if (rep.passivity_margin <= 0.0)
            throw std::invalid_argument("RadioEnvironment: matrix must be strictly sub-unitary");
    }

    const SMatrix& smatrix() const { return s_; }
    const PortPartition& partition() const { return part_; }
    Index n_t() const { return static_cast<Index>(part_.set("T").size()); }
    Index n_r() const { return static_cast<Index>(part_.set("R").size()); }
    Index n_s() const { return static_cast<Index>(part_.set("S").size()); }

private:
    SMatrix s_;
    PortPartition part_;
};

/// Cascade of environment and static load circuit: the static,
/// generally non-diagonal system that the tunable loads terminate.
/// Port sets T, R, C; the antenna set A is T followed by R.
class CascadeModel {
public:
    CascadeModel(SMatrix s, Index n_t, Index n_r)
        : s_(std::move(s)),
          part_(s_.ports(), {{"T", index_range(0, n_t)},
                             {"R", index_range(n_t, n_r)},
                             {"C", index_range(n_t + n_r, s_.ports() - n_t - n_r)}}) {
        const auto rep = validate(s_);
        if (rep.reciprocity_err > kStructuralTol)
            throw std::invalid_argument("CascadeModel: matrix is not reciprocal");
        if (rep.passivity_margin < -kPassivityTol)
            throw std::invalid_argument("CascadeModel: matrix is not passive");
    }

    const SMatrix& smatrix() const { return s_; }
    const PortPartition& partition() const { return part_; }
    Index n_t() const { return static_cast<Index>(part_.set("T").size()); }
    Index n_r() const { return static_cast<Index>(part_.set("R").size()); }
    Index n_c() const { return static_cast<Index>(part_.set("C").size()); }

private:
    SMatrix s_;
    PortPartition part_;
};

/// Synthetic radio environment: i.i.d. complex Gaussian matrix,
/// symmetrized, scaled so that sigma_max = 1 - loss_factor.
/// Deterministic in the seed.
inline RadioEnvironment synth_re(Index n_t, Index n_r, Index n_s,
                                 double loss_factor, std::uint64_t seed) {
    detail::require(loss_factor > 0.0 && loss_factor < 1.0,
                    "synth_re: loss_factor must lie in (0,1)");
    detail::require(n_t >= 1 && n_r >= 1 && n_s >= 1, "synth_re: all port counts must be >= 1");
    const Index n = n_t + n_r + n_s;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(2.0));
    CMatrix g(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            g(i, j) = Complex(gauss(rng), gauss(rng));
    CMatrix sym = (g + g.transpose()) / 2.0;
    sym *= (1.0 - loss_factor) / detail::sigma_max(sym);
    return RadioEnvironment(SMatrix(std::move(sym)), n_t, n_r);
}

/// Star-product cascade of the environment with a static load circuit.
inline CascadeModel build_k(const RadioEnvironment& env, const StaticLoadCircuit& slc) {
    detail::require(env.n_s() == slc.n_s(),
                    "build_k: environment S ports and circuit Sbar ports differ");
    SMatrix k = redheffer_star(env.smatrix(), env.partition(),
                               slc.smatrix(), slc.partition());
    return CascadeModel(std::move(k), env.n_t(), env.n_r());
}

/// Conventional route: terminate the environment's S ports with the full
/// (generally beyond-diagonal) load scattering matrix.
inline CMatrix channel_conventional(const RadioEnvironment& env, const SMatrix& s_l) {
    detail::require(s_l.ports() == env.n_s(), "channel_conventional: load dimension mismatch");
    const auto& p = env.partition();
    return detail::loaded_coupling(env.smatrix().matrix(), p.set("R"), p.set("T"),
                                   p.set("S"), s_l.matrix(), "channel_conventional");
}

/// Diagonal route: terminate the cascade's C ports with the always-
/// diagonal individual-load matrix. Same kernel as the conventional
/// route with K in place of the environment.
inline CMatrix channel_diagonal(const CascadeModel& k, const SMatrix& s_il) {
    detail::require(s_il.ports() == k.n_c(), "channel_diagonal: load dimension mismatch");
    const auto& p = k.partition();
    return detail::loaded_coupling(k.smatrix().matrix(), p.set("R"), p.set("T"),
                                   p.set("C"), s_il.matrix(), "channel_diagonal");
}

/// Convenience composition b -> H: builds S^IL from the configuration and
/// evaluates the diagonal route through the cascade.
inline CMatrix end_to_end(const RadioEnvironment& env, const StaticLoadCircuit& slc,
                          const LoadBank& bank, const BinaryConfig& b) {
    detail::require(b.size() == slc.n_c(), "end_to_end: configuration length mismatch");
    return channel_diagonal(build_k(env, slc), il_matrix(b, bank));
}

/// SISO accessor: the scalar h(b).
inline Complex end_to_end_siso(const RadioEnvironment& env, const StaticLoadCircuit& slc,
                               const LoadBank& bank, const BinaryConfig& b) {
    detail::require(env.n_t() == 1 && env.n_r() == 1, "end_to_end_siso: link is not SISO");
    return end_to_end(env, slc, bank, b)(0, 0);
}

} // namespace bdris
