// Static load circuits and tunable load banks: canonical T / pi /
// through-connection constructors, group-connected assembly, and the
// diagonal matrix of individual load reflections.
#pragma once

#include "bdris/network.hpp"
#include "bdris/types.hpp"

#include <random>
#include <vector>

namespace bdris {

/// Scattering description of the static part of a load circuit:
/// an (N_S + N_C)-port reciprocal network whose first n_s ports face the
/// RIS elements ("Sbar") and whose remaining ports face the tunable
/// loads ("C").
class StaticLoadCircuit {
public:
    StaticLoadCircuit(SMatrix s, Index n_s)
        : s_(std::move(s)),
          part_(s_.ports(), {{"Sbar", index_range(0, n_s)},
                             {"C", index_range(n_s, s_.ports() - n_s)}}) {
        detail::require(n_s >= 1 && n_s < s_.ports(),
                        "StaticLoadCircuit: need 1 <= n_s < port count");
        const double rec = validate(s_).reciprocity_err;
        if (rec > kStructuralTol)
            throw std::invalid_argument("StaticLoadCircuit: matrix is not reciprocal (max|S - S^T| = " +
                                        std::to_string(rec) + ")");
    }

    const SMatrix& smatrix() const { return s_; }
    const PortPartition& partition() const { return part_; }
    Index n_s() const { return static_cast<Index>(part_.set("Sbar").size()); }
    Index n_c() const { return static_cast<Index>(part_.set("C").size()); }

private:
    SMatrix s_;
    PortPartition part_;
};

/// Two-state tunable load: reflection r_a in state 0, r_b in state 1.
class LoadBank {
public:
    LoadBank(Complex r_a, Complex r_b) : r_a_(r_a), r_b_(r_b) {
        detail::require(std::abs(r_a) <= 1.0 + kStructuralTol &&
                        std::abs(r_b) <= 1.0 + kStructuralTol,
                        "LoadBank: reflection magnitudes must not exceed 1");
    }

    Complex r_a() const { return r_a_; }
    Complex r_b() const { return r_b_; }

private:
    Complex r_a_, r_b_;
};

/// Binary configuration of the tunable loads.
class BinaryConfig {
public:
    explicit BinaryConfig(std::vector<int> bits) : bits_(std::move(bits)) {
        detail::require(!bits_.empty(), "BinaryConfig: need at least one bit");
        for (int b : bits_)
            detail::require(b == 0 || b == 1, "BinaryConfig: entries must be 0 or 1");
    }

    static BinaryConfig zeros(Index n) { return BinaryConfig(std::vector<int>(n, 0)); }
    static BinaryConfig ones(Index n) { return BinaryConfig(std::vector<int>(n, 1)); }

    static BinaryConfig random(Index n, std::mt19937_64& rng) {
        std::vector<int> b(static_cast<std::size_t>(n));
        std::uniform_int_distribution<int> bit(0, 1);
        for (auto& x : b) x = bit(rng);
        return BinaryConfig(std::move(b));
    }

    Index size() const { return static_cast<Index>(bits_.size()); }
    int bit(Index i) const { return bits_.at(static_cast<std::size_t>(i)); }
    const std::vector<int>& bits() const { return bits_; }

    void flip(Index i) {
        bits_.at(static_cast<std::size_t>(i)) ^= 1;
    }

    bool operator==(const BinaryConfig& o) const { return bits_ == o.bits_; }

private:
    std::vector<int> bits_;
};

/// (z - z0) / (z + z0).
inline Complex reflection_from_impedance(Complex z_load, double z0 = 50.0) {
    const Complex den = z_load + z0;
    if (std::abs(den) < 1e-300)
        throw std::domain_error("reflection_from_impedance: pole at z = -z0");
    return (z_load - z0) / den;
}

inline LoadBank bank_from_impedances(Complex z_state0, Complex z_state1, double z0 = 50.0) {
    return LoadBank(reflection_from_impedance(z_state0, z0),
                    reflection_from_impedance(z_state1, z0));
}

/// Diagonal load scattering matrix: entry i = r_a + (r_b - r_a) b_i.
inline SMatrix il_matrix(const BinaryConfig& b, const LoadBank& bank, double z0 = 50.0) {
    const Index n = b.size();
    CMatrix m = CMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        m(i, i) = bank.r_a() + (bank.r_b() - bank.r_a()) * static_cast<double>(b.bit(i));
    return SMatrix(std::move(m), z0);
}

/// Ideal T network with its three lumped impedances replaced by auxiliary
/// ports: Sbar = ports {0,1}, C = ports {2,3,4}. Terminating ports
/// (2,3,4) with impedances (Z1,Z2,Z3) realizes the 2-port whose impedance
/// matrix is [Z1+Z3, Z3; Z3, Z2+Z3]: Z1 and Z2 are the series branches,
/// Z3 the shunt branch.
inline StaticLoadCircuit t_network() {
    CMatrix m(5, 5);
    m << 0.25, 0.25, -0.75, -0.25, 0.5,
         0.25, 0.25, 0.25, 0.75, 0.5,
         -0.75, 0.25, 0.25, -0.25, 0.5,
         -0.25, 0.75, -0.25, 0.25, -0.5,
         0.5, 0.5, 0.5, -0.5, 0.0;
    return StaticLoadCircuit(SMatrix(std::move(m), 50.0), 2);
}

/// Ideal pi network with auxiliary ports: Sbar = {0,1}, C = {2,3,4}.
/// Port 2 carries the series branch (admittance Y3 between the two sides);
/// ports 3 and 4 carry the shunt branches Y1 and Y2. Terminating them
/// accordingly realizes the 2-port with admittance matrix
/// [Y1+Y3, -Y3; -Y3, Y2+Y3].
inline StaticLoadCircuit pi_network() {
    CMatrix m(5, 5);
    m << -0.25, 0.25, -0.5, 0.75, 0.25,
         0.25, -0.25, 0.5, 0.25, 0.75,
         -0.5, 0.5, 0.0, -0.5, 0.5,
         0.75, 0.25, -0.5, -0.25, 0.25,
         0.25, 0.75, 0.5, 0.25, -0.25;
    return StaticLoadCircuit(SMatrix(std::move(m), 50.0), 2);
}

/// Trivial circuit of a conventional D-RIS: each element port wired
/// straight to its own load port, S = [0 I; I 0].
inline StaticLoadCircuit dris_slc(Index n_s) {
    detail::require(n_s >= 1, "dris_slc: need n_s >= 1");
    CMatrix m = CMatrix::Zero(2 * n_s, 2 * n_s);
    m.topRightCorner(n_s, n_s).setIdentity();
    m.bottomLeftCorner(n_s, n_s).setIdentity();
    return StaticLoadCircuit(SMatrix(std::move(m), 50.0), n_s);
}

/// Block-diagonal assembly of independent groups. Output port order:
/// the Sbar ports of every group first (in list order), then all C ports,
/// so the assembled partition plugs directly into the star product.
inline StaticLoadCircuit group_connected(const std::vector<StaticLoadCircuit>& groups) {
    detail::require(!groups.empty(), "group_connected: need at least one group");
    Index n_s = 0, n_c = 0;
    for (const auto& g : groups) {
        detail::require(g.smatrix().z0() == groups.front().smatrix().z0(),
                        "group_connected: groups use different reference impedances");
        n_s += g.n_s();
        n_c += g.n_c();
    }
    CMatrix m = CMatrix::Zero(n_s + n_c, n_s + n_c);
    Index s_off = 0, c_off = 0;
    for (const auto& g : groups) {
        const Index gs = g.n_s(), gc = g.n_c();
        // global index of the group's local port k
        IndexSet glob(static_cast<std::size_t>(gs + gc));
        for (Index k = 0; k < gs; ++k) glob[static_cast<std::size_t>(k)] = s_off + k;
        for (Index k = 0; k < gc; ++k) glob[static_cast<std::size_t>(gs + k)] = n_s + c_off + k;
        const CMatrix& gm = g.smatrix().matrix();
        for (Index i = 0; i < gs + gc; ++i)
            for (Index j = 0; j < gs + gc; ++j)
                m(glob[static_cast<std::size_t>(i)], glob[static_cast<std::size_t>(j)]) = gm(i, j);
        s_off += gs;
        c_off += gc;
    }
    return StaticLoadCircuit(SMatrix(std::move(m), groups.front().smatrix().z0()), n_s);
}

} // namespace bdris
