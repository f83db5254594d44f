#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace bdris;
using namespace bdris::testing;

namespace {

DipoleSystem random_system(Index n_t, Index n_r, Index n_s, std::mt19937_64& rng) {
    const Index n = n_t + n_r + n_s;
    CMatrix w = random_complex(n, n, rng);
    w = ((w + w.transpose()) / 2.0).eval();
    return DipoleSystem(std::move(w), n_t, n_r);
}

DipoleConfig random_config(Index n, std::mt19937_64& rng) {
    return DipoleConfig(random_complex(n, 1, rng).col(0));
}

} // namespace

TEST_CASE("interaction_matrix") {
    std::mt19937_64 rng(83);
    const DipoleSystem sys = random_system(1, 1, 4, rng);

    SECTION("zero configuration returns the base matrix") {
        const CMatrix w = interaction_matrix(sys, DipoleConfig::zeros(4));
        REQUIRE((w - sys.w0()).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("symmetry is preserved for any configuration") {
        const CMatrix w = interaction_matrix(sys, random_config(4, rng));
        REQUIRE((w - w.transpose()).cwiseAbs().maxCoeff() <= kStructuralTol);
    }
    SECTION("a single offset changes exactly one entry") {
        CVector c = CVector::Zero(4);
        c(2) = Complex(0.7, -0.3);
        const CMatrix w = interaction_matrix(sys, DipoleConfig(c));
        const CMatrix diff = w - sys.w0();
        REQUIRE(diff.cwiseAbs().maxCoeff() == std::abs(c(2)));
        Index nonzeros = 0;
        for (Index i = 0; i < diff.rows(); ++i)
            for (Index j = 0; j < diff.cols(); ++j)
                if (diff(i, j) != Complex(0.0, 0.0)) ++nonzeros;
        REQUIRE(nonzeros == 1);
    }
}

TEST_CASE("channel_direct") {
    std::mt19937_64 rng(89);

    SECTION("zero configuration returns the base inverse block") {
        const DipoleSystem sys = random_system(1, 1, 4, rng);
        const CMatrix h = channel_direct(sys, DipoleConfig::zeros(4));
        const ReducedDipoleModel red = reduce(sys);
        const auto& p = red.partition();
        REQUIRE(rel_err(h, detail::take(red.omega0(), p.set("R"), p.set("T"))) < kStructuralTol);
    }

    SECTION("two-dipole system inverts a 2x2 matrix") {
        CMatrix w(2, 2);
        w << Complex(2.0, 1.0), Complex(0.5, -0.2), Complex(0.5, -0.2), Complex(1.5, 0.0);
        const DipoleSystem sys(w, 1, 1);
        const CMatrix h = channel_direct(sys, DipoleConfig::zeros(0));
        const CMatrix winv = w.inverse();
        REQUIRE(rel_err(h(0, 0), winv(1, 0)) < kStructuralTol);
    }

    SECTION("singular interaction matrix reported") {
        CMatrix w = CMatrix::Zero(3, 3);
        w(0, 1) = 1.0;
        w(1, 0) = 1.0; // third row/column zero: singular
        const DipoleSystem sys(w, 1, 1);
        REQUIRE_THROWS_AS(channel_direct(sys, DipoleConfig::zeros(1)), NumericalError);
    }
}

TEST_CASE("channel_reduced") {
    std::mt19937_64 rng(97);

    SECTION("zero configuration is exact") {
        const DipoleSystem sys = random_system(1, 2, 3, rng);
        const ReducedDipoleModel red = reduce(sys);
        const auto& p = red.partition();
        const CMatrix h = channel_reduced(red, DipoleConfig::zeros(3));
        REQUIRE((h - detail::take(red.omega0(), p.set("R"), p.set("T"))).cwiseAbs().maxCoeff() ==
                0.0);
    }

    SECTION("agrees with direct inversion on random systems") {
        for (int trial = 0; trial < 100; ++trial) {
            const DipoleSystem sys = random_system(1, 1, 4, rng);
            const DipoleConfig c = random_config(4, rng);
            const CMatrix direct = channel_direct(sys, c);
            const CMatrix reduced = channel_reduced(reduce(sys), c);
            REQUIRE(rel_err(direct, reduced) < kComposedTol);
        }
    }

    SECTION("reduction inverts the base matrix") {
        const DipoleSystem sys = random_system(1, 1, 5, rng);
        const ReducedDipoleModel red = reduce(sys);
        const CMatrix eye = red.omega0() * sys.w0();
        REQUIRE((eye - CMatrix::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
    }

    SECTION("shares the kernel with the conventional scattering route") {
        // feed the environment matrix through the dipole-facing entry point
        const RadioEnvironment env = synth_re(1, 1, 5, 0.1, 23);
        const SMatrix s_l = random_diagonal_load(5, 1.0, rng);
        const CMatrix via_network = channel_conventional(env, s_l);

        const ReducedDipoleModel as_dipoles(env.smatrix().matrix(), 1, 1);
        const CMatrix via_dipoles =
            channel_reduced(as_dipoles, DipoleConfig(s_l.matrix().diagonal()));
        REQUIRE((via_network - via_dipoles).cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("reciprocity of the inverse blocks") {
        const DipoleSystem sys = random_system(2, 2, 3, rng);
        const DipoleConfig c = random_config(3, rng);
        const CMatrix w = interaction_matrix(sys, c);
        const CMatrix winv = w.inverse();
        const auto& p = sys.partition();
        const CMatrix h_rt = detail::take(winv, p.set("R"), p.set("T"));
        const CMatrix h_tr = detail::take(winv, p.set("T"), p.set("R"));
        REQUIRE(rel_err(h_rt, h_tr.transpose()) < 1e-10);
    }
}

TEST_CASE("bdris_dipole_model") {
    const LoadBank pin = bank_from_impedances(Complex(5.2, 0.0), Complex(0.0, -7.96e3));
    const RadioEnvironment env = synth_re(1, 1, 4, 0.1, 29);
    const StaticLoadCircuit slc = group_connected({pi_network(), pi_network()});
    const CascadeModel k = build_k(env, slc);
    const ReducedDipoleModel red = bdris_dipole_model(k);

    SECTION("tunable-dipole count equals the load count") {
        REQUIRE(red.n_s() == k.n_c());
    }

    SECTION("zero offsets return the static RT block") {
        const CMatrix h = channel_reduced(red, DipoleConfig::zeros(k.n_c()));
        const auto& p = k.partition();
        REQUIRE((h - block(k.smatrix(), p.set("R"), p.set("T"))).cwiseAbs().maxCoeff() == 0.0);
    }

    SECTION("load reflections as offsets reproduce the diagonal route") {
        std::mt19937_64 rng(31);
        for (int trial = 0; trial < 10; ++trial) {
            const BinaryConfig b = BinaryConfig::random(k.n_c(), rng);
            const SMatrix il = il_matrix(b, pin);
            const CMatrix via_cascade = channel_diagonal(k, il);
            const CMatrix via_dipoles =
                channel_reduced(red, DipoleConfig(il.matrix().diagonal()));
            REQUIRE((via_cascade - via_dipoles).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}
