#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace bdris;
using namespace bdris::testing;

TEST_CASE("block extraction") {
    SECTION("identity single entry") {
        const SMatrix s = SMatrix::identity(3);
        const CMatrix b = block(s, {0}, {0});
        REQUIRE(b.rows() == 1);
        REQUIRE(b(0, 0) == Complex(1.0, 0.0));
    }
    SECTION("full range returns the matrix") {
        std::mt19937_64 rng(3);
        const SMatrix s = random_reciprocal(4, 0.8, rng);
        const CMatrix b = block(s, index_range(0, 4), index_range(0, 4));
        REQUIRE((b - s.matrix()).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("top-left block of the canonical T circuit") {
        const CMatrix b = block(t_network().smatrix(), {0, 1}, {0, 1});
        CMatrix want(2, 2);
        want << 0.25, 0.25, 0.25, 0.25;
        REQUIRE((b - want).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("out-of-range index rejected") {
        const SMatrix s = SMatrix::identity(3);
        REQUIRE_THROWS_AS(block(s, {3}, {0}), std::invalid_argument);
        REQUIRE_THROWS_AS(block(s, {0}, {-1}), std::invalid_argument);
    }
}

TEST_CASE("cascade_load") {
    std::mt19937_64 rng(17);

    SECTION("through-connection circuit collapses onto the load") {
        const StaticLoadCircuit slc = dris_slc(3);
        const SMatrix load = random_diagonal_load(3, 0.95, rng);
        const SMatrix out = cascade_load(slc.smatrix(), slc.partition(), load);
        REQUIRE(rel_err(out.matrix(), load.matrix()) < kStructuralTol);
    }

    SECTION("matched loads keep the PP block") {
        const SMatrix s = random_reciprocal(5, 0.9, rng);
        const PortPartition part(5, {{"P", {0, 1, 2}}, {"Q", {3, 4}}});
        const SMatrix out = cascade_load(s, part, SMatrix::zero(2));
        REQUIRE(rel_err(out.matrix(), block(s, {0, 1, 2}, {0, 1, 2})) == 0.0);
    }

    SECTION("matches the truncated series oracle") {
        // sum_{k<=K} S_PQ (r S_QQ)^k r S_QP with K = 200 terms
        const SMatrix s = random_reciprocal(3, 0.9, rng);
        const Complex r(0.5, 0.0);
        const PortPartition part(3, {{"P", {0, 1}}, {"Q", {2}}});
        CMatrix load(1, 1);
        load(0, 0) = r;
        const SMatrix got = cascade_load(s, part, SMatrix(load));

        CMatrix expect = block(s, {0, 1}, {0, 1});
        CMatrix factor = load * block(s, {2}, {0, 1});
        const CMatrix hop = load * block(s, {2}, {2});
        for (int k = 0; k <= 200; ++k) {
            expect += block(s, {0, 1}, {2}) * factor;
            factor = hop * factor;
        }
        REQUIRE(rel_err(got.matrix(), expect) < 1e-10);
    }

    SECTION("reciprocal and passive inputs give reciprocal, passive output") {
        for (int trial = 0; trial < 100; ++trial) {
            const SMatrix s = random_reciprocal(5, 0.97, rng);
            const SMatrix load = random_diagonal_load(2, 1.0, rng);
            const PortPartition part(5, {{"P", {0, 1, 2}}, {"Q", {3, 4}}});
            const auto rep = validate(cascade_load(s, part, load));
            REQUIRE(rep.reciprocity_err <= kStructuralTol);
            REQUIRE(rep.passivity_margin >= -kPassivityTol);
        }
    }

    SECTION("singular resolvent reports the spectral radius") {
        CMatrix s(2, 2);
        s << 0, 0, 0, 1; // port 1 reflects fully
        CMatrix load(1, 1);
        load << 1; // unit load on that port: I - load*S_QQ = 0
        const PortPartition part(2, {{"P", {0}}, {"Q", {1}}});
        REQUIRE_THROWS_MATCHES(cascade_load(SMatrix(s), part, SMatrix(load)), NumericalError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("spectral radius")));
    }
}

TEST_CASE("redheffer_star") {
    std::mt19937_64 rng(23);

    SECTION("through-connection relabels the environment") {
        const RadioEnvironment env = synth_re(1, 1, 4, 0.1, 5);
        const StaticLoadCircuit slc = dris_slc(4);
        const SMatrix k = redheffer_star(env.smatrix(), env.partition(),
                                         slc.smatrix(), slc.partition());
        REQUIRE(rel_err(k.matrix(), env.smatrix().matrix()) < kStructuralTol);
    }

    SECTION("case-study dimensions compose to 11 ports") {
        const RadioEnvironment env = synth_re(1, 1, 6, 0.1, 5);
        const StaticLoadCircuit slc =
            group_connected({pi_network(), pi_network(), pi_network()});
        const SMatrix k = redheffer_star(env.smatrix(), env.partition(),
                                         slc.smatrix(), slc.partition());
        REQUIRE(k.ports() == 11);
    }

    SECTION("star-then-load equals load-then-load") {
        // cascade(star(RE, SLC), IL) == cascade(RE, cascade(SLC, IL))
        for (int trial = 0; trial < 100; ++trial) {
            const SMatrix s_re = random_reciprocal(6, 0.93, rng);
            const StaticLoadCircuit slc = (trial % 2) ? t_network() : pi_network();
            const SMatrix s_il = random_diagonal_load(3, 1.0, rng);
            const PortPartition re_part(6, {{"A", {0, 1, 2, 3}}, {"S", {4, 5}}});

            const SMatrix k = redheffer_star(s_re, re_part, slc.smatrix(), slc.partition());
            const PortPartition k_part(7, {{"A", {0, 1, 2, 3}}, {"C", {4, 5, 6}}});
            const SMatrix via_star = cascade_load(k, k_part, s_il);

            const SMatrix s_l = cascade_load(slc.smatrix(), slc.partition(), s_il);
            const SMatrix direct = cascade_load(s_re, re_part, s_l);
            REQUIRE(rel_err(via_star.matrix(), direct.matrix()) < 1e-10);
        }
    }

    SECTION("unitary inputs compose to a unitary output") {
        for (int trial = 0; trial < 20; ++trial) {
            const SMatrix a = random_symmetric_unitary(5, rng);
            const PortPartition pa(5, {{"A", {0, 1, 2}}, {"S", {3, 4}}});
            const StaticLoadCircuit b = (trial % 2) ? pi_network() : t_network();
            const SMatrix k = redheffer_star(a, pa, b.smatrix(), b.partition());
            const auto rep = validate(k);
            REQUIRE(std::abs(rep.passivity_margin) <= kPassivityTol);
            REQUIRE(rep.reciprocity_err <= 1e-9);
        }
    }
}

TEST_CASE("s_to_z and z_to_s") {
    std::mt19937_64 rng(31);

    SECTION("matched network has Z = z0 I") {
        const ZMatrix z = s_to_z(SMatrix::zero(3, 75.0));
        REQUIRE(rel_err(z.matrix(), CMatrix(75.0 * CMatrix::Identity(3, 3))) < kStructuralTol);
    }

    SECTION("PIN-diode ON impedance round-trips") {
        const Complex r = reflection_from_impedance(Complex(5.2, 0.0));
        REQUIRE(r.real() == Catch::Approx(-0.81).margin(5e-3));
        CMatrix m(1, 1);
        m << r;
        const ZMatrix z = s_to_z(SMatrix(m));
        REQUIRE(rel_err(z(0, 0), Complex(5.2, 0.0)) < kStructuralTol);
    }

    SECTION("round-trip identity on random symmetric matrices") {
        for (int trial = 0; trial < 50; ++trial) {
            const SMatrix s = random_reciprocal(4, 0.9, rng);
            const SMatrix back = z_to_s(s_to_z(s), s.z0());
            REQUIRE(rel_err(back.matrix(), s.matrix()) < kStructuralTol);
        }
    }

    SECTION("through-connection has no impedance matrix") {
        REQUIRE_THROWS_AS(s_to_z(dris_slc(1).smatrix()), NumericalError);
    }
}

TEST_CASE("neumann_channel") {
    std::mt19937_64 rng(37);

    SECTION("zeroth order is the simplified cascaded model") {
        const RadioEnvironment env = synth_re(2, 2, 3, 0.2, 11);
        const SMatrix s_l = random_diagonal_load(3, 1.0, rng);
        const auto& p = env.partition();
        const CMatrix got = neumann_channel(env.smatrix(), p, s_l, 0);
        const CMatrix want = block(env.smatrix(), p.set("R"), p.set("T")) +
                             block(env.smatrix(), p.set("R"), p.set("S")) *
                                 (s_l.matrix() * block(env.smatrix(), p.set("S"), p.set("T")));
        REQUIRE(rel_err(got, want) == 0.0);
    }

    SECTION("no mutual coupling: exact at every order") {
        // zero out the SS block, keep symmetry
        const RadioEnvironment env0 = synth_re(1, 1, 3, 0.2, 13);
        CMatrix m = env0.smatrix().matrix();
        m.bottomRightCorner(3, 3).setZero();
        m *= 0.8 / detail::sigma_max(m);
        const RadioEnvironment env(SMatrix(m), 1, 1);
        const SMatrix s_l = random_diagonal_load(3, 1.0, rng);
        const CMatrix exact = channel_conventional(env, s_l);
        for (int k : {0, 1, 5}) {
            const CMatrix got = neumann_channel(env.smatrix(), env.partition(), s_l, k);
            REQUIRE(rel_err(got, exact) < kStructuralTol);
        }
    }

    SECTION("truncation error decreases monotonically") {
        // instance scaled so that sigma_max(S^L S_SS) = 0.6, skipping seeds
        // whose rescaled full matrix would leave the passive regime
        const SMatrix s_l = random_diagonal_load(4, 1.0, rng);
        CMatrix m;
        for (std::uint64_t seed = 17;; ++seed) {
            const RadioEnvironment env0 = synth_re(1, 1, 4, 0.15, seed);
            const auto& p = env0.partition();
            m = env0.smatrix().matrix();
            const double cur =
                detail::sigma_max(s_l.matrix() * block(env0.smatrix(), p.set("S"), p.set("S")));
            m *= 0.6 / cur;
            if (detail::sigma_max(m) < 1.0) break;
        }
        const RadioEnvironment env(SMatrix(m), 1, 1);

        const CMatrix exact = channel_conventional(env, s_l);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 20; ++k) {
            const double err = (neumann_channel(env.smatrix(), env.partition(), s_l, k) - exact).norm();
            REQUIRE(err <= prev + 1e-15);
            prev = err;
        }
        REQUIRE(prev < 1e-4); // converged well below the k = 0 error
    }
}

TEST_CASE("type validation") {
    SECTION("scattering matrices must be square, finite and at least 1x1") {
        REQUIRE_THROWS_AS(SMatrix(CMatrix::Zero(2, 3)), std::invalid_argument);
        CMatrix bad = CMatrix::Zero(2, 2);
        bad(0, 1) = Complex(std::numeric_limits<double>::quiet_NaN(), 0.0);
        REQUIRE_THROWS_AS(SMatrix(bad), std::invalid_argument);
        REQUIRE_THROWS_AS(SMatrix(CMatrix::Zero(2, 2), -50.0), std::invalid_argument);
    }
    SECTION("partitions must cover all ports exactly once") {
        REQUIRE_THROWS_AS(PortPartition(3, {{"A", {0, 1}}, {"B", {1, 2}}}),
                          std::invalid_argument); // overlap
        REQUIRE_THROWS_AS(PortPartition(3, {{"A", {0, 1}}}), std::invalid_argument); // gap
        REQUIRE_THROWS_AS(PortPartition(3, {{"A", {0, 1, 3}}}), std::invalid_argument);
        const PortPartition p(3, {{"A", {2, 0}}, {"B", {1}}});
        REQUIRE(p.set("A") == IndexSet{2, 0}); // order preserved
        REQUIRE_THROWS_AS(p.set("C"), std::invalid_argument);
    }
    SECTION("environments must be reciprocal and strictly sub-unitary") {
        CMatrix m = CMatrix::Zero(3, 3);
        m(0, 1) = 0.5; // not symmetric
        REQUIRE_THROWS_AS(RadioEnvironment(SMatrix(m), 1, 1), std::invalid_argument);
        REQUIRE_THROWS_AS(RadioEnvironment(SMatrix(CMatrix::Identity(3, 3)), 1, 1),
                          std::invalid_argument); // unitary, not strictly sub-unitary
    }
}

TEST_CASE("validate") {
    SECTION("canonical T circuit is symmetric and unitary") {
        const auto rep = validate(t_network().smatrix());
        REQUIRE(rep.reciprocity_err == 0.0);
        REQUIRE(std::abs(rep.passivity_margin) <= kStructuralTol);
    }
    SECTION("scaled identity has negative margin") {
        const auto rep = validate(SMatrix(CMatrix(1.1 * CMatrix::Identity(3, 3))));
        REQUIRE(rep.passivity_margin == Catch::Approx(-0.1).margin(1e-12));
        REQUIRE_FALSE(rep.passive(kPassivityTol));
    }
    SECTION("synthetic environment margin equals the loss factor") {
        const auto rep = validate(synth_re(1, 1, 6, 0.1, 99).smatrix());
        REQUIRE(rep.passivity_margin == Catch::Approx(0.1).margin(1e-9));
    }
}
