#include "helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace bdris;
using namespace bdris::testing;

namespace {

SMatrix reflections_of(Complex z1, Complex z2, Complex z3) {
    CMatrix d = CMatrix::Zero(3, 3);
    d(0, 0) = reflection_from_impedance(z1);
    d(1, 1) = reflection_from_impedance(z2);
    d(2, 2) = reflection_from_impedance(z3);
    return SMatrix(std::move(d));
}

// Textbook impedance matrix of the loaded T network.
CMatrix t_oracle(Complex z1, Complex z2, Complex z3) {
    CMatrix z(2, 2);
    z << z1 + z3, z3, z3, z2 + z3;
    return z;
}

// Textbook admittance matrix of the loaded pi network.
CMatrix pi_oracle(Complex y1, Complex y2, Complex y3) {
    CMatrix y(2, 2);
    y << y1 + y3, -y3, -y3, y2 + y3;
    return y;
}

Complex random_impedance(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> re(1.0, 200.0);
    std::uniform_real_distribution<double> im(-100.0, 100.0);
    return {re(rng), im(rng)};
}

} // namespace

TEST_CASE("t_network") {
    const StaticLoadCircuit t = t_network();

    SECTION("canonical entries") {
        REQUIRE(t.smatrix()(0, 2) == Complex(-0.75, 0.0));
        REQUIRE(t.smatrix()(4, 4) == Complex(0.0, 0.0));
        REQUIRE(t.n_s() == 2);
        REQUIRE(t.n_c() == 3);
    }

    SECTION("symmetric and unitary") {
        const auto rep = validate(t.smatrix());
        REQUIRE(rep.reciprocity_err <= kStructuralTol);
        REQUIRE(std::abs(rep.passivity_margin) <= kStructuralTol);
    }

    SECTION("loaded circuit reproduces the T impedance matrix") {
        const Complex z1(10, 5), z2(20, 0), z3(30, -7);
        const SMatrix two_port = cascade_load(t.smatrix(), t.partition(),
                                              reflections_of(z1, z2, z3));
        REQUIRE(rel_err(s_to_z(two_port).matrix(), t_oracle(z1, z2, z3)) < 1e-10);
    }

    SECTION("recovery holds across random impedance triples") {
        std::mt19937_64 rng(41);
        for (int trial = 0; trial < 100; ++trial) {
            const Complex z1 = random_impedance(rng), z2 = random_impedance(rng),
                          z3 = random_impedance(rng);
            const SMatrix two_port = cascade_load(t.smatrix(), t.partition(),
                                                  reflections_of(z1, z2, z3));
            REQUIRE(rel_err(s_to_z(two_port).matrix(), t_oracle(z1, z2, z3)) < 1e-10);
        }
    }
}

TEST_CASE("pi_network") {
    const StaticLoadCircuit pi = pi_network();

    SECTION("canonical entries") {
        REQUIRE(pi.smatrix()(2, 2) == Complex(0.0, 0.0));
        REQUIRE(pi.smatrix()(0, 3) == Complex(0.75, 0.0));
    }

    SECTION("symmetric and unitary") {
        const auto rep = validate(pi.smatrix());
        REQUIRE(rep.reciprocity_err <= kStructuralTol);
        REQUIRE(std::abs(rep.passivity_margin) <= kStructuralTol);
    }

    SECTION("loaded circuit reproduces the pi admittance matrix") {
        // port 2 carries the series branch, ports 3 and 4 the shunts
        std::mt19937_64 rng(43);
        for (int trial = 0; trial < 100; ++trial) {
            const Complex z1 = random_impedance(rng), z2 = random_impedance(rng),
                          z3 = random_impedance(rng);
            const SMatrix two_port = cascade_load(pi.smatrix(), pi.partition(),
                                                  reflections_of(z3, z1, z2));
            const CMatrix y = s_to_z(two_port).matrix().inverse();
            REQUIRE(rel_err(y, pi_oracle(1.0 / z1, 1.0 / z2, 1.0 / z3)) < 1e-10);
        }
    }
}

TEST_CASE("dris_slc") {
    SECTION("single element") {
        const StaticLoadCircuit s = dris_slc(1);
        CMatrix want(2, 2);
        want << 0, 1, 1, 0;
        REQUIRE((s.smatrix().matrix() - want).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("loading returns the load itself") {
        std::mt19937_64 rng(47);
        const StaticLoadCircuit s = dris_slc(3);
        const SMatrix load = random_diagonal_load(3, 1.0, rng);
        const SMatrix out = cascade_load(s.smatrix(), s.partition(), load);
        REQUIRE(rel_err(out.matrix(), load.matrix()) < kStructuralTol);
    }
    SECTION("unitary and symmetric") {
        const auto rep = validate(dris_slc(4).smatrix());
        REQUIRE(rep.reciprocity_err == 0.0);
        REQUIRE(std::abs(rep.passivity_margin) <= kStructuralTol);
    }
}

TEST_CASE("group_connected") {
    SECTION("three pi groups form the case-study circuit") {
        const StaticLoadCircuit g = group_connected({pi_network(), pi_network(), pi_network()});
        REQUIRE(g.smatrix().ports() == 15);
        REQUIRE(g.n_s() == 6);
        REQUIRE(g.n_c() == 9);
    }
    SECTION("groups of trivial circuits reassemble the trivial circuit") {
        const StaticLoadCircuit g =
            group_connected({dris_slc(1), dris_slc(1), dris_slc(1), dris_slc(1)});
        REQUIRE((g.smatrix().matrix() - dris_slc(4).smatrix().matrix()).cwiseAbs().maxCoeff() ==
                0.0);
    }
    SECTION("assembly of unitary blocks is unitary") {
        const StaticLoadCircuit g = group_connected({t_network(), pi_network(), dris_slc(2)});
        REQUIRE(std::abs(validate(g.smatrix()).passivity_margin) <= kStructuralTol);
    }
}

TEST_CASE("reflection_from_impedance") {
    SECTION("PIN diode states") {
        const Complex on = reflection_from_impedance(Complex(5.2, 0.0));
        REQUIRE(on.real() == Catch::Approx(-0.8116).margin(5e-5));
        REQUIRE(on.imag() == 0.0);

        const Complex off = reflection_from_impedance(Complex(0.0, -7.96e3));
        REQUIRE(off.real() == Catch::Approx(0.9999).margin(5e-5));
        REQUIRE(off.imag() == Catch::Approx(-0.0126).margin(5e-5));
    }
    SECTION("matched load") {
        REQUIRE(reflection_from_impedance(Complex(50.0, 0.0)) == Complex(0.0, 0.0));
    }
    SECTION("pole") {
        REQUIRE_THROWS_AS(reflection_from_impedance(Complex(-50.0, 0.0)), std::domain_error);
    }
}

TEST_CASE("il_matrix") {
    const LoadBank pin = bank_from_impedances(Complex(5.2, 0.0), Complex(0.0, -7.96e3));

    SECTION("all zeros gives r_a on the diagonal") {
        const SMatrix il = il_matrix(BinaryConfig::zeros(4), pin);
        for (Index i = 0; i < 4; ++i) REQUIRE(il(i, i) == pin.r_a());
    }
    SECTION("all ones gives r_b on the diagonal") {
        const SMatrix il = il_matrix(BinaryConfig::ones(4), pin);
        for (Index i = 0; i < 4; ++i) REQUIRE(il(i, i) == pin.r_b());
    }
    SECTION("mixed configuration interleaves the two states") {
        const SMatrix il = il_matrix(BinaryConfig({1, 0, 1}), pin);
        REQUIRE(il(0, 0) == pin.r_b());
        REQUIRE(il(1, 1) == pin.r_a());
        REQUIRE(il(2, 2) == pin.r_b());
    }
    SECTION("output is diagonal for every configuration") {
        std::mt19937_64 rng(53);
        for (int trial = 0; trial < 20; ++trial) {
            const SMatrix il = il_matrix(BinaryConfig::random(6, rng), pin);
            CMatrix off = il.matrix();
            off.diagonal().setZero();
            REQUIRE(off.cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("type invariants") {
    SECTION("load bank rejects active reflections") {
        REQUIRE_THROWS_AS(LoadBank(Complex(1.5, 0.0), Complex(0.0, 0.0)),
                          std::invalid_argument);
    }
    SECTION("static load circuit rejects non-reciprocal matrices") {
        CMatrix m = CMatrix::Zero(2, 2);
        m(0, 1) = 0.5;
        REQUIRE_THROWS_AS(StaticLoadCircuit(SMatrix(m), 1), std::invalid_argument);
    }
    SECTION("binary config rejects non-bits") {
        REQUIRE_THROWS_AS(BinaryConfig({0, 2}), std::invalid_argument);
    }
}
