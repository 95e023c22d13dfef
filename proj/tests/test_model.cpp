#include <cmath>
#include <random>

#include "catch2/catch_amalgamated.hpp"

#include "reachbound/model.hpp"

using namespace reachbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Eigen::MatrixXd example_F() {
    Eigen::MatrixXd F(2, 2);
    F << 0.84, 0.23, -0.47, 0.12;
    return F;
}

Eigen::MatrixXd example_G() {
    Eigen::MatrixXd G(2, 2);
    G << 0.07, 0.3, 0.23, 0.1;
    return G;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Deterministic random orthogonal matrix via QR of a Gaussian sample.
Eigen::MatrixXd random_orthogonal(int n, unsigned seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = gauss(eng);
    return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

}  // namespace

TEST_CASE("LtiSystem validates shapes and finiteness") {
    REQUIRE_NOTHROW(LtiSystem(example_F(), example_G()));
    REQUIRE_THROWS_AS(LtiSystem(Eigen::MatrixXd::Zero(2, 3), example_G()), ModelError);
    REQUIRE_THROWS_AS(LtiSystem(example_F(), Eigen::MatrixXd::Zero(3, 2)), ModelError);
    Eigen::MatrixXd bad = example_F();
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(LtiSystem(bad, example_G()), ModelError);

    const LtiSystem sys(example_F(), example_G());
    REQUIRE(sys.n() == 2);
    REQUIRE(sys.m() == 2);
}

TEST_CASE("InputBounds requires positive finite entries") {
    REQUIRE_NOTHROW(InputBounds(vec({8, 10})));
    REQUIRE_THROWS_AS(InputBounds(vec({8, 0})), ModelError);
    REQUIRE_THROWS_AS(InputBounds(vec({-1})), ModelError);
    REQUIRE_THROWS_AS(InputBounds(vec({std::numeric_limits<double>::infinity()})), ModelError);
}

TEST_CASE("input_weight is the reciprocal diagonal") {
    const Eigen::MatrixXd r1 = input_weight(InputBounds(vec({8, 10})));
    REQUIRE_THAT(r1(0, 0), WithinRel(0.125, 1e-15));
    REQUIRE_THAT(r1(1, 1), WithinRel(0.1, 1e-15));
    REQUIRE(r1(0, 1) == 0.0);

    REQUIRE(input_weight(InputBounds(vec({1})))(0, 0) == 1.0);

    const Eigen::MatrixXd r3 = input_weight(InputBounds(vec({1.2, 0.8, 1.1})));
    REQUIRE_THAT(r3(0, 0), WithinRel(1.0 / 1.2, 1e-15));
    REQUIRE_THAT(r3(1, 1), WithinRel(1.25, 1e-15));
    REQUIRE_THAT(r3(2, 2), WithinRel(1.0 / 1.1, 1e-15));
}

TEST_CASE("boundedness diagnostic classifies by spectral radius") {
    const BoundednessVerdict stable =
        boundedness_diagnostic(LtiSystem(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Identity(1, 1)));
    REQUIRE(stable.verdict == Boundedness::Bounded);
    REQUIRE_THAT(stable.spectral_radius, WithinAbs(0.5, 1e-12));

    const BoundednessVerdict example =
        boundedness_diagnostic(LtiSystem(example_F(), example_G()));
    REQUIRE(example.verdict == Boundedness::Bounded);
    // roots of z^2 - 0.96 z + 0.2089
    REQUIRE_THAT(example.spectral_radius, WithinAbs(0.6266, 5e-4));

    const BoundednessVerdict marginal =
        boundedness_diagnostic(LtiSystem(Eigen::MatrixXd::Identity(1, 1), Eigen::MatrixXd::Identity(1, 1)));
    REQUIRE(marginal.verdict == Boundedness::PossiblyUnbounded);
    REQUIRE_THAT(marginal.spectral_radius, WithinAbs(1.0, 1e-12));

    const BoundednessVerdict unstable =
        boundedness_diagnostic(LtiSystem(Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Identity(1, 1)));
    REQUIRE(unstable.verdict == Boundedness::Unbounded);
}

TEST_CASE("Ellipsoid validates symmetry and positive definiteness") {
    REQUIRE_NOTHROW(Ellipsoid(Eigen::MatrixXd::Identity(2, 2), 1.0));
    REQUIRE_THROWS_AS(Ellipsoid(Eigen::MatrixXd::Identity(2, 2), 0.0), ModelError);
    REQUIRE_THROWS_AS(Ellipsoid(Eigen::MatrixXd::Identity(2, 2), -1.0), ModelError);

    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    REQUIRE_THROWS_AS(Ellipsoid(asym, 1.0), ModelError);

    Eigen::MatrixXd indef(2, 2);
    indef << 1.0, 0.0, 0.0, -1.0;
    REQUIRE_THROWS_AS(Ellipsoid(indef, 1.0), ModelError);

    // near-symmetric input is symmetrized
    Eigen::MatrixXd nearly(2, 2);
    nearly << 1.0, 0.5 + 1e-12, 0.5 - 1e-12, 1.0;
    const Ellipsoid e(nearly, 1.0);
    REQUIRE(e.P(0, 1) == e.P(1, 0));
}

TEST_CASE("origin is inside every valid ellipsoid") {
    std::mt19937_64 eng(7);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(eng() % 5);
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = gauss(eng);
        Eigen::MatrixXd p = a * a.transpose() + 1e-3 * Eigen::MatrixXd::Identity(n, n);
        const Ellipsoid e(p, 0.1 + std::abs(gauss(eng)));
        REQUIRE(e.contains(Eigen::VectorXd::Zero(n)));
        REQUIRE(e.level(Eigen::VectorXd::Zero(n)) == 0.0);
    }
}

TEST_CASE("unit ball volumes") {
    REQUIRE_THAT(unit_ball_volume(1), WithinRel(2.0, 1e-12));
    REQUIRE_THAT(unit_ball_volume(2), WithinRel(M_PI, 1e-12));
    REQUIRE_THAT(unit_ball_volume(3), WithinRel(4.0 * M_PI / 3.0, 1e-12));
}

TEST_CASE("ellipsoid volume closed forms") {
    REQUIRE_THAT(ellipsoid_volume(Ellipsoid(Eigen::MatrixXd::Identity(2, 2), 1.0)),
                 WithinRel(M_PI, 1e-12));
    REQUIRE_THAT(ellipsoid_volume(Ellipsoid(Eigen::MatrixXd::Constant(1, 1, 0.25), 1.0)),
                 WithinRel(4.0, 1e-12));
    Eigen::MatrixXd d(2, 2);
    d << 4.0, 0.0, 0.0, 1.0;
    REQUIRE_THAT(ellipsoid_volume(Ellipsoid(d, 1.0)), WithinRel(M_PI / 2.0, 1e-12));
}

TEST_CASE("ellipsoid volume is orthogonally invariant and obeys the scaling law") {
    Eigen::MatrixXd p(3, 3);
    p << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.9;
    const double alpha = 3.0;
    const double base = ellipsoid_volume(Ellipsoid(p, alpha));

    for (unsigned seed = 0; seed < 5; ++seed) {
        const Eigen::MatrixXd q = random_orthogonal(3, seed);
        const double rotated = ellipsoid_volume(Ellipsoid(q.transpose() * p * q, alpha));
        REQUIRE_THAT(rotated, WithinRel(base, 1e-9));
    }

    for (double s : {0.25, 2.0, 10.0}) {
        const double scaled = ellipsoid_volume(Ellipsoid(p / s, alpha));
        REQUIRE_THAT(scaled, WithinRel(std::pow(s, 3.0 / 2.0) * base, 1e-9));
    }
}

TEST_CASE("hyperplane distance closed forms") {
    const Ellipsoid disk(Eigen::MatrixXd::Identity(2, 2), 1.0);
    REQUIRE_THAT(hyperplane_distance(disk, vec({1, 0}), 2.0), WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(hyperplane_distance(disk, vec({1, 0}), 1.0), WithinAbs(0.0, 1e-12));

    const Ellipsoid interval(Eigen::MatrixXd::Constant(1, 1, 0.25), 1.0);
    REQUIRE_THAT(hyperplane_distance(interval, vec({1}), 2.0), WithinAbs(0.0, 1e-12));

    // crossing reported as negative
    REQUIRE(hyperplane_distance(disk, vec({1, 0}), 0.5) < 0.0);
}

TEST_CASE("hyperplane distance is zero exactly at the touching configuration") {
    std::mt19937_64 eng(11);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a(2, 2);
        for (int i = 0; i < 4; ++i) a(i / 2, i % 2) = gauss(eng);
        const Eigen::MatrixXd p = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(2, 2);
        const double alpha = 0.5 + std::abs(gauss(eng));
        const Ellipsoid e(p, alpha);
        Eigen::VectorXd c = vec({gauss(eng), gauss(eng)});
        if (c.norm() < 1e-3) continue;
        const double touching = std::sqrt(alpha * c.dot(p.ldlt().solve(c)));
        REQUIRE_THAT(hyperplane_distance(e, c, touching), WithinAbs(0.0, 1e-9 * (1.0 + touching)));
    }
}

TEST_CASE("normalize_halfspace canonicalizes to c'x >= b with b > 0") {
    const Halfspace h1 = normalize_halfspace(vec({0.1, 1}), 3.0, HalfspaceSense::Ge);
    REQUIRE(h1.c(0) == 0.1);
    REQUIRE(h1.c(1) == 1.0);
    REQUIRE(h1.b == 3.0);

    const double b2 = -2.0 * std::sqrt(5.0);
    const Halfspace h2 = normalize_halfspace(vec({-2, 1}), b2, HalfspaceSense::Le);
    REQUIRE(h2.c(0) == 2.0);
    REQUIRE(h2.c(1) == -1.0);
    REQUIRE_THAT(h2.b, WithinRel(2.0 * std::sqrt(5.0), 1e-15));

    REQUIRE_THROWS_AS(normalize_halfspace(vec({1}), -1.0, HalfspaceSense::Ge), InvalidDangerSet);
    REQUIRE_THROWS_AS(normalize_halfspace(vec({1}), 0.0, HalfspaceSense::Ge), InvalidDangerSet);
    REQUIRE_THROWS_AS(normalize_halfspace(vec({1}), 1.0, HalfspaceSense::Le), InvalidDangerSet);
    REQUIRE_THROWS_AS(normalize_halfspace(vec({0, 0}), 1.0, HalfspaceSense::Ge), ModelError);
}

TEST_CASE("normalize_halfspace is idempotent on normalized inputs") {
    const Halfspace h = normalize_halfspace(vec({-2, 1}), -2.0 * std::sqrt(5.0), HalfspaceSense::Le);
    const Halfspace again = normalize_halfspace(h.c, h.b, HalfspaceSense::Ge);
    REQUIRE(again.c == h.c);
    REQUIRE(again.b == h.b);
}

TEST_CASE("DangerSet membership and origin exclusion") {
    const DangerSet d({normalize_halfspace(vec({0.1, 1}), 3.0, HalfspaceSense::Ge),
                       normalize_halfspace(vec({-2, 1}), -2.0 * std::sqrt(5.0), HalfspaceSense::Le)});
    REQUIRE(d.size() == 2);
    REQUIRE_FALSE(d.contains(vec({0, 0})));
    REQUIRE(d.contains(vec({0, 3})));    // on the first boundary counts as dangerous
    REQUIRE(d.contains(vec({5, 0})));    // deep in the second half-space
    REQUIRE_FALSE(d.contains(vec({1, 1})));

    const DangerSet empty{std::vector<Halfspace>{}};
    REQUIRE(empty.empty());
    REQUIRE_FALSE(empty.contains(vec({100, 100})));
}
