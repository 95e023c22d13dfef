#include <cmath>
#include <random>

#include "catch2/catch_amalgamated.hpp"

#include "reachbound/analysis.hpp"

using namespace reachbound;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LtiSystem example_system() {
    Eigen::MatrixXd F(2, 2), G(2, 2);
    F << 0.84, 0.23, -0.47, 0.12;
    G << 0.07, 0.3, 0.23, 0.1;
    return LtiSystem(F, G);
}

InputBounds example_bounds() {
    Eigen::VectorXd g(2);
    g << 8.0, 10.0;
    return InputBounds(g);
}

LtiSystem scalar_system(double f, double g) {
    return LtiSystem(Eigen::MatrixXd::Constant(1, 1, f), Eigen::MatrixXd::Constant(1, 1, g));
}

}  // namespace

TEST_CASE("GridSpec enumerates the default and custom grids") {
    REQUIRE(GridSpec{}.points().size() == 99);
    REQUIRE(GridSpec{}.points().front() == 0.01);
    REQUIRE_THAT(GridSpec{}.points().back(), WithinAbs(0.99, 1e-12));

    const auto coarse = GridSpec{0.05, 0.05, 0.95}.points();
    REQUIRE(coarse.size() == 19);
    REQUIRE_THAT(coarse[1], WithinAbs(0.10, 1e-12));

    REQUIRE_THROWS_AS((GridSpec{0.0, 0.01, 0.99}.points()), ModelError);
    REQUIRE_THROWS_AS((GridSpec{0.01, 0.01, 1.0}.points()), ModelError);
    REQUIRE_THROWS_AS((GridSpec{0.5, -0.1, 0.9}.points()), ModelError);
    REQUIRE_THROWS_AS((GridSpec{0.9, 0.1, 0.5}.points()), ModelError);
}

TEST_CASE("assembled constraints reproduce the block formula") {
    const LtiSystem sys = example_system();
    const Eigen::MatrixXd R = input_weight(example_bounds());
    const double a = 0.37;
    const auto cons = assemble_analysis_lmi(sys, R, a);
    REQUIRE(cons.size() == 2);
    REQUIRE(cons[0].label == "analysis-lmi");
    REQUIRE(cons[1].label == "P-positive");
    REQUIRE(cons[1].sense == sdp::Sense::Pd);

    std::mt19937_64 eng(2);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd p(2, 2);
        const double d0 = gauss(eng), d1 = gauss(eng), o = gauss(eng);
        p << d0, o, o, d1;
        Eigen::VectorXd v(3);
        v << p(0, 0), p(0, 1), p(1, 1);

        Eigen::MatrixXd expect(4, 4);
        expect.topLeftCorner(2, 2) = a * p - sys.F.transpose() * p * sys.F;
        expect.topRightCorner(2, 2) = -sys.F.transpose() * p * sys.G;
        expect.bottomLeftCorner(2, 2) = expect.topRightCorner(2, 2).transpose();
        expect.bottomRightCorner(2, 2) = (1.0 - a) * R - sys.G.transpose() * p * sys.G;

        REQUIRE((cons[0].value(v) - expect).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE((cons[1].value(v) - p).cwiseAbs().maxCoeff() == 0.0);
    }

    REQUIRE_THROWS_AS(assemble_analysis_lmi(sys, R, 0.0), ModelError);
    REQUIRE_THROWS_AS(assemble_analysis_lmi(sys, R, 1.0), ModelError);
    REQUIRE_THROWS_AS(assemble_analysis_lmi(sys, Eigen::MatrixXd::Identity(3, 3), 0.5), ModelError);
}

TEST_CASE("scalar point solve matches the closed form at a = 0.5") {
    const auto pt = solve_analysis_at(scalar_system(0.5, 1.0), InputBounds(Eigen::VectorXd::Ones(1)), 0.5);
    REQUIRE(pt.status == sdp::Status::Optimal);
    REQUIRE(pt.ellipsoid.has_value());
    REQUIRE_THAT(pt.ellipsoid->P(0, 0), WithinRel(0.25, 1e-5));
    REQUIRE(pt.ellipsoid->alpha == 1.0);
    REQUIRE_THAT(pt.volume, WithinRel(4.0, 1e-5));
}

TEST_CASE("two-state example point solve at the optimal decay rate") {
    const auto pt = solve_analysis_at(example_system(), example_bounds(), 0.64);
    REQUIRE(pt.status == sdp::Status::Optimal);
    const Eigen::MatrixXd& p = pt.ellipsoid->P;
    REQUIRE_THAT(p(0, 0), WithinRel(0.122335, 1e-3));
    REQUIRE_THAT(p(0, 1), WithinRel(0.116625, 1e-3));
    REQUIRE_THAT(p(1, 1), WithinRel(0.227162, 1e-3));
    REQUIRE(pt.ellipsoid->alpha == 2.0);
    REQUIRE_THAT(pt.volume, WithinRel(52.748642, 1e-5));
}

TEST_CASE("grid search finds the minimum-volume decay rate on the example") {
    const auto result = grid_search(example_system(), example_bounds());
    REQUIRE_THAT(result.a_star, WithinAbs(0.64, 1e-12));
    REQUIRE_THAT(result.volume, WithinRel(52.748642, 1e-5));
    REQUIRE(result.log.size() == 99);

    // minimality over every feasible grid point
    int optimal_count = 0;
    for (const auto& entry : result.log) {
        if (entry.status != sdp::Status::Optimal) {
            REQUIRE(std::isnan(entry.volume));
            continue;
        }
        ++optimal_count;
        REQUIRE(entry.volume >= result.volume * (1.0 - 1e-9));
    }
    REQUIRE(optimal_count > 0);
}

TEST_CASE("grid search is deterministic across thread counts") {
    const GridSpec grid{0.05, 0.05, 0.95};
    const auto seq = grid_search(example_system(), example_bounds(), grid, 1);
    const auto par = grid_search(example_system(), example_bounds(), grid, 4);
    REQUIRE(seq.a_star == par.a_star);
    REQUIRE(seq.volume == par.volume);
    REQUIRE((seq.ellipsoid.P - par.ellipsoid.P).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(seq.log.size() == par.log.size());
    for (std::size_t i = 0; i < seq.log.size(); ++i) {
        REQUIRE(seq.log[i].status == par.log[i].status);
        if (seq.log[i].status == sdp::Status::Optimal) REQUIRE(seq.log[i].volume == par.log[i].volume);
    }
}

TEST_CASE("grid restricted to infeasible decay rates reports AllInfeasible") {
    // scalar f = 0.5 requires a > f^2 = 0.25
    REQUIRE_THROWS_AS(
        grid_search(scalar_system(0.5, 1.0), InputBounds(Eigen::VectorXd::Ones(1)), GridSpec{0.05, 0.05, 0.1}),
        AllInfeasible);
}

TEST_CASE("scalar grid search matches the closed-form bound within 1%") {
    struct Case {
        double f, g, gamma;
    };
    for (const Case c : {Case{0.5, 1.0, 1.0}, Case{0.3, 2.0, 1.0}, Case{0.7, 1.0, 4.0}, Case{0.5, 0.5, 2.0}}) {
        const auto result = grid_search(scalar_system(c.f, c.g), InputBounds(Eigen::VectorXd::Constant(1, c.gamma)));
        const double reach = c.g * std::sqrt(c.gamma) / (1.0 - std::abs(c.f));
        const double bound = std::sqrt(result.ellipsoid.alpha / result.ellipsoid.P(0, 0));
        REQUIRE_THAT(bound, WithinRel(reach, 0.01));
        REQUIRE_THAT(result.a_star, WithinAbs(std::abs(c.f), 0.011));
    }
}

TEST_CASE("common-bound shortcut equals the scaled unit solve exactly") {
    const LtiSystem sys = example_system();
    const GridSpec grid{0.05, 0.05, 0.95};
    const double gamma = 4.0;
    const auto unit = grid_search(sys, InputBounds(Eigen::VectorXd::Ones(2)), grid);
    const auto common = common_bound_analysis(sys, gamma, grid);

    REQUIRE(common.a_star == unit.a_star);
    REQUIRE((common.ellipsoid.P - unit.ellipsoid.P / gamma).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE_THAT(common.volume, WithinRel(unit.volume * gamma, 1e-12));  // n = 2: gamma^{n/2} = gamma
}

TEST_CASE("common-bound shortcut agrees with the direct equal-bounds solve") {
    const LtiSystem sys = example_system();
    const GridSpec grid{0.05, 0.05, 0.95};
    const double gamma = 4.0;
    const auto direct = grid_search(sys, InputBounds(Eigen::VectorXd::Constant(2, gamma)), grid);
    const auto common = common_bound_analysis(sys, gamma, grid);

    REQUIRE(common.a_star == direct.a_star);
    REQUIRE_THAT(common.volume, WithinRel(direct.volume, 1e-6));
    REQUIRE((common.ellipsoid.P - direct.ellipsoid.P).cwiseAbs().maxCoeff() <
            1e-6 * direct.ellipsoid.P.cwiseAbs().maxCoeff());

    REQUIRE_THROWS_AS(common_bound_analysis(sys, 0.0, grid), ModelError);
}

TEST_CASE("point solve validates input dimensions") {
    REQUIRE_THROWS_AS(solve_analysis_at(example_system(), InputBounds(Eigen::VectorXd::Ones(3)), 0.5), ModelError);
}
