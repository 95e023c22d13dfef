#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "reachbound/model.hpp"
#include "reachbound/sdp.hpp"

namespace reachbound {

/// No grid point admits a feasible solve.
struct AllInfeasible : Error {
    using Error::Error;
};

/// Uniform grid over the decay parameter a in (0,1).
struct GridSpec {
    double start = 0.01;
    double step = 0.01;
    double stop = 0.99;

    std::vector<double> points() const {
        detail::require(std::isfinite(start) && std::isfinite(step) && std::isfinite(stop), "grid must be finite");
        detail::require(step > 0.0, "grid step must be positive");
        detail::require(start > 0.0 && stop < 1.0 && start <= stop, "grid must lie inside (0,1)");
        std::vector<double> out;
        for (int k = 0;; ++k) {
            const double a = start + k * step;
            if (a > stop + 1e-12) break;
            out.push_back(a);
        }
        return out;
    }
};

struct PerALog {
    double a;
    sdp::Status status;
    double volume;  // NaN unless optimal
};

struct AnalysisResult {
    Ellipsoid ellipsoid;  // E(P, m)
    double a_star;
    double volume;
    std::vector<PerALog> log;
};

/// Theorem-1 constraint system in the variable P (full-symmetric n x n):
/// [[aP - F'PF, -F'PG], [-G'PF, (1-a)R - G'PG]] >= 0 and P > 0.
inline std::vector<sdp::AffineLmiConstraint> assemble_analysis_lmi(const LtiSystem& sys,
                                                                   const Eigen::MatrixXd& R, double a) {
    detail::require(a > 0.0 && a < 1.0, "a must lie in (0,1)");
    detail::require(R.rows() == sys.m() && R.cols() == sys.m(), "R must be m x m");
    const int n = static_cast<int>(sys.n());
    const int m = static_cast<int>(sys.m());
    const auto basis = sdp::symmetric_basis(n);
    const int nvar = static_cast<int>(basis.size());

    sdp::AffineLmiConstraint big;
    big.label = "analysis-lmi";
    big.sense = sdp::Sense::Psd;
    big.constant = Eigen::MatrixXd::Zero(n + m, n + m);
    big.constant.bottomRightCorner(m, m) = (1.0 - a) * R;
    big.coeff.resize(nvar);
    for (int k = 0; k < nvar; ++k) {
        const Eigen::MatrixXd& e = basis[k];
        Eigen::MatrixXd blk(n + m, n + m);
        blk.topLeftCorner(n, n) = a * e - sys.F.transpose() * e * sys.F;
        blk.topRightCorner(n, m) = -sys.F.transpose() * e * sys.G;
        blk.bottomLeftCorner(m, n) = blk.topRightCorner(n, m).transpose();
        blk.bottomRightCorner(m, m) = -sys.G.transpose() * e * sys.G;
        big.coeff[k] = std::move(blk);
    }

    sdp::AffineLmiConstraint pd;
    pd.label = "P-positive";
    pd.sense = sdp::Sense::Pd;
    pd.constant = Eigen::MatrixXd::Zero(n, n);
    pd.coeff = basis;

    return {std::move(big), std::move(pd)};
}

struct AnalysisPoint {
    sdp::Status status;
    std::optional<Ellipsoid> ellipsoid;
    double volume = std::numeric_limits<double>::quiet_NaN();
    sdp::SolveReport report;
};

/// min -log det P at a fixed decay parameter.
inline AnalysisPoint solve_analysis_at(const LtiSystem& sys, const InputBounds& bounds, double a,
                                       const sdp::SolverConfig& cfg = {}) {
    detail::require(bounds.m() == sys.m(), "bounds dimension must match the input count");
    const int n = static_cast<int>(sys.n());
    sdp::VariableSet vs{{{"P", n, sdp::Structure::FullSymmetric}}};
    auto constraints = assemble_analysis_lmi(sys, input_weight(bounds), a);
    auto objective = sdp::Objective::neg_log_det(vs, "P");

    AnalysisPoint out;
    out.report = sdp::solve(vs, constraints, objective, cfg);
    out.status = out.report.status;
    if (out.status == sdp::Status::Optimal) {
        Eigen::MatrixXd p = vs.unpack(out.report.v, "P");
        out.ellipsoid.emplace(std::move(p), static_cast<double>(sys.m()));
        out.volume = ellipsoid_volume(*out.ellipsoid);
    }
    return out;
}

namespace detail {

template <typename Fn>
inline void for_each_grid_point(const std::vector<double>& grid, int threads, Fn&& fn) {
    const int nth = std::max(1, threads);
    if (nth == 1 || grid.size() <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (grid.size() + nth - 1) / nth;
    for (int t = 0; t < nth; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(grid.size(), lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Grid search over a; among feasible points returns the minimum-volume
/// ellipsoid E(P, m). Ties (1e-9 relative volume) go to the smallest a.
inline AnalysisResult grid_search(const LtiSystem& sys, const InputBounds& bounds, const GridSpec& grid = {},
                                  int threads = 1, const sdp::SolverConfig& cfg = {}) {
    const auto avals = grid.points();
    detail::require(avals.size() >= 2, "grid must contain at least 2 points");

    std::vector<AnalysisPoint> pts(avals.size());
    detail::for_each_grid_point(avals, threads, [&](std::size_t i) {
        pts[i] = solve_analysis_at(sys, bounds, avals[i], cfg);
    });

    std::vector<PerALog> log;
    log.reserve(avals.size());
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < avals.size(); ++i) {
        log.push_back({avals[i], pts[i].status, pts[i].volume});
        if (pts[i].status != sdp::Status::Optimal) continue;
        if (!best || pts[i].volume < pts[*best].volume * (1.0 - 1e-9)) best = i;
    }
    if (!best) throw AllInfeasible("no grid point admits a feasible analysis solution");
    return AnalysisResult{*pts[*best].ellipsoid, avals[*best], pts[*best].volume, std::move(log)};
}

/// Remark-2 shortcut for a common bound gamma on every channel: solve once with
/// R = I obtaining P-hat, then rescale to E((1/gamma) P-hat, m).
inline AnalysisResult common_bound_analysis(const LtiSystem& sys, double gamma, const GridSpec& grid = {},
                                            int threads = 1, const sdp::SolverConfig& cfg = {}) {
    detail::require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
    InputBounds unit{Eigen::VectorXd::Ones(sys.m())};
    AnalysisResult hat = grid_search(sys, unit, grid, threads, cfg);
    const int n = static_cast<int>(sys.n());
    const double scale = std::pow(gamma, n / 2.0);
    Ellipsoid scaled{hat.ellipsoid.P * (1.0 / gamma), hat.ellipsoid.alpha};
    for (auto& entry : hat.log) entry.volume *= scale;
    return AnalysisResult{std::move(scaled), hat.a_star, hat.volume * scale, std::move(hat.log)};
}

}  // namespace reachbound
