#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "reachbound/analysis.hpp"
#include "reachbound/model.hpp"
#include "reachbound/sdp.hpp"

namespace reachbound {

struct SynthesisResult {
    enum class Path { PerChannel, EqualBound };

    Eigen::VectorXd gamma_hat;  // synthesized bounds, gamma_hat_i = 1/rhat_i
    Eigen::VectorXd rhat;       // diagonal of R-hat
    Eigen::MatrixXd Y;          // ellipsoid is E(Y^{-1}, m)
    Ellipsoid ellipsoid;
    double a_star;
    std::vector<int> active;  // half-spaces with c'Yc within tolerance of b^2/m
    std::vector<PerALog> log;
    Path path = Path::PerChannel;
};

/// Theorem-2 constraint system in (Y, R-hat):
/// [[aY, 0, YF'], [0, (1-a)R-hat, G'], [FY, G, Y]] >= 0, Y > 0, rhat_i >= 1/gamma_i.
inline std::vector<sdp::AffineLmiConstraint> assemble_synthesis_lmi(const LtiSystem& sys,
                                                                    const InputBounds& bounds, double a) {
    detail::require(a > 0.0 && a < 1.0, "a must lie in (0,1)");
    detail::require(bounds.m() == sys.m(), "bounds dimension must match the input count");
    const int n = static_cast<int>(sys.n());
    const int m = static_cast<int>(sys.m());
    const auto basis = sdp::symmetric_basis(n);
    const int ny = static_cast<int>(basis.size());
    const int nvar = ny + m;
    const int dim = 2 * n + m;

    sdp::AffineLmiConstraint big;
    big.label = "synthesis-lmi";
    big.sense = sdp::Sense::Psd;
    big.constant = Eigen::MatrixXd::Zero(dim, dim);
    big.constant.block(n, n + m, m, n) = sys.G.transpose();
    big.constant.block(n + m, n, n, m) = sys.G;
    big.coeff.resize(nvar);
    for (int k = 0; k < ny; ++k) {
        const Eigen::MatrixXd& e = basis[k];
        Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(dim, dim);
        blk.topLeftCorner(n, n) = a * e;
        blk.block(0, n + m, n, n) = e * sys.F.transpose();
        blk.block(n + m, 0, n, n) = sys.F * e;
        blk.bottomRightCorner(n, n) = e;
        big.coeff[k] = std::move(blk);
    }
    for (int i = 0; i < m; ++i) {
        Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(dim, dim);
        blk(n + i, n + i) = 1.0 - a;
        big.coeff[ny + i] = std::move(blk);
    }

    sdp::AffineLmiConstraint ypd;
    ypd.label = "Y-positive";
    ypd.sense = sdp::Sense::Pd;
    ypd.constant = Eigen::MatrixXd::Zero(n, n);
    ypd.coeff.resize(nvar);
    for (int k = 0; k < ny; ++k) ypd.coeff[k] = basis[k];

    std::vector<sdp::AffineLmiConstraint> out;
    out.push_back(std::move(big));
    out.push_back(std::move(ypd));
    for (int i = 0; i < m; ++i) {
        sdp::AffineLmiConstraint lb;
        lb.label = "rhat-lower-bound";
        lb.sense = sdp::Sense::Psd;
        lb.constant = Eigen::MatrixXd::Constant(1, 1, -1.0 / bounds.gamma[i]);
        lb.coeff.resize(nvar);
        lb.coeff[ny + i] = Eigen::MatrixXd::Identity(1, 1);
        out.push_back(std::move(lb));
    }
    return out;
}

/// The kappa scalar constraints b_i^2/m - c_i' Y c_i >= 0 as 1x1 LMIs.
inline std::vector<sdp::AffineLmiConstraint> danger_margin_constraints(const LtiSystem& sys,
                                                                       const DangerSet& danger, int nvar) {
    const int n = static_cast<int>(sys.n());
    const int m = static_cast<int>(sys.m());
    const auto basis = sdp::symmetric_basis(n);
    std::vector<sdp::AffineLmiConstraint> out;
    for (const auto& h : danger.halfspaces) {
        detail::require(h.c.size() == n, "danger half-space dimension mismatch");
        sdp::AffineLmiConstraint c;
        c.label = "danger-margin";
        c.sense = sdp::Sense::Psd;
        c.constant = Eigen::MatrixXd::Constant(1, 1, h.b * h.b / m);
        c.coeff.resize(nvar);
        for (int k = 0; k < static_cast<int>(basis.size()); ++k)
            c.coeff[k] = Eigen::MatrixXd::Constant(1, 1, -h.c.dot(basis[k] * h.c));
        out.push_back(std::move(c));
    }
    return out;
}

struct SynthesisPoint {
    sdp::Status status;
    Eigen::MatrixXd Y;
    Eigen::VectorXd rhat;
    Eigen::VectorXd gamma_hat;
    sdp::SolveReport report;
};

/// min tr(R-hat) at a fixed decay parameter.
inline SynthesisPoint solve_synthesis_at(const LtiSystem& sys, const InputBounds& bounds,
                                         const DangerSet& danger, double a,
                                         const sdp::SolverConfig& cfg = {}) {
    const int n = static_cast<int>(sys.n());
    const int m = static_cast<int>(sys.m());
    sdp::VariableSet vs{{{"Y", n, sdp::Structure::FullSymmetric}, {"Rhat", m, sdp::Structure::Diagonal}}};
    auto constraints = assemble_synthesis_lmi(sys, bounds, a);
    auto margins = danger_margin_constraints(sys, danger, vs.total());
    constraints.insert(constraints.end(), margins.begin(), margins.end());
    auto objective = sdp::Objective::linear_trace(vs, "Rhat");

    SynthesisPoint out;
    out.report = sdp::solve(vs, constraints, objective, cfg);
    out.status = out.report.status;
    if (out.status == sdp::Status::Optimal) {
        out.Y = vs.unpack(out.report.v, "Y");
        out.rhat = out.report.v.tail(m);
        out.gamma_hat = out.rhat.cwiseInverse().cwiseMin(bounds.gamma);
    }
    return out;
}

namespace detail {

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a) {
    return Eigen::LLT<Eigen::MatrixXd>(a).solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

inline std::vector<int> active_halfspaces(const Eigen::MatrixXd& y, const DangerSet& danger, int m,
                                          double tol = 1e-6) {
    std::vector<int> out;
    for (std::size_t i = 0; i < danger.size(); ++i) {
        const auto& h = danger.halfspaces[i];
        if (h.c.dot(y * h.c) >= h.b * h.b / m - tol) out.push_back(static_cast<int>(i));
    }
    return out;
}

inline void verify_synthesis(const SynthesisResult& r, const InputBounds& bounds, const DangerSet& danger) {
    for (const auto& h : danger.halfspaces)
        if (hyperplane_distance(r.ellipsoid, h.c, h.b) < -1e-6)
            throw NumericError("synthesized ellipsoid crosses a dangerous half-space");
    for (Eigen::Index i = 0; i < bounds.gamma.size(); ++i)
        if (r.gamma_hat[i] > bounds.gamma[i] + 1e-9)
            throw NumericError("synthesized bound exceeds the physical bound");
}

}  // namespace detail

/// Theorem-2 synthesis. The decay parameter is fixed to the analysis grid
/// optimum under the original bounds (the volume-optimal a for the system),
/// then tr(R-hat) is minimized there; remaining feasible grid points serve as
/// fallbacks in volume order.
inline SynthesisResult synthesize(const LtiSystem& sys, const InputBounds& bounds, const DangerSet& danger,
                                  const GridSpec& grid = {}, int threads = 1,
                                  const sdp::SolverConfig& cfg = {}) {
    const int m = static_cast<int>(sys.m());
    AnalysisResult base = grid_search(sys, bounds, grid, threads, cfg);

    if (danger.empty()) {
        Eigen::MatrixXd y = detail::spd_inverse(base.ellipsoid.P);
        SynthesisResult r{bounds.gamma,
                          bounds.gamma.cwiseInverse(),
                          y,
                          base.ellipsoid,
                          base.a_star,
                          {},
                          std::move(base.log),
                          SynthesisResult::Path::PerChannel};
        return r;
    }

    // feasible grid points by ascending analysis volume, best first
    std::vector<const PerALog*> order;
    for (const auto& e : base.log)
        if (e.status == sdp::Status::Optimal) order.push_back(&e);
    std::stable_sort(order.begin(), order.end(),
                     [](const PerALog* x, const PerALog* y) { return x->volume < y->volume; });

    for (const PerALog* entry : order) {
        SynthesisPoint pt = solve_synthesis_at(sys, bounds, danger, entry->a, cfg);
        if (pt.status != sdp::Status::Optimal) continue;
        Ellipsoid e{detail::spd_inverse(pt.Y), static_cast<double>(m)};
        SynthesisResult r{pt.gamma_hat,
                          pt.rhat,
                          pt.Y,
                          std::move(e),
                          entry->a,
                          detail::active_halfspaces(pt.Y, danger, m),
                          base.log,
                          SynthesisResult::Path::PerChannel};
        detail::verify_synthesis(r, bounds, danger);
        return r;
    }
    throw AllInfeasible("no grid point admits a feasible synthesis solution");
}

/// Corollary-1 equal-bound synthesis: solve the R = I analysis for P-hat over
/// the grid, then gamma-hat = min(min_i b_i^2 / (m c_i' P-hat^{-1} c_i), min_i gamma_i).
inline SynthesisResult equal_bound_synthesis(const LtiSystem& sys, const InputBounds& bounds,
                                             const DangerSet& danger, const GridSpec& grid = {},
                                             int threads = 1, const sdp::SolverConfig& cfg = {}) {
    const int n = static_cast<int>(sys.n());
    const int m = static_cast<int>(sys.m());
    InputBounds unit{Eigen::VectorXd::Ones(m)};
    AnalysisResult hat = grid_search(sys, unit, grid, threads, cfg);
    const Eigen::MatrixXd phat_inv = detail::spd_inverse(hat.ellipsoid.P);

    const double gamma_min = bounds.gamma.minCoeff();
    double gamma = gamma_min;
    for (const auto& h : danger.halfspaces) {
        detail::require(h.c.size() == n, "danger half-space dimension mismatch");
        gamma = std::min(gamma, h.b * h.b / (m * h.c.dot(phat_inv * h.c)));
    }

    Eigen::MatrixXd y = gamma * phat_inv;
    Ellipsoid e{hat.ellipsoid.P * (1.0 / gamma), static_cast<double>(m)};
    const double scale = std::pow(gamma, n / 2.0);
    for (auto& entry : hat.log) entry.volume *= scale;
    SynthesisResult r{Eigen::VectorXd::Constant(m, gamma),
                      Eigen::VectorXd::Constant(m, 1.0 / gamma),
                      std::move(y),
                      std::move(e),
                      hat.a_star,
                      {},
                      std::move(hat.log),
                      SynthesisResult::Path::EqualBound};
    r.active = detail::active_halfspaces(r.Y, danger, m);
    detail::verify_synthesis(r, bounds, danger);
    return r;
}

}  // namespace reachbound
