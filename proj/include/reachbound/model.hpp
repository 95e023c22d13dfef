#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace reachbound {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid model data (dimensions, signs, non-finite entries).
struct ModelError : Error {
    using Error::Error;
};

/// Danger-set normalization failed (origin on the dangerous side).
struct InvalidDangerSet : ModelError {
    using ModelError::ModelError;
};

/// Numeric routine failed to converge (eigen iteration, Riccati, ...).
struct NumericError : Error {
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ModelError(msg);
}

inline bool all_finite(const Eigen::MatrixXd& a) {
    return a.allFinite();
}

}  // namespace detail

/// Discrete-time LTI system x_{k+1} = F x_k + G u_k.
struct LtiSystem {
    Eigen::MatrixXd F;
    Eigen::MatrixXd G;

    LtiSystem(Eigen::MatrixXd F_, Eigen::MatrixXd G_) : F(std::move(F_)), G(std::move(G_)) {
        detail::require(F.rows() >= 1 && F.rows() == F.cols(), "F must be square with n >= 1");
        detail::require(G.rows() == F.rows(), "G must have n rows");
        detail::require(G.cols() >= 1, "G must have m >= 1 columns");
        detail::require(detail::all_finite(F) && detail::all_finite(G), "system matrices must be finite");
    }

    Eigen::Index n() const { return F.rows(); }
    Eigen::Index m() const { return G.cols(); }
};

/// Per-channel squared input limits [u_k]_i^2 <= gamma_i.
struct InputBounds {
    Eigen::VectorXd gamma;

    explicit InputBounds(Eigen::VectorXd g) : gamma(std::move(g)) {
        detail::require(gamma.size() >= 1, "gamma must be non-empty");
        for (Eigen::Index i = 0; i < gamma.size(); ++i)
            detail::require(std::isfinite(gamma[i]) && gamma[i] > 0.0,
                            "gamma[" + std::to_string(i) + "] must be positive and finite");
    }

    Eigen::Index m() const { return gamma.size(); }
};

/// Input weight R = diag(1/gamma_1, ..., 1/gamma_m).
inline Eigen::MatrixXd input_weight(const InputBounds& bounds) {
    return bounds.gamma.cwiseInverse().asDiagonal();
}

/// Origin-centered ellipsoid {x : x^T P x <= alpha} with P symmetric positive definite.
struct Ellipsoid {
    Eigen::MatrixXd P;
    double alpha;

    Ellipsoid(Eigen::MatrixXd P_, double alpha_) : P(std::move(P_)), alpha(alpha_) {
        detail::require(P.rows() >= 1 && P.rows() == P.cols(), "P must be square");
        detail::require(detail::all_finite(P), "P must be finite");
        detail::require(std::isfinite(alpha) && alpha > 0.0, "alpha must be positive");
        const double scale = P.cwiseAbs().maxCoeff();
        const double asym = (P - P.transpose()).cwiseAbs().maxCoeff();
        detail::require(asym <= 1e-10 * (scale > 0 ? scale : 1.0), "P must be symmetric");
        P = ((P + P.transpose()) / 2.0).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
        detail::require(es.info() == Eigen::Success, "eigen decomposition of P failed");
        detail::require(es.eigenvalues().minCoeff() > 0.0, "P must be positive definite");
    }

    Eigen::Index n() const { return P.rows(); }

    /// x^T P x / alpha; membership is level(x) <= 1.
    double level(const Eigen::VectorXd& x) const { return x.dot(P * x) / alpha; }

    bool contains(const Eigen::VectorXd& x, double rel_tol = 1e-9) const {
        return level(x) <= 1.0 + rel_tol;
    }
};

/// Volume of the unit ball in dimension n.
inline double unit_ball_volume(int n) {
    return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

/// vol E(P, alpha) = v_n * alpha^{n/2} * det(P)^{-1/2}.
inline double ellipsoid_volume(const Ellipsoid& e) {
    const int n = static_cast<int>(e.n());
    const double ld = Eigen::LLT<Eigen::MatrixXd>(e.P).matrixL().toDenseMatrix().diagonal().array().log().sum();
    return unit_ball_volume(n) * std::pow(e.alpha, n / 2.0) * std::exp(-ld);
}

/// Signed distance from E(P, alpha) to the hyperplane c^T x = b;
/// negative when the ellipsoid crosses it.
inline double hyperplane_distance(const Ellipsoid& e, const Eigen::VectorXd& c, double b) {
    detail::require(c.size() == e.n(), "dimension mismatch in hyperplane_distance");
    detail::require(c.norm() > 0.0, "c must be nonzero");
    const Eigen::VectorXd w = e.P.ldlt().solve(c);
    const double q = c.dot(w);
    if (!std::isfinite(q) || q <= 0.0) throw NumericError("singular P in hyperplane_distance");
    return (std::abs(b) - std::sqrt(e.alpha * q)) / c.norm();
}

enum class HalfspaceSense { Ge, Le };

/// Half-space {x : c^T x >= b} with b > 0 (origin strictly outside).
struct Halfspace {
    Eigen::VectorXd c;
    double b;
};

/// Canonicalize {c^T x >= b} or {c^T x <= b} to the c'^T x >= b', b' > 0 form.
inline Halfspace normalize_halfspace(const Eigen::VectorXd& c, double b, HalfspaceSense sense) {
    detail::require(c.size() >= 1 && detail::all_finite(c) && c.norm() > 0.0, "c must be nonzero and finite");
    detail::require(std::isfinite(b), "b must be finite");
    Eigen::VectorXd cn = c;
    double bn = b;
    if (sense == HalfspaceSense::Le) {
        cn = -cn;
        bn = -bn;
    }
    if (bn <= 0.0)
        throw InvalidDangerSet("origin lies inside or on the boundary of a dangerous half-space");
    return Halfspace{std::move(cn), bn};
}

/// Union of dangerous half-spaces, stored in normalized form.
struct DangerSet {
    std::vector<Halfspace> halfspaces;

    DangerSet() = default;

    explicit DangerSet(std::vector<Halfspace> hs) : halfspaces(std::move(hs)) {
        for (const auto& h : halfspaces) {
            detail::require(h.c.size() >= 1 && h.c.norm() > 0.0, "half-space normal must be nonzero");
            if (h.b <= 0.0) throw InvalidDangerSet("half-space offset must be positive after normalization");
        }
    }

    std::size_t size() const { return halfspaces.size(); }
    bool empty() const { return halfspaces.empty(); }

    bool contains(const Eigen::VectorXd& x) const {
        for (const auto& h : halfspaces)
            if (h.c.dot(x) >= h.b) return true;
        return false;
    }
};

enum class Boundedness { Bounded, PossiblyUnbounded, Unbounded };

struct BoundednessVerdict {
    Boundedness verdict;
    double spectral_radius;
};

/// Remark-1 style diagnostic: reachable set is bounded iff rho(F) < 1
/// (unit-modulus cases are not resolved further).
inline BoundednessVerdict boundedness_diagnostic(const LtiSystem& sys, double tol = 1e-9) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.F, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw NumericError("eigenvalue iteration failed for F");
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    Boundedness v = Boundedness::PossiblyUnbounded;
    if (rho > 1.0 + tol)
        v = Boundedness::Unbounded;
    else if (rho < 1.0 - tol)
        v = Boundedness::Bounded;
    return BoundednessVerdict{v, rho};
}

}  // namespace reachbound
