#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reachbound/model.hpp"

namespace reachbound::sdp {

enum class Structure { FullSymmetric, Diagonal };

/// A named matrix decision variable. Full-symmetric variables are packed as the
/// upper triangle in row-major order; diagonal variables pack their diagonal.
struct MatrixVariable {
    std::string name;
    int dim = 0;
    Structure structure = Structure::FullSymmetric;

    int entries() const {
        return structure == Structure::FullSymmetric ? dim * (dim + 1) / 2 : dim;
    }
};

/// Symmetric basis matrices matching the FullSymmetric packing order:
/// E_k has a 1 on the diagonal or 1s at the mirrored off-diagonal pair, so
/// P = sum_k v_k E_k with v_k equal to the packed entry of P.
inline std::vector<Eigen::MatrixXd> symmetric_basis(int n) {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(n * (n + 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
            e(i, j) = 1.0;
            e(j, i) = 1.0;
            out.push_back(std::move(e));
        }
    return out;
}

/// Ordered collection of variables sharing one packed vector.
struct VariableSet {
    std::vector<MatrixVariable> vars;

    int total() const {
        int t = 0;
        for (const auto& v : vars) t += v.entries();
        return t;
    }

    int offset(const std::string& name) const {
        int off = 0;
        for (const auto& v : vars) {
            if (v.name == name) return off;
            off += v.entries();
        }
        throw ModelError("unknown variable: " + name);
    }

    const MatrixVariable& find(const std::string& name) const {
        for (const auto& v : vars)
            if (v.name == name) return v;
        throw ModelError("unknown variable: " + name);
    }

    /// Reconstruct the named matrix from a packed vector.
    Eigen::MatrixXd unpack(const Eigen::VectorXd& v, const std::string& name) const {
        const auto& mv = find(name);
        const int off = offset(name);
        if (mv.structure == Structure::Diagonal) {
            return v.segment(off, mv.dim).asDiagonal();
        }
        Eigen::MatrixXd out(mv.dim, mv.dim);
        int k = off;
        for (int i = 0; i < mv.dim; ++i)
            for (int j = i; j < mv.dim; ++j) {
                out(i, j) = v[k];
                out(j, i) = v[k];
                ++k;
            }
        return out;
    }
};

enum class Sense { Psd, Pd };

/// Affine LMI: constant + sum_k v_k * coeff[k]  (>= 0 or > 0).
/// coeff has one symmetric matrix per packed scalar variable.
struct AffineLmiConstraint {
    Eigen::MatrixXd constant;
    std::vector<Eigen::MatrixXd> coeff;
    Sense sense = Sense::Psd;
    std::string label;

    Eigen::MatrixXd value(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd a = constant;
        for (int k = 0; k < static_cast<int>(coeff.size()); ++k)
            if (v[k] != 0.0 && coeff[k].size() > 0) a += v[k] * coeff[k];
        return a;
    }
};

struct Objective {
    enum class Kind { NegLogDet, Linear };
    Kind kind = Kind::Linear;
    // NegLogDet: f(v) = -log det(C0 + sum v_k M0_k)
    Eigen::MatrixXd C0;
    std::vector<Eigen::MatrixXd> M0;
    // Linear: f(v) = w . v
    Eigen::VectorXd w;

    /// -log det of a full-symmetric variable.
    static Objective neg_log_det(const VariableSet& vs, const std::string& name) {
        const auto& mv = vs.find(name);
        if (mv.structure != Structure::FullSymmetric)
            throw ModelError("neg_log_det requires a full-symmetric variable");
        Objective o;
        o.kind = Kind::NegLogDet;
        o.C0 = Eigen::MatrixXd::Zero(mv.dim, mv.dim);
        o.M0.assign(vs.total(), Eigen::MatrixXd());
        auto basis = symmetric_basis(mv.dim);
        const int off = vs.offset(name);
        for (int k = 0; k < static_cast<int>(basis.size()); ++k) o.M0[off + k] = basis[k];
        return o;
    }

    /// trace of a diagonal variable (optionally weighted).
    static Objective linear_trace(const VariableSet& vs, const std::string& name, double weight = 1.0) {
        const auto& mv = vs.find(name);
        if (mv.structure != Structure::Diagonal)
            throw ModelError("linear_trace requires a diagonal variable");
        Objective o;
        o.kind = Kind::Linear;
        o.w = Eigen::VectorXd::Zero(vs.total());
        const int off = vs.offset(name);
        for (int i = 0; i < mv.dim; ++i) o.w[off + i] = weight;
        return o;
    }

    static Objective linear(Eigen::VectorXd weights) {
        Objective o;
        o.kind = Kind::Linear;
        o.w = std::move(weights);
        return o;
    }
};

struct SolverConfig {
    double t0 = 1.0;            // initial barrier weight
    double mu = 10.0;           // per-stage multiplier
    double gap_tol = 1e-9;      // stop when (barrier dof)/t <= gap_tol
    double newton_tol = 1e-10;  // on the decrement lambda^2/2
    int max_newton = 200;       // per centering stage
    int max_stages = 64;
    double armijo = 0.01;
    double shrink = 0.5;
    double var_bound = 1e6;       // |v_k| < var_bound keeps all sublevel sets compact
    double strict_margin = 1e-6;  // phase-I early feasible exit
    double infeas_tol = 1e-9;     // declare Infeasible when optimal slack >= -infeas_tol
};

enum class Status { Optimal, Infeasible, MaxIterations, NumericalFailure };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::MaxIterations: return "max-iterations";
        case Status::NumericalFailure: return "numerical-failure";
    }
    return "?";
}

struct SolveReport {
    Status status = Status::NumericalFailure;
    Eigen::VectorXd v;          // packed variables at exit
    double objective = 0.0;     // f(v)
    double worst_violation = 0.0;  // most negative min_eig over all constraints
    int iterations = 0;         // total Newton iterations (both phases)
    double gap = 0.0;           // centering gap (barrier dof / t) at exit
    std::vector<double> stage_objectives;  // objective after each centering stage
};

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eig(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((a + a.transpose()) / 2.0, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
    return es.eigenvalues().minCoeff();
}

/// feas_tol = 1e-8 * (1 + largest constraint-matrix magnitude).
inline double feasibility_tolerance(const std::vector<AffineLmiConstraint>& constraints) {
    double mag = 0.0;
    for (const auto& c : constraints) {
        mag = std::max(mag, c.constant.cwiseAbs().maxCoeff());
        for (const auto& m : c.coeff)
            if (m.size() > 0) mag = std::max(mag, m.cwiseAbs().maxCoeff());
    }
    return 1e-8 * (1.0 + mag);
}

namespace detail {

// Indices of nonzero coefficient matrices, computed once per solve.
struct LmiView {
    const AffineLmiConstraint* c;
    std::vector<int> nz;
    bool plus_s;  // phase-I slack: constraint value gets + s*I
};

inline std::vector<LmiView> make_views(const std::vector<AffineLmiConstraint>& cs, bool plus_s) {
    std::vector<LmiView> views;
    views.reserve(cs.size());
    for (const auto& c : cs) {
        LmiView v{&c, {}, plus_s};
        for (int k = 0; k < static_cast<int>(c.coeff.size()); ++k)
            if (c.coeff[k].size() > 0 && c.coeff[k].cwiseAbs().maxCoeff() != 0.0) v.nz.push_back(k);
        views.push_back(std::move(v));
    }
    return views;
}

// v layout: [x (nvar); s] when s_index >= 0, else just x.
inline Eigen::MatrixXd lmi_value(const LmiView& view, const Eigen::VectorXd& v, int s_index) {
    Eigen::MatrixXd a = view.c->constant;
    for (int k : view.nz) a += v[k] * view.c->coeff[k];
    if (view.plus_s && s_index >= 0) a += v[s_index] * Eigen::MatrixXd::Identity(a.rows(), a.cols());
    return a;
}

// Accumulates -log det barrier value/gradient/Hessian of one LMI. Returns false
// if the matrix is not positive definite.
inline bool barrier_accumulate(const LmiView& view, const Eigen::VectorXd& v, int s_index,
                               double* val, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const Eigen::MatrixXd a = lmi_value(view, v, s_index);
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return false;
    const auto L = llt.matrixL();
    if (val) *val += -2.0 * L.toDenseMatrix().diagonal().array().log().sum();
    if (!grad) return true;

    std::vector<int> idx = view.nz;
    if (view.plus_s && s_index >= 0) idx.push_back(s_index);
    std::vector<Eigen::MatrixXd> s_mats;
    s_mats.reserve(idx.size());
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    for (int k : idx) {
        const Eigen::MatrixXd& mk = (view.plus_s && k == s_index) ? eye : view.c->coeff[k];
        Eigen::MatrixXd half = L.solve(mk);                       // L^{-1} M
        Eigen::MatrixXd sk = L.solve(half.transpose()).transpose();  // L^{-1} M L^{-T}
        (*grad)[k] += -sk.trace();
        s_mats.push_back(std::move(sk));
    }
    if (hess) {
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = i; j < idx.size(); ++j) {
                const double hij = s_mats[i].cwiseProduct(s_mats[j]).sum();
                (*hess)(idx[i], idx[j]) += hij;
                if (idx[i] != idx[j]) (*hess)(idx[j], idx[i]) += hij;
            }
    }
    return true;
}

// Box barrier -log(B - v_k) - log(B + v_k) over the first nvar entries.
inline bool box_accumulate(const Eigen::VectorXd& v, int nvar, double bound,
                           double* val, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    for (int k = 0; k < nvar; ++k) {
        const double lo = bound + v[k], hi = bound - v[k];
        if (lo <= 0.0 || hi <= 0.0) return false;
        if (val) *val += -std::log(lo) - std::log(hi);
        if (grad) (*grad)[k] += 1.0 / hi - 1.0 / lo;
        if (hess) (*hess)(k, k) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }
    return true;
}

struct ObjectiveEval {
    bool ok = false;
    double val = 0.0;
};

// t * f(v) contribution; NegLogDet handled with the same barrier machinery.
inline ObjectiveEval objective_accumulate(const Objective& obj, const Eigen::VectorXd& v, double t,
                                          Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    ObjectiveEval r;
    if (obj.kind == Objective::Kind::Linear) {
        r.val = obj.w.dot(v.head(obj.w.size()));
        if (grad) grad->head(obj.w.size()) += t * obj.w;
        r.ok = true;
        return r;
    }
    AffineLmiConstraint c{obj.C0, obj.M0, Sense::Pd, "objective"};
    LmiView view{&c, {}, false};
    for (int k = 0; k < static_cast<int>(obj.M0.size()); ++k)
        if (obj.M0[k].size() > 0 && obj.M0[k].cwiseAbs().maxCoeff() != 0.0) view.nz.push_back(k);
    double val = 0.0;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(v.size());
    Eigen::MatrixXd h;
    if (hess) h = Eigen::MatrixXd::Zero(v.size(), v.size());
    if (!barrier_accumulate(view, v, -1, &val, grad ? &g : nullptr, hess ? &h : nullptr)) return r;
    r.val = val;
    if (grad) *grad += t * g;
    if (hess) *hess += t * h;
    r.ok = true;
    return r;
}

// Potential t*f + sum -log det over LMIs and box. nullopt when outside the interior.
inline std::optional<double> potential(const Objective* obj, double t, const std::vector<LmiView>& views,
                                       const Eigen::VectorXd& v, int nvar, double bound, int s_index) {
    double total = 0.0;
    if (obj) {
        auto r = objective_accumulate(*obj, v, t, nullptr, nullptr);
        if (!r.ok) return std::nullopt;
        total += t * r.val;
    }
    for (const auto& view : views) {
        double val = 0.0;
        if (!barrier_accumulate(view, v, s_index, &val, nullptr, nullptr)) return std::nullopt;
        total += val;
    }
    double bval = 0.0;
    if (!box_accumulate(v, nvar, bound, &bval, nullptr, nullptr)) return std::nullopt;
    return total + bval;
}

// Newton direction with escalating diagonal regularization.
inline Eigen::VectorXd newton_direction(Eigen::MatrixXd h, const Eigen::VectorXd& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) return -llt.solve(g);
    const double base = 1e-12 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    for (double reg = base; reg <= 1e20; reg *= 10.0) {
        Eigen::MatrixXd hreg = h + reg * Eigen::MatrixXd::Identity(h.rows(), h.cols());
        Eigen::LLT<Eigen::MatrixXd> l2(hreg);
        if (l2.info() == Eigen::Success) return -l2.solve(g);
    }
    throw NumericError("Newton system singular beyond regularization");
}

struct CenterOutcome {
    int iterations = 0;
    bool line_search_stalled = false;
};

// Minimize t*f(v) + barrier by damped Newton; v is updated in place.
// obj == nullptr together with lin_w models a plain linear objective on the
// augmented phase-I vector.
inline CenterOutcome center(const Objective* obj, const Eigen::VectorXd* lin_w, double t,
                            const std::vector<LmiView>& views, Eigen::VectorXd& v, int nvar,
                            const SolverConfig& cfg, int s_index,
                            double early_exit_below = -std::numeric_limits<double>::infinity()) {
    CenterOutcome out;
    const int dim = static_cast<int>(v.size());
    for (int it = 0; it < cfg.max_newton; ++it) {
        ++out.iterations;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        if (obj) {
            auto r = objective_accumulate(*obj, v, t, &g, &h);
            if (!r.ok) throw NumericError("objective matrix lost positive definiteness");
        }
        if (lin_w) g += t * (*lin_w);
        for (const auto& view : views)
            if (!barrier_accumulate(view, v, s_index, nullptr, &g, &h))
                throw NumericError("iterate left the feasible interior");
        if (!box_accumulate(v, nvar, cfg.var_bound, nullptr, &g, &h))
            throw NumericError("iterate left the variable box");

        const Eigen::VectorXd dv = newton_direction(h, g);
        const double decrement = -g.dot(dv) / 2.0;
        if (decrement <= cfg.newton_tol) break;

        const double f0 = *potential(obj, t, views, v, nvar, cfg.var_bound, s_index) +
                          (lin_w ? t * lin_w->dot(v) : 0.0);
        const double slope = g.dot(dv);
        double alpha = 1.0;
        bool stalled = false;
        Eigen::VectorXd vn;
        while (true) {
            vn = v + alpha * dv;
            auto fn = potential(obj, t, views, vn, nvar, cfg.var_bound, s_index);
            if (fn && *fn + (lin_w ? t * lin_w->dot(vn) : 0.0) <= f0 + cfg.armijo * alpha * slope) break;
            alpha *= cfg.shrink;
            if (alpha < 1e-18) {
                stalled = true;
                break;
            }
        }
        if (stalled) {
            out.line_search_stalled = true;
            break;
        }
        v = vn;
        if (s_index >= 0 && v[s_index] <= early_exit_below) break;
    }
    return out;
}

struct Phase1Result {
    bool feasible = false;
    Eigen::VectorXd v;
    int iterations = 0;
    bool exhausted = false;
};

// Minimize s subject to LMI_j(v) + s*I > 0 and the variable box, starting from
// v = 0 and s = 1 + magnitude bound. Early exit once a strictly interior point
// is found; the central-path bound s* >= s(t) - nu/t certifies infeasibility.
inline Phase1Result phase1(const std::vector<AffineLmiConstraint>& constraints, int nvar,
                           const SolverConfig& cfg) {
    auto views = make_views(constraints, /*plus_s=*/true);
    double s0 = 1.0;
    int nu = 2 * nvar;
    for (const auto& c : constraints) {
        s0 = std::max(s0, 1.0 - min_eig(c.constant));
        nu += static_cast<int>(c.constant.rows());
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(nvar + 1);
    v[nvar] = s0;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(nvar + 1);
    w[nvar] = 1.0;

    Phase1Result out;
    double t = cfg.t0;
    for (int stage = 0; stage < cfg.max_stages; ++stage) {
        auto c = center(nullptr, &w, t, views, v, nvar, cfg, nvar, -cfg.strict_margin);
        out.iterations += c.iterations;
        if (v[nvar] <= -cfg.strict_margin) {
            out.feasible = true;
            out.v = v.head(nvar);
            return out;
        }
        if (v[nvar] - static_cast<double>(nu) / t >= -cfg.infeas_tol) {
            out.feasible = v[nvar] < 0.0;
            out.v = v.head(nvar);
            return out;
        }
        t *= cfg.mu;
    }
    out.exhausted = true;
    out.v = v.head(nvar);
    return out;
}

}  // namespace detail

/// Barrier path-following solve of
///   minimize f(v)  subject to  constant_j + sum_k v_k coeff_jk  >(=) 0,
/// where f is -log det of an affine matrix form or a linear functional.
/// Deterministic for fixed inputs and config.
inline SolveReport solve(const VariableSet& vars, const std::vector<AffineLmiConstraint>& constraints,
                         const Objective& objective, const SolverConfig& cfg = {}) {
    const int nvar = vars.total();
    for (const auto& c : constraints) {
        if (static_cast<int>(c.coeff.size()) != nvar)
            throw ModelError("constraint coefficient count does not match variable count");
        if (c.constant.rows() != c.constant.cols()) throw ModelError("constraint matrices must be square");
    }

    SolveReport report;
    report.v = Eigen::VectorXd::Zero(nvar);
    try {
        auto p1 = detail::phase1(constraints, nvar, cfg);
        report.iterations += p1.iterations;
        if (p1.exhausted) {
            report.status = Status::MaxIterations;
            return report;
        }
        if (!p1.feasible) {
            report.status = Status::Infeasible;
            return report;
        }

        auto views = detail::make_views(constraints, /*plus_s=*/false);
        int nu = 2 * nvar;
        for (const auto& c : constraints) nu += static_cast<int>(c.constant.rows());

        Eigen::VectorXd v = p1.v;
        double t = cfg.t0;
        bool converged = false;
        for (int stage = 0; stage < cfg.max_stages; ++stage) {
            auto c = detail::center(&objective, nullptr, t, views, v, nvar, cfg, -1);
            report.iterations += c.iterations;
            auto obj_now = detail::objective_accumulate(objective, v, 1.0, nullptr, nullptr);
            report.stage_objectives.push_back(obj_now.val);
            report.gap = static_cast<double>(nu) / t;
            if (report.gap <= cfg.gap_tol) {
                converged = true;
                break;
            }
            t *= cfg.mu;
        }
        report.v = v;
        auto obj_final = detail::objective_accumulate(objective, v, 1.0, nullptr, nullptr);
        report.objective = obj_final.val;
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& c : constraints) worst = std::min(worst, min_eig(c.value(v)));
        report.worst_violation = worst;
        report.status = converged ? Status::Optimal : Status::MaxIterations;
    } catch (const NumericError&) {
        report.status = Status::NumericalFailure;
    }
    return report;
}

}  // namespace reachbound::sdp
