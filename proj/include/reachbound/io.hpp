#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "reachbound/analysis.hpp"
#include "reachbound/model.hpp"
#include "reachbound/montecarlo.hpp"
#include "reachbound/platoon.hpp"
#include "reachbound/sdp.hpp"
#include "reachbound/synthesis.hpp"
#include "reachbound/version.hpp"

namespace reachbound::io {

using json = nlohmann::ordered_json;

struct IoError : Error {
    using Error::Error;
};

namespace detail {

using reachbound::detail::require;

inline void expect_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw IoError(ctx + " must be an object");
}

inline void reject_unknown_keys(const json& j, const std::string& ctx,
                                std::initializer_list<const char*> allowed) {
    expect_object(j, ctx);
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) throw IoError("unknown key '" + item.key() + "' in " + ctx);
    }
}

inline double as_double(const json& j, const std::string& field) {
    if (!j.is_number()) throw IoError(field + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw IoError(field + " must be finite");
    return v;
}

inline std::int64_t as_int(const json& j, const std::string& field) {
    if (!j.is_number_integer()) throw IoError(field + " must be an integer");
    return j.get<std::int64_t>();
}

inline std::uint64_t as_seed(const json& j, const std::string& field) {
    if (!j.is_number_unsigned() && !j.is_number_integer())
        throw IoError(field + " must be an integer");
    return j.get<std::uint64_t>();
}

inline bool as_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) throw IoError(field + " must be a boolean");
    return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& field) {
    if (!j.is_string()) throw IoError(field + " must be a string");
    return j.get<std::string>();
}

inline Eigen::VectorXd as_vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw IoError(field + " must be a non-empty array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = as_double(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

inline Eigen::MatrixXd as_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw IoError(field + " must be a non-empty array of rows");
    const std::size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty())
        throw IoError(field + " rows must be non-empty arrays");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw IoError(field + " rows must all have " + std::to_string(cols) + " entries");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_double(
                j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Packs a symmetric matrix in the upper-triangular row-major order used by
/// the solver's variable layout.
inline Eigen::VectorXd pack_symmetric(const Eigen::MatrixXd& p) {
    const Eigen::Index n = p.rows();
    Eigen::VectorXd v(n * (n + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) v(k++) = p(i, j);
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem files

enum class AttackKind { None, Square, Random };

struct PlatoonBlock {
    platoon::PlatoonParams params;
    AttackKind attack_kind = AttackKind::None;
    double attack_start_s = 25.0;
    double attack_period_s = 4.0;
    double attack_amplitude = 1e6;
    std::uint64_t attack_seed = 0;
    std::int64_t attack_max_steps = 65536;
    double duration_s = 100.0;
    std::optional<Eigen::VectorXd> x0;  // deviation coordinates
};

struct Problem {
    std::optional<LtiSystem> system;
    std::optional<InputBounds> bounds;
    std::optional<DangerSet> danger;
    GridSpec grid;
    bool equal_bounds = false;
    std::optional<SampleConfig> monte_carlo;
    std::optional<PlatoonBlock> platoon;
    json raw;
};

inline GridSpec parse_grid_string(const std::string& s) {
    GridSpec g;
    char extra;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf%c", &g.start, &g.step, &g.stop, &extra) != 3)
        throw IoError("grid must have the form start:step:stop");
    g.points();  // validates the range
    return g;
}

namespace detail {

inline GridSpec parse_grid(const json& j) {
    if (j.is_string()) return parse_grid_string(j.get<std::string>());
    reject_unknown_keys(j, "options.grid", {"start", "step", "stop"});
    GridSpec g;
    if (j.contains("start")) g.start = as_double(j["start"], "options.grid.start");
    if (j.contains("step")) g.step = as_double(j["step"], "options.grid.step");
    if (j.contains("stop")) g.stop = as_double(j["stop"], "options.grid.stop");
    g.points();
    return g;
}

inline Policy parse_policy(const std::string& s) {
    if (s == "uniform") return Policy::UniformBox;
    if (s == "bangbang") return Policy::BangBang;
    if (s == "mixed") return Policy::Mixed;
    throw IoError("monte_carlo.policy must be one of uniform, bangbang, mixed");
}

inline SampleConfig parse_monte_carlo(const json& j) {
    reject_unknown_keys(j, "monte_carlo",
                        {"n_traj", "horizon", "seed", "policy", "mixed_ratio"});
    SampleConfig c;
    if (j.contains("n_traj")) c.n_traj = as_int(j["n_traj"], "monte_carlo.n_traj");
    if (j.contains("horizon")) c.horizon = as_int(j["horizon"], "monte_carlo.horizon");
    if (j.contains("seed")) c.seed = as_seed(j["seed"], "monte_carlo.seed");
    if (j.contains("policy")) c.policy = parse_policy(as_string(j["policy"], "monte_carlo.policy"));
    if (j.contains("mixed_ratio"))
        c.mixed_ratio = as_double(j["mixed_ratio"], "monte_carlo.mixed_ratio");
    validate_config(c);
    return c;
}

inline Eigen::VectorXd scalar_or_vector(const json& j, const std::string& field, int size) {
    if (j.is_number()) return Eigen::VectorXd::Constant(size, as_double(j, field));
    Eigen::VectorXd v = as_vector(j, field);
    if (v.size() != size)
        throw IoError(field + " must be a scalar or an array of " + std::to_string(size));
    return v;
}

inline PlatoonBlock parse_platoon(const json& j) {
    reject_unknown_keys(j, "platoon",
                        {"preset", "n_vehicles", "dt", "beta", "kp", "kd", "d_star",
                         "v_star_mps", "v_star_kmh", "attack", "duration_s", "x0"});
    PlatoonBlock blk;
    const bool preset = j.contains("preset");
    if (preset) {
        for (const char* k : {"n_vehicles", "dt", "beta", "kp", "kd", "d_star", "v_star_mps", "v_star_kmh"})
            if (j.contains(k))
                throw IoError(std::string("platoon.preset cannot be combined with platoon.") + k);
        const std::string name = as_string(j["preset"], "platoon.preset");
        if (name != "three-vehicle" && name != "paper-3-vehicle")
            throw IoError("unknown platoon.preset '" + name + "'");
        blk.params = platoon::three_vehicle_preset();
    } else {
        if (!j.contains("n_vehicles")) throw IoError("platoon.n_vehicles is required");
        platoon::PlatoonParams p;
        p.n_vehicles = static_cast<int>(as_int(j["n_vehicles"], "platoon.n_vehicles"));
        if (p.n_vehicles < 2) throw IoError("platoon.n_vehicles must be >= 2");
        if (j.contains("dt")) p.dt = as_double(j["dt"], "platoon.dt");
        p.beta = j.contains("beta") ? scalar_or_vector(j["beta"], "platoon.beta", p.n_vehicles)
                                    : Eigen::VectorXd::Constant(p.n_vehicles, -0.1);
        const int ng = p.n_vehicles - 1;
        p.kp = j.contains("kp") ? scalar_or_vector(j["kp"], "platoon.kp", ng)
                                : Eigen::VectorXd::Constant(ng, 0.2);
        p.kd = j.contains("kd") ? scalar_or_vector(j["kd"], "platoon.kd", ng)
                                : Eigen::VectorXd::Constant(ng, 0.3);
        p.d_star = j.contains("d_star") ? scalar_or_vector(j["d_star"], "platoon.d_star", ng)
                                        : Eigen::VectorXd::Constant(ng, 1.0);
        if (j.contains("v_star_mps") && j.contains("v_star_kmh"))
            throw IoError("platoon: give only one of v_star_mps and v_star_kmh");
        if (j.contains("v_star_mps")) p.v_star = as_double(j["v_star_mps"], "platoon.v_star_mps");
        if (j.contains("v_star_kmh"))
            p.v_star = as_double(j["v_star_kmh"], "platoon.v_star_kmh") / 3.6;
        blk.params = std::move(p);
    }
    platoon::validate_params(blk.params);

    if (j.contains("attack")) {
        const json& a = j["attack"];
        reject_unknown_keys(a, "platoon.attack",
                            {"kind", "start_s", "period_s", "seed", "amplitude", "max_steps"});
        const std::string kind =
            a.contains("kind") ? as_string(a["kind"], "platoon.attack.kind") : "square";
        if (kind == "none")
            blk.attack_kind = AttackKind::None;
        else if (kind == "square")
            blk.attack_kind = AttackKind::Square;
        else if (kind == "random")
            blk.attack_kind = AttackKind::Random;
        else
            throw IoError("platoon.attack.kind must be one of none, square, random");
        if (a.contains("start_s"))
            blk.attack_start_s = as_double(a["start_s"], "platoon.attack.start_s");
        if (a.contains("period_s"))
            blk.attack_period_s = as_double(a["period_s"], "platoon.attack.period_s");
        if (a.contains("seed")) blk.attack_seed = as_seed(a["seed"], "platoon.attack.seed");
        if (a.contains("amplitude"))
            blk.attack_amplitude = as_double(a["amplitude"], "platoon.attack.amplitude");
        if (a.contains("max_steps"))
            blk.attack_max_steps = as_int(a["max_steps"], "platoon.attack.max_steps");
    }
    if (j.contains("duration_s")) blk.duration_s = as_double(j["duration_s"], "platoon.duration_s");
    if (blk.duration_s <= 0.0) throw IoError("platoon.duration_s must be positive");
    if (j.contains("x0")) {
        Eigen::VectorXd x0 = as_vector(j["x0"], "platoon.x0");
        if (x0.size() != blk.params.n())
            throw IoError("platoon.x0 must have " + std::to_string(blk.params.n()) + " entries");
        blk.x0 = std::move(x0);
    }
    return blk;
}

}  // namespace detail

inline Problem parse_problem(const json& j) {
    detail::reject_unknown_keys(
        j, "problem", {"system", "bounds", "danger", "options", "monte_carlo", "platoon"});
    Problem p;
    p.raw = j;

    if (j.contains("platoon")) p.platoon = detail::parse_platoon(j["platoon"]);

    if (j.contains("system")) {
        const json& s = j["system"];
        detail::reject_unknown_keys(s, "system", {"F", "G"});
        if (!s.contains("F") || !s.contains("G"))
            throw IoError("system requires both F and G");
        try {
            p.system.emplace(detail::as_matrix(s["F"], "system.F"),
                             detail::as_matrix(s["G"], "system.G"));
        } catch (const ModelError& e) {
            throw IoError(std::string("system: ") + e.what());
        }
    }

    const Eigen::Index m_hint = p.system       ? p.system->m()
                                : p.platoon    ? p.platoon->params.m()
                                               : -1;
    if (j.contains("bounds")) {
        const json& b = j["bounds"];
        detail::reject_unknown_keys(b, "bounds", {"gamma"});
        if (!b.contains("gamma")) throw IoError("bounds.gamma is required");
        Eigen::VectorXd gamma;
        if (b["gamma"].is_number()) {
            if (m_hint < 0)
                throw IoError("bounds.gamma: scalar form requires a system or platoon block");
            gamma = Eigen::VectorXd::Constant(m_hint, detail::as_double(b["gamma"], "gamma"));
        } else {
            gamma = detail::as_vector(b["gamma"], "gamma");
        }
        for (Eigen::Index i = 0; i < gamma.size(); ++i)
            if (!(gamma(i) > 0.0) || !std::isfinite(gamma(i)))
                throw IoError("gamma[" + std::to_string(i) + "] must be positive and finite");
        if (m_hint >= 0 && gamma.size() != m_hint)
            throw IoError("gamma must have one entry per input channel");
        p.bounds.emplace(std::move(gamma));
    }

    if (j.contains("danger")) {
        const json& d = j["danger"];
        if (!d.is_array()) throw IoError("danger must be an array of half-spaces");
        std::vector<Halfspace> hs;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const std::string ctx = "danger[" + std::to_string(i) + "]";
            detail::reject_unknown_keys(d[i], ctx, {"c", "b", "sense"});
            if (!d[i].contains("c") || !d[i].contains("b"))
                throw IoError(ctx + " requires c and b");
            HalfspaceSense sense = HalfspaceSense::Ge;
            if (d[i].contains("sense")) {
                const std::string s = detail::as_string(d[i]["sense"], ctx + ".sense");
                if (s == ">=")
                    sense = HalfspaceSense::Ge;
                else if (s == "<=")
                    sense = HalfspaceSense::Le;
                else
                    throw IoError(ctx + ".sense must be \">=\" or \"<=\"");
            }
            try {
                hs.push_back(normalize_halfspace(detail::as_vector(d[i]["c"], ctx + ".c"),
                                                 detail::as_double(d[i]["b"], ctx + ".b"), sense));
            } catch (const InvalidDangerSet& e) {
                throw IoError(ctx + ": " + e.what());
            }
        }
        p.danger.emplace(std::move(hs));
    }

    if (j.contains("options")) {
        const json& o = j["options"];
        detail::reject_unknown_keys(o, "options", {"grid", "equal_bounds"});
        if (o.contains("grid")) p.grid = detail::parse_grid(o["grid"]);
        if (o.contains("equal_bounds"))
            p.equal_bounds = detail::as_bool(o["equal_bounds"], "options.equal_bounds");
    }

    if (j.contains("monte_carlo")) p.monte_carlo = detail::parse_monte_carlo(j["monte_carlo"]);

    return p;
}

inline json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(is);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("parse error in '" + path + "': " + e.what());
    }
}

inline Problem load_problem(const std::string& path) { return parse_problem(load_json(path)); }

/// System used by the pipeline: the explicit block wins, otherwise the
/// platoon matrices.
inline LtiSystem resolved_system(const Problem& p) {
    if (p.system) return *p.system;
    if (p.platoon) return platoon::build_matrices(p.platoon->params);
    throw IoError("problem has no system or platoon block");
}

inline InputBounds resolved_bounds(const Problem& p) {
    if (p.bounds) return *p.bounds;
    throw IoError("problem has no bounds block");
}

/// Explicit danger block wins (even when empty); a platoon problem without
/// one gets the platoon's crash half-spaces.
inline DangerSet resolved_danger(const Problem& p) {
    if (p.danger) return *p.danger;
    if (p.platoon) return platoon::danger_set(p.platoon->params);
    return DangerSet(std::vector<Halfspace>{});
}

inline std::optional<platoon::AttackSpec> make_attack(const PlatoonBlock& blk) {
    switch (blk.attack_kind) {
        case AttackKind::None: return std::nullopt;
        case AttackKind::Square:
            return platoon::square_wave_attack(blk.params, blk.attack_start_s,
                                               blk.attack_period_s, blk.attack_amplitude);
        case AttackKind::Random:
            return platoon::random_attack(blk.params, blk.attack_seed, blk.attack_start_s,
                                          blk.attack_max_steps, blk.attack_amplitude);
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Result files

namespace detail {

inline json log_to_json(const std::vector<PerALog>& log) {
    json out = json::array();
    for (const PerALog& e : log) {
        json row;
        row["a"] = e.a;
        row["status"] = sdp::to_string(e.status);
        if (std::isfinite(e.volume))
            row["volume"] = e.volume;
        else
            row["volume"] = nullptr;
        out.push_back(std::move(row));
    }
    return out;
}

inline json result_common(const Problem& prob, const std::string& kind, double a_star,
                          const Ellipsoid& e, double volume, const std::vector<PerALog>& log) {
    json out;
    out["version"] = kVersion;
    out["kind"] = kind;
    out["config_hash"] = hash_hex(fnv1a64(prob.raw.dump()));
    out["input"] = prob.raw;
    out["a_star"] = a_star;
    out["alpha"] = e.alpha;
    out["ellipsoid"] = {{"P", matrix_to_json(e.P)}, {"alpha", e.alpha}};
    out["volume"] = volume;
    out["per_a_log"] = log_to_json(log);
    return out;
}

}  // namespace detail

inline json result_to_json(const Problem& prob, const AnalysisResult& r) {
    json out = detail::result_common(prob, "analysis", r.a_star, r.ellipsoid, r.volume, r.log);
    out["P"] = detail::matrix_to_json(r.ellipsoid.P);
    return out;
}

inline json result_to_json(const Problem& prob, const SynthesisResult& r) {
    json out = detail::result_common(prob, "synthesis", r.a_star, r.ellipsoid,
                                     ellipsoid_volume(r.ellipsoid), r.log);
    out["Y"] = detail::matrix_to_json(r.Y);
    out["gamma_hat"] = detail::vector_to_json(r.gamma_hat);
    out["rhat"] = detail::vector_to_json(r.rhat);
    out["path"] =
        r.path == SynthesisResult::Path::EqualBound ? "equal-bound" : "per-channel";
    out["active"] = r.active;
    return out;
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
}

struct LoadedResult {
    json raw;
    std::string kind;
    Problem input;
    double a_star = 0.0;
    double volume = 0.0;
    std::optional<Ellipsoid> ellipsoid;
    // synthesis only:
    Eigen::MatrixXd Y;
    Eigen::VectorXd gamma_hat;
    Eigen::VectorXd rhat;
    std::vector<int> active;
    std::string path;
};

inline LoadedResult parse_result(const json& j) {
    detail::expect_object(j, "result");
    for (const char* k : {"version", "kind", "input", "a_star", "ellipsoid", "volume"})
        if (!j.contains(k)) throw IoError(std::string("result is missing '") + k + "'");
    LoadedResult r;
    r.raw = j;
    r.kind = detail::as_string(j["kind"], "kind");
    r.input = parse_problem(j["input"]);
    r.a_star = detail::as_double(j["a_star"], "a_star");
    r.volume = detail::as_double(j["volume"], "volume");
    const json& e = j["ellipsoid"];
    detail::reject_unknown_keys(e, "ellipsoid", {"P", "alpha"});
    r.ellipsoid.emplace(detail::as_matrix(e["P"], "ellipsoid.P"),
                        detail::as_double(e["alpha"], "ellipsoid.alpha"));
    if (r.kind == "synthesis") {
        for (const char* k : {"Y", "gamma_hat", "rhat"})
            if (!j.contains(k)) throw IoError(std::string("synthesis result is missing '") + k + "'");
        r.Y = detail::as_matrix(j["Y"], "Y");
        r.gamma_hat = detail::as_vector(j["gamma_hat"], "gamma_hat");
        r.rhat = detail::as_vector(j["rhat"], "rhat");
        if (j.contains("active")) r.active = j["active"].get<std::vector<int>>();
        if (j.contains("path")) r.path = detail::as_string(j["path"], "path");
    } else if (r.kind != "analysis") {
        throw IoError("result.kind must be 'analysis' or 'synthesis'");
    }
    return r;
}

inline LoadedResult load_result(const std::string& path) { return parse_result(load_json(path)); }

/// Re-certifies a stored result by evaluating its constraint system at the
/// stored variables: every LMI must be feasible to within feas_tol. Returns
/// the worst margin (most negative minimum eigenvalue, >= -feas_tol on pass).
inline bool verify_result(const LoadedResult& r, double* worst_out = nullptr) {
    const LtiSystem sys = resolved_system(r.input);
    const InputBounds bounds = resolved_bounds(r.input);

    std::vector<sdp::AffineLmiConstraint> constraints;
    Eigen::VectorXd v;
    if (r.kind == "analysis") {
        constraints = assemble_analysis_lmi(sys, input_weight(bounds), r.a_star);
        v = detail::pack_symmetric(r.ellipsoid->P);
    } else {
        constraints = assemble_synthesis_lmi(sys, bounds, r.a_star);
        auto margins =
            danger_margin_constraints(sys, resolved_danger(r.input),
                                      static_cast<int>(detail::pack_symmetric(r.Y).size()) +
                                          static_cast<int>(r.rhat.size()));
        constraints.insert(constraints.end(), margins.begin(), margins.end());
        v.resize(detail::pack_symmetric(r.Y).size() + r.rhat.size());
        v << detail::pack_symmetric(r.Y), r.rhat;
    }
    const double tol = sdp::feasibility_tolerance(constraints);
    double worst = 0.0;
    for (const auto& c : constraints) worst = std::min(worst, sdp::min_eig(c.value(v)));
    if (worst_out != nullptr) *worst_out = worst;
    return worst >= -tol;
}

// ---------------------------------------------------------------------------
// Ellipse boundary export

/// Closed boundary polyline of the ellipsoid's shadow on the (i, j) plane
/// (1-based indices). For n = 2 this is the exact boundary; in general the
/// projection of {x'Px <= alpha} onto coordinates (i, j) is the ellipse whose
/// shape matrix is the inverse of the corresponding 2x2 sub-block of P^{-1}.
/// Returns a 2 x (samples + 1) matrix of points in angle order, closed.
inline Eigen::MatrixXd ellipse_boundary(const Ellipsoid& e, int i, int j, int samples) {
    const int n = static_cast<int>(e.n());
    if (!(1 <= i && i < j && j <= n)) throw IoError("projection indices out of range");
    if (samples < 4) throw IoError("samples must be >= 4");

    const Eigen::MatrixXd pinv =
        e.P.ldlt().solve(Eigen::MatrixXd::Identity(e.P.rows(), e.P.cols()));
    Eigen::Matrix2d block;
    block << pinv(i - 1, i - 1), pinv(i - 1, j - 1), pinv(j - 1, i - 1), pinv(j - 1, j - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es((block + block.transpose()) / 2.0);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
        throw NumericError("projected shape matrix is not positive definite");
    // Points are sqrt(alpha) * B^{1/2} [cos t; sin t] with B the sub-block,
    // which satisfies y' (B^{-1}/alpha) y = 1.
    const Eigen::Matrix2d half =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();

    Eigen::MatrixXd pts(2, samples + 1);
    const double sa = std::sqrt(e.alpha);
    for (int k = 0; k < samples; ++k) {
        const double t = 2.0 * M_PI * k / samples;
        pts.col(k) = sa * (half * Eigen::Vector2d(std::cos(t), std::sin(t)));
    }
    pts.col(samples) = pts.col(0);
    return pts;
}

inline void write_polyline_csv(std::ostream& os, const Eigen::MatrixXd& pts, int i, int j) {
    os << "x_" << i << ",x_" << j << "\n";
    char buf[64];
    for (Eigen::Index k = 0; k < pts.cols(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", pts(0, k));
        os << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", pts(1, k));
        os << buf << "\n";
    }
}

inline void write_polyline_csv(const std::string& path, const Eigen::MatrixXd& pts, int i, int j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open '" + path + "' for writing");
    write_polyline_csv(os, pts, i, j);
}

}  // namespace reachbound::io
