#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "reachbound/model.hpp"
#include "reachbound/montecarlo.hpp"

namespace reachbound::platoon {

// Vehicle platoon under PD spacing control plus a communication-based
// secondary control channel. State is [d~_1..d~_{N-1}, v~_1..v~_N] where
// d~_i = d_i - d_i* is the inter-vehicle gap deviation and v~_j = v_j - v*
// the velocity deviation; the PD terms are folded into F and the secondary
// commands enter through G.
struct PlatoonParams {
  int n_vehicles = 3;
  double dt = 0.5;          // sampling period [s]
  Eigen::VectorXd beta;     // per-vehicle friction coefficient, < 0
  Eigen::VectorXd kp;       // proportional gain per gap, size n_vehicles - 1
  Eigen::VectorXd kd;       // derivative gain per gap
  Eigen::VectorXd d_star;   // desired gaps [m]
  double v_star = 60.0 / 3.6;  // desired speed [m/s]

  int n() const { return 2 * n_vehicles - 1; }
  int m() const { return n_vehicles; }
};

// The three-vehicle configuration used throughout the case study.
inline PlatoonParams three_vehicle_preset() {
  PlatoonParams p;
  p.n_vehicles = 3;
  p.dt = 0.5;
  p.beta = Eigen::VectorXd::Constant(3, -0.1);
  p.kp = Eigen::VectorXd::Constant(2, 0.2);
  p.kd = Eigen::VectorXd::Constant(2, 0.3);
  p.d_star = Eigen::VectorXd::Constant(2, 1.0);
  p.v_star = 60.0 / 3.6;
  return p;
}

inline void validate_params(const PlatoonParams& p) {
  const int nv = p.n_vehicles;
  detail::require(nv >= 2, "n_vehicles must be >= 2");
  detail::require(p.dt > 0.0, "dt must be positive");
  detail::require(p.beta.size() == nv, "beta must have one entry per vehicle");
  detail::require((p.beta.array() < 0.0).all(), "beta entries must be negative");
  detail::require(p.kp.size() == nv - 1 && p.kd.size() == nv - 1,
                  "kp and kd must have one entry per gap");
  detail::require(p.d_star.size() == nv - 1, "d_star must have one entry per gap");
  detail::require((p.d_star.array() > 0.0).all(), "d_star entries must be positive");
  detail::require(std::isfinite(p.v_star), "v_star must be finite");
}

// Gap rows integrate velocity differences; velocity rows apply friction and
// the PD coupling to the predecessor. Vehicle j is pulled toward gap j-1
// (behind it) and pushed by gap j (ahead of it) where those exist.
inline LtiSystem build_matrices(const PlatoonParams& p) {
  validate_params(p);
  const int nv = p.n_vehicles;
  const int ng = nv - 1;
  const int n = p.n();

  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < ng; ++i) {
    F(i, i) = 1.0;
    F(i, ng + i) = -p.dt;
    F(i, ng + i + 1) = p.dt;
  }
  for (int j = 0; j < nv; ++j) {
    const int row = ng + j;
    double diag = 1.0 + p.beta(j);
    if (j >= 1) {
      F(row, j - 1) -= p.kp(j - 1);
      F(row, ng + j - 1) += p.kd(j - 1);
      diag -= p.kd(j - 1);
    }
    if (j <= ng - 1) {
      F(row, j) += p.kp(j);
      F(row, ng + j + 1) += p.kd(j);
      diag -= p.kd(j);
    }
    F(row, row) = diag;
  }

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, nv);
  G.bottomRows(nv) = p.dt * Eigen::MatrixXd::Identity(nv, nv);
  return LtiSystem(F, G);
}

// Unsafe states: any physical gap d_i <= 0, i.e. -d~_i >= d_i*.
inline DangerSet danger_set(const PlatoonParams& p) {
  validate_params(p);
  std::vector<Halfspace> hs;
  for (int i = 0; i < p.n_vehicles - 1; ++i) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(p.n());
    c(i) = -1.0;
    hs.push_back(normalize_halfspace(c, p.d_star(i), HalfspaceSense::Ge));
  }
  return DangerSet(hs);
}

// Infinite-horizon discrete LQR gain via Riccati fixed-point iteration.
// Returned with the sign convention w_k = K x_k, so F + G K is Schur stable.
inline Eigen::MatrixXd secondary_gain(const LtiSystem& sys,
                                      const Eigen::MatrixXd& Q_in = Eigen::MatrixXd(),
                                      const Eigen::MatrixXd& R_in = Eigen::MatrixXd()) {
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  const Eigen::MatrixXd Q =
      Q_in.size() == 0 ? Eigen::MatrixXd::Identity(n, n) : Q_in;
  const Eigen::MatrixXd R =
      R_in.size() == 0 ? Eigen::MatrixXd::Identity(m, m) : R_in;
  detail::require(Q.rows() == n && Q.cols() == n, "Q must be n x n");
  detail::require(R.rows() == m && R.cols() == m, "R must be m x m");

  Eigen::MatrixXd P = Q;
  Eigen::MatrixXd K;
  bool converged = false;
  for (int it = 0; it < 100000; ++it) {
    K = (R + sys.G.transpose() * P * sys.G)
            .ldlt()
            .solve(sys.G.transpose() * P * sys.F);
    Eigen::MatrixXd Pn = Q + sys.F.transpose() * P * (sys.F - sys.G * K);
    const double change = (Pn - P).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    P = Pn;
    if (!P.allFinite()) throw NumericError("Riccati iteration diverged");
    if (change <= 1e-12 * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericError("Riccati iteration did not converge");
  K = (R + sys.G.transpose() * P * sys.G)
          .ldlt()
          .solve(sys.G.transpose() * P * sys.F);
  return -K;
}

// Injection signal replacing the secondary control from start_s onward.
// signal(step, channel) must be a deterministic function of the step index
// (counted from the attack start) and the channel; its output is saturated
// by the active bounds before application, so "full authority" attacks may
// simply return huge values.
struct AttackSpec {
  double start_s = 25.0;
  std::function<double(std::int64_t, int)> signal;
};

// Per-channel square wave at full authority with staggered phases: with the
// default period of 4 s and dt = 0.5 s the channels lead by 0, 4 and 2 steps.
inline AttackSpec square_wave_attack(const PlatoonParams& p, double start_s = 25.0,
                                     double period_s = 4.0, double amplitude = 1e6) {
  validate_params(p);
  detail::require(period_s > 0.0 && std::isfinite(amplitude), "invalid attack parameters");
  const std::int64_t period =
      std::max<std::int64_t>(2, static_cast<std::int64_t>(std::llround(period_s / p.dt)));
  const std::int64_t half = period / 2;
  AttackSpec spec;
  spec.start_s = start_s;
  spec.signal = [period, half, amplitude](std::int64_t step, int channel) {
    const std::int64_t phase = (channel % 2) * half + (channel / 2) * (half / 2);
    return ((step + phase) % period) < half ? amplitude : -amplitude;
  };
  return spec;
}

// Randomized full-authority bang-bang attack; the per-channel sign sequence
// is precomputed so the generator stays a pure function of (step, channel).
inline AttackSpec random_attack(const PlatoonParams& p, std::uint64_t seed,
                                double start_s = 0.0, std::int64_t max_steps = 65536,
                                double amplitude = 1e6) {
  validate_params(p);
  const int m = p.m();
  std::mt19937_64 eng(reachbound::detail::splitmix64(seed ^ 0xA7C15ULL));
  Eigen::MatrixXd sign(max_steps, m);
  Eigen::VectorXd cur(m);
  for (int i = 0; i < m; ++i)
    cur(i) = reachbound::detail::next_unit(eng) < 0.5 ? -1.0 : 1.0;
  for (std::int64_t k = 0; k < max_steps; ++k) {
    for (int i = 0; i < m; ++i) {
      if (reachbound::detail::next_unit(eng) < reachbound::detail::kSwitchProb)
        cur(i) = -cur(i);
      sign(k, i) = cur(i);
    }
  }
  AttackSpec spec;
  spec.start_s = start_s;
  spec.signal = [table = std::move(sign), max_steps, amplitude](std::int64_t step,
                                                                int channel) {
    return table(std::min(step, max_steps - 1), channel) * amplitude;
  };
  return spec;
}

struct SimTrace {
  PlatoonParams params;
  Eigen::VectorXd times;       // [s], one entry per recorded state
  Eigen::MatrixXd states;      // deviation coordinates, n x (steps + 1)
  Eigen::MatrixXd gaps;        // physical gaps d_i = d~_i + d_i*, (N-1) x (steps + 1)
  Eigen::MatrixXd velocities;  // physical v_j = v~_j + v*, N x (steps + 1)
  Eigen::MatrixXd inputs;      // applied (saturated) secondary commands, m x (steps + 1);
                               // the final column is zero (no input after the last state)
  bool crashed = false;
  double crash_time_s = 0.0;
  int crash_pair = 0;  // 1-based index i of the crashed pair (i, i+1)
};

// Closed-loop simulation: w_k = K x_k from the LQR secondary controller,
// replaced by the attack generator once t >= start_s; every command is
// clipped to [-sqrt(gamma_i), +sqrt(gamma_i)] before application. Integration
// stops at the first step with any physical gap <= 0. x0 is in deviation
// coordinates; the default is a standstill at the desired gaps.
inline SimTrace simulate(const PlatoonParams& p, const InputBounds& bounds,
                         const std::optional<AttackSpec>& attack, double duration_s,
                         const std::optional<Eigen::VectorXd>& x0 = std::nullopt) {
  validate_params(p);
  detail::require(bounds.m() == p.m(), "bounds dimension does not match the platoon");
  detail::require(duration_s > 0.0, "duration must be positive");

  const LtiSystem sys = build_matrices(p);
  const Eigen::MatrixXd K = secondary_gain(sys);
  const int n = p.n();
  const int m = p.m();
  const int ng = p.n_vehicles - 1;
  const Eigen::VectorXd amp = bounds.gamma.cwiseSqrt();

  Eigen::VectorXd x;
  if (x0.has_value()) {
    detail::require(x0->size() == n, "x0 dimension does not match the platoon");
    x = *x0;
  } else {
    x = Eigen::VectorXd::Zero(n);
    x.tail(p.n_vehicles).setConstant(-p.v_star);
  }

  const std::int64_t steps = std::max<std::int64_t>(1, std::llround(duration_s / p.dt));
  const std::int64_t k_attack =
      attack.has_value() ? std::llround(attack->start_s / p.dt) : steps;

  SimTrace trace;
  trace.params = p;
  trace.times.resize(steps + 1);
  trace.states.resize(n, steps + 1);
  trace.inputs = Eigen::MatrixXd::Zero(m, steps + 1);

  std::int64_t recorded = 0;
  auto record = [&](std::int64_t k) {
    trace.times(recorded) = static_cast<double>(k) * p.dt;
    trace.states.col(recorded) = x;
    ++recorded;
  };
  record(0);

  Eigen::VectorXd u(m);
  for (std::int64_t k = 0; k < steps; ++k) {
    if (attack.has_value() && k >= k_attack) {
      for (int i = 0; i < m; ++i) {
        const double w = attack->signal(k - k_attack, i);
        detail::require(std::isfinite(w), "attack generator produced a non-finite value");
        u(i) = w;
      }
    } else {
      u = K * x;
    }
    u = u.cwiseMax(-amp).cwiseMin(amp);
    trace.inputs.col(recorded - 1) = u;
    x = sys.F * x + sys.G * u;
    record(k + 1);
    for (int i = 0; i < ng; ++i) {
      if (x(i) + p.d_star(i) <= 0.0) {
        trace.crashed = true;
        trace.crash_time_s = static_cast<double>(k + 1) * p.dt;
        trace.crash_pair = i + 1;
        break;
      }
    }
    if (trace.crashed) break;
  }

  trace.times.conservativeResize(recorded);
  trace.states.conservativeResize(n, recorded);
  trace.inputs.conservativeResize(m, recorded);
  trace.gaps = trace.states.topRows(ng).colwise() + p.d_star;
  trace.velocities =
      (trace.states.bottomRows(p.n_vehicles).array() + p.v_star).matrix();
  return trace;
}

// CSV export: one header line, then per-step rows
// t, d_1..d_{N-1}, v_1..v_N, u_1..u_m, crash.
inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  const int ng = trace.params.n_vehicles - 1;
  const int nv = trace.params.n_vehicles;
  const int m = trace.params.m();
  os << "t";
  for (int i = 1; i <= ng; ++i) os << ",d_" << i;
  for (int j = 1; j <= nv; ++j) os << ",v_" << j;
  for (int i = 1; i <= m; ++i) os << ",u_" << i;
  os << ",crash\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (Eigen::Index k = 0; k < trace.times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", trace.times(k));
    os << buf;
    for (int i = 0; i < ng; ++i) put(trace.gaps(i, k));
    for (int j = 0; j < nv; ++j) put(trace.velocities(j, k));
    for (int i = 0; i < m; ++i) put(trace.inputs(i, k));
    const bool crash_row = trace.crashed && k + 1 == trace.times.size();
    os << ',' << (crash_row ? 1 : 0) << "\n";
  }
}

inline void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_trace_csv(os, trace);
}

}  // namespace reachbound::platoon
