#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "reachbound/model.hpp"

namespace reachbound {

// Input-sampling policies. UniformBox draws each channel uniformly from
// [-sqrt(gamma_i), +sqrt(gamma_i)]; BangBang holds an extreme value per
// channel and flips it with a small per-step probability, which drives
// trajectories toward the boundary of the reachable set; Mixed runs a
// fraction of the trajectories with BangBang and the rest with UniformBox.
enum class Policy { UniformBox, BangBang, Mixed };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::UniformBox: return "uniform";
    case Policy::BangBang: return "bangbang";
    case Policy::Mixed: return "mixed";
  }
  return "?";
}

struct SampleConfig {
  std::int64_t n_traj = 10000;
  std::int64_t horizon = 1000;  // states per trajectory, including x_1 = 0
  std::uint64_t seed = 0;
  Policy policy = Policy::UniformBox;
  double mixed_ratio = 0.5;  // fraction of trajectories that use BangBang under Mixed
};

inline void validate_config(const SampleConfig& config) {
  detail::require(config.n_traj >= 1, "n_traj must be >= 1");
  detail::require(config.horizon >= 1, "horizon must be >= 1");
  detail::require(config.mixed_ratio >= 0.0 && config.mixed_ratio <= 1.0,
                  "mixed_ratio must lie in [0, 1]");
}

// Visited states across all trajectories, ordered by (trajectory, step).
// When the total exceeds the storage cap, only every stride-th state is
// kept; total_generated always counts the full sample.
struct PointCloud {
  Eigen::MatrixXd states;  // n x stored
  SampleConfig config;
  std::int64_t total_generated = 0;
  std::int64_t stride = 1;
};

namespace detail {

constexpr std::int64_t kMaxStoredStates = 20000000;
constexpr double kSwitchProb = 0.1;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent stream per trajectory so concurrency cannot change results.
inline std::uint64_t trajectory_seed(std::uint64_t seed, std::int64_t traj) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(traj) + 0x9E3779B97F4A7C15ULL));
}

// Uniform double in [0, 1) built from the top 53 bits; bitwise reproducible
// across platforms, unlike std::uniform_real_distribution.
inline double next_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline bool traj_uses_bangbang(const SampleConfig& config, std::int64_t traj) {
  switch (config.policy) {
    case Policy::UniformBox: return false;
    case Policy::BangBang: return true;
    case Policy::Mixed:
      return static_cast<double>(traj) <
             config.mixed_ratio * static_cast<double>(config.n_traj);
  }
  return false;
}

// Runs one trajectory, invoking visit(state, step) for each of the
// config.horizon visited states (the first is always the origin).
template <typename Visit>
void run_trajectory(const LtiSystem& sys, const InputBounds& bounds,
                    const SampleConfig& config, std::int64_t traj, Visit&& visit) {
  const Eigen::Index n = sys.n();
  const Eigen::Index m = sys.m();
  const Eigen::VectorXd amp = bounds.gamma.cwiseSqrt();

  std::mt19937_64 eng(trajectory_seed(config.seed, traj));
  const bool bang = traj_uses_bangbang(config, traj);

  Eigen::VectorXd sign(m);
  if (bang)
    for (Eigen::Index i = 0; i < m; ++i) sign(i) = next_unit(eng) < 0.5 ? -1.0 : 1.0;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd u(m);
  for (std::int64_t t = 0; t < config.horizon; ++t) {
    visit(x, t);
    if (t + 1 == config.horizon) break;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (bang) {
        if (next_unit(eng) < kSwitchProb) sign(i) = -sign(i);
        u(i) = sign(i) * amp(i);
      } else {
        u(i) = (2.0 * next_unit(eng) - 1.0) * amp(i);
      }
    }
    x = sys.F * x + sys.G * u;
  }
}

// Splits trajectories into contiguous chunks, one thread per chunk.
template <typename Fn>
void for_each_trajectory(std::int64_t n_traj, int threads, Fn&& fn) {
  if (threads <= 1) {
    for (std::int64_t j = 0; j < n_traj; ++j) fn(j);
    return;
  }
  const int workers = static_cast<int>(std::min<std::int64_t>(threads, n_traj));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn]() {
      for (std::int64_t j = w; j < n_traj; j += workers) fn(j);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Monte-Carlo sample of the reachable set from the origin. Deterministic for
// a fixed config regardless of the thread count.
inline PointCloud sample(const LtiSystem& sys, const InputBounds& bounds,
                         const SampleConfig& config, int threads = 1) {
  detail::require(sys.m() == bounds.m(), "bounds dimension does not match the system");
  validate_config(config);
  if (boundedness_diagnostic(sys).verdict == Boundedness::Unbounded)
    std::cerr << "warning: system has spectral radius > 1; the reachable set is unbounded\n";

  PointCloud cloud;
  cloud.config = config;
  cloud.total_generated = config.n_traj * config.horizon;
  cloud.stride =
      (cloud.total_generated + detail::kMaxStoredStates - 1) / detail::kMaxStoredStates;
  if (cloud.stride < 1) cloud.stride = 1;
  const std::int64_t stored = (cloud.total_generated + cloud.stride - 1) / cloud.stride;
  cloud.states.resize(sys.n(), stored);

  const std::int64_t horizon = config.horizon;
  const std::int64_t stride = cloud.stride;
  auto one = [&](std::int64_t j) {
    detail::run_trajectory(sys, bounds, config, j,
                           [&](const Eigen::VectorXd& x, std::int64_t t) {
                             const std::int64_t g = j * horizon + t;
                             if (g % stride == 0) cloud.states.col(g / stride) = x;
                           });
  };
  detail::for_each_trajectory(config.n_traj, threads, one);
  return cloud;
}

struct Containment {
  double fraction = 0.0;   // share of states with x'Px <= alpha (1 + 1e-9)
  double max_level = 0.0;  // max over states of x'Px / alpha (tightness statistic)
};

inline Containment containment(const PointCloud& cloud, const Ellipsoid& e) {
  detail::require(cloud.states.rows() == e.P.rows(),
                  "cloud dimension does not match the ellipsoid");
  Containment out;
  std::int64_t inside = 0;
  const std::int64_t stored = cloud.states.cols();
  for (std::int64_t k = 0; k < stored; ++k) {
    const double level = e.level(cloud.states.col(k));
    if (level > out.max_level) out.max_level = level;
    if (level <= 1.0 + 1e-9) ++inside;
  }
  out.fraction = stored == 0 ? 1.0 : static_cast<double>(inside) / static_cast<double>(stored);
  return out;
}

inline std::int64_t danger_violations(const PointCloud& cloud, const DangerSet& danger) {
  if (!danger.empty())
    detail::require(cloud.states.rows() == danger.halfspaces.front().c.rows(),
                    "cloud dimension does not match the danger set");
  std::int64_t count = 0;
  for (std::int64_t k = 0; k < cloud.states.cols(); ++k)
    if (danger.contains(cloud.states.col(k))) ++count;
  return count;
}

// Streaming variant of sample + containment + danger_violations that never
// stores the cloud, so the full sample is evaluated even beyond the storage
// cap. Either check may be omitted by passing nullptr.
struct ValidationStats {
  std::int64_t total = 0;
  std::int64_t inside = 0;
  double max_level = 0.0;
  std::int64_t violations = 0;
};

inline ValidationStats validate_sample(const LtiSystem& sys, const InputBounds& bounds,
                                       const SampleConfig& config,
                                       const Ellipsoid* e = nullptr,
                                       const DangerSet* danger = nullptr, int threads = 1) {
  detail::require(sys.m() == bounds.m(), "bounds dimension does not match the system");
  validate_config(config);
  if (e != nullptr)
    detail::require(e->P.rows() == sys.n(), "ellipsoid dimension does not match the system");

  const int workers = threads <= 1 ? 1 : threads;
  std::vector<ValidationStats> partial(workers);
  auto one = [&](std::int64_t j) {
    ValidationStats& s = partial[static_cast<std::size_t>(j % workers)];
    detail::run_trajectory(sys, bounds, config, j,
                           [&](const Eigen::VectorXd& x, std::int64_t) {
                             ++s.total;
                             if (e != nullptr) {
                               const double level = e->level(x);
                               if (level > s.max_level) s.max_level = level;
                               if (level <= 1.0 + 1e-9) ++s.inside;
                             }
                             if (danger != nullptr && danger->contains(x)) ++s.violations;
                           });
  };
  detail::for_each_trajectory(config.n_traj, workers, one);

  ValidationStats out;
  for (const ValidationStats& s : partial) {
    out.total += s.total;
    out.inside += s.inside;
    out.violations += s.violations;
    if (s.max_level > out.max_level) out.max_level = s.max_level;
  }
  if (e == nullptr) out.inside = out.total;
  return out;
}

// CSV export: an initial `#` metadata line, then one state per row with
// columns x_1..x_n and no column header.
inline void write_cloud_csv(std::ostream& os, const PointCloud& cloud) {
  char buf[64];
  os << "# seed=" << cloud.config.seed << " n_traj=" << cloud.config.n_traj
     << " horizon=" << cloud.config.horizon << " policy=" << to_string(cloud.config.policy);
  if (cloud.config.policy == Policy::Mixed) {
    std::snprintf(buf, sizeof(buf), "%.17g", cloud.config.mixed_ratio);
    os << " mixed_ratio=" << buf;
  }
  os << " stride=" << cloud.stride << " total=" << cloud.total_generated << "\n";
  for (Eigen::Index k = 0; k < cloud.states.cols(); ++k) {
    for (Eigen::Index i = 0; i < cloud.states.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", cloud.states(i, k));
      os << (i == 0 ? "" : ",") << buf;
    }
    os << "\n";
  }
}

inline void write_cloud_csv(const std::string& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_cloud_csv(os, cloud);
}

}  // namespace reachbound
