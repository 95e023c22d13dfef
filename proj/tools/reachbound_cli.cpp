#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "reachbound/reachbound.hpp"

namespace rb = reachbound;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return buf;
}

std::string fmt_vector(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt(v(i));
    }
    return out + "]";
}

void warn_if_unbounded(const rb::LtiSystem& sys) {
    const rb::BoundednessVerdict bd = rb::boundedness_diagnostic(sys);
    if (bd.verdict == rb::Boundedness::Unbounded)
        std::cerr << "warning: spectral radius " << fmt(bd.spectral_radius)
                  << " > 1; the reachable set is unbounded\n";
    else if (bd.verdict == rb::Boundedness::PossiblyUnbounded)
        std::cerr << "warning: spectral radius " << fmt(bd.spectral_radius)
                  << " is within tolerance of 1; the reachable set may be unbounded\n";
}

void print_log(const std::vector<rb::PerALog>& log) {
    for (const rb::PerALog& e : log) {
        std::cerr << "a = " << fmt(e.a) << "  status = " << rb::sdp::to_string(e.status);
        if (std::isfinite(e.volume)) std::cerr << "  volume = " << fmt(e.volume);
        std::cerr << "\n";
    }
}

struct CommonOpts {
    std::string input;
    std::string output;
    std::string grid;
    int threads = 1;
    bool verbose = false;
};

int run_analyze(const CommonOpts& opt) {
    rb::io::Problem problem = rb::io::load_problem(opt.input);
    if (!opt.grid.empty()) problem.grid = rb::io::parse_grid_string(opt.grid);
    const rb::LtiSystem sys = rb::io::resolved_system(problem);
    const rb::InputBounds bounds = rb::io::resolved_bounds(problem);
    warn_if_unbounded(sys);

    const rb::AnalysisResult r = rb::grid_search(sys, bounds, problem.grid, opt.threads);
    if (opt.verbose) print_log(r.log);
    std::cout << "a* = " << fmt(r.a_star) << ", volume = " << fmt(r.volume) << "\n";
    if (!opt.output.empty()) rb::io::write_json(opt.output, rb::io::result_to_json(problem, r));
    return 0;
}

int run_synthesize(const CommonOpts& opt, bool equal_bounds) {
    rb::io::Problem problem = rb::io::load_problem(opt.input);
    if (!opt.grid.empty()) problem.grid = rb::io::parse_grid_string(opt.grid);
    if (!problem.danger && !problem.platoon)
        throw rb::io::IoError("synthesize requires a danger block (an empty list is allowed)");
    const rb::LtiSystem sys = rb::io::resolved_system(problem);
    const rb::InputBounds bounds = rb::io::resolved_bounds(problem);
    const rb::DangerSet danger = rb::io::resolved_danger(problem);
    warn_if_unbounded(sys);

    const bool equal = equal_bounds || problem.equal_bounds;
    const rb::SynthesisResult r =
        equal ? rb::equal_bound_synthesis(sys, bounds, danger, problem.grid, opt.threads)
              : rb::synthesize(sys, bounds, danger, problem.grid, opt.threads);
    if (opt.verbose) print_log(r.log);
    std::cout << "a* = " << fmt(r.a_star) << ", gamma_hat = " << fmt_vector(r.gamma_hat)
              << ", volume = " << fmt(rb::ellipsoid_volume(r.ellipsoid)) << "\n";
    if (!opt.output.empty()) rb::io::write_json(opt.output, rb::io::result_to_json(problem, r));
    return 0;
}

int run_sample(const CommonOpts& opt, const std::string& result_path,
               std::optional<std::uint64_t> seed) {
    rb::io::Problem problem;
    std::optional<rb::io::LoadedResult> result;

    const rb::io::json j = rb::io::load_json(opt.input);
    if (j.is_object() && j.contains("kind") && j.contains("version")) {
        result = rb::io::parse_result(j);
        problem = result->input;
    } else {
        problem = rb::io::parse_problem(j);
    }
    if (!result_path.empty()) result = rb::io::load_result(result_path);

    const rb::LtiSystem sys = rb::io::resolved_system(problem);
    rb::InputBounds bounds = rb::io::resolved_bounds(problem);
    if (result && result->kind == "synthesis") bounds = rb::InputBounds(result->gamma_hat);
    const rb::DangerSet danger = rb::io::resolved_danger(problem);

    rb::SampleConfig config = problem.monte_carlo.value_or(rb::SampleConfig{});
    if (seed) config.seed = *seed;

    const rb::PointCloud cloud = rb::sample(sys, bounds, config, opt.threads);
    if (!opt.output.empty()) rb::write_cloud_csv(opt.output, cloud);

    std::string line = "states = " + std::to_string(cloud.total_generated);
    if (result) {
        const rb::Containment c = rb::containment(cloud, *result->ellipsoid);
        line += ", containment = " + fmt(c.fraction) + ", max_level = " + fmt(c.max_level);
    }
    line += ", violations = " + std::to_string(rb::danger_violations(cloud, danger));
    std::cout << line << "\n";
    return 0;
}

int run_platoon(const CommonOpts& opt, std::optional<std::uint64_t> seed) {
    rb::io::Problem problem = rb::io::load_problem(opt.input);
    if (!problem.platoon) throw rb::io::IoError("platoon block required");
    rb::io::PlatoonBlock blk = *problem.platoon;
    if (seed) blk.attack_seed = *seed;
    const rb::InputBounds bounds = rb::io::resolved_bounds(problem);

    const rb::platoon::SimTrace trace =
        rb::platoon::simulate(blk.params, bounds, rb::io::make_attack(blk), blk.duration_s, blk.x0);
    if (!opt.output.empty()) rb::platoon::write_trace_csv(opt.output, trace);

    if (trace.crashed) {
        std::cout << "crash at t = " << fmt(trace.crash_time_s) << " s between vehicles "
                  << trace.crash_pair << " and " << trace.crash_pair + 1 << "\n";
    } else {
        std::cout << "no crash over " << fmt(trace.times(trace.times.size() - 1))
                  << " s (min gap = " << fmt(trace.gaps.minCoeff()) << " m)\n";
    }
    return 0;
}

int run_ellipse(const CommonOpts& opt, const std::string& plane, int samples) {
    const rb::io::LoadedResult result = rb::io::load_result(opt.input);
    int i = 0,
        j = 0;
    char extra;
    if (std::sscanf(plane.c_str(), "%d,%d%c", &i, &j, &extra) != 2)
        throw rb::io::IoError("--plane must have the form i,j");
    const Eigen::MatrixXd pts = rb::io::ellipse_boundary(*result.ellipsoid, i, j, samples);
    if (!opt.output.empty()) {
        rb::io::write_polyline_csv(opt.output, pts, i, j);
        std::cout << "wrote " << pts.cols() << " points to " << opt.output << "\n";
    } else {
        rb::io::write_polyline_csv(std::cout, pts, i, j);
    }
    return 0;
}

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const rb::AllInfeasible& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reachable-set ellipsoid bounds and safe actuator-bound synthesis"};
    app.set_version_flag("--version", std::string(rb::kVersion));
    app.require_subcommand(1);

    CommonOpts opt;
    bool equal_bounds = false;
    std::string result_path;
    std::optional<std::uint64_t> seed;
    std::string plane = "1,2";
    int samples = 256;

    auto add_common = [&](CLI::App* cmd, bool needs_output_flag = true) {
        cmd->add_option("--input", opt.input, "problem or result file")->required();
        if (needs_output_flag) cmd->add_option("--output", opt.output, "output file path");
        cmd->add_option("--threads", opt.threads, "worker threads (default 1, deterministic)");
        cmd->add_flag("--verbose", opt.verbose, "log per-grid-point solver status");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "minimum-volume reach ellipsoid");
    add_common(analyze);
    analyze->add_option("--grid", opt.grid, "decay-parameter grid start:step:stop");

    CLI::App* synthesize = app.add_subcommand("synthesize", "tightened bounds avoiding the danger set");
    add_common(synthesize);
    synthesize->add_option("--grid", opt.grid, "decay-parameter grid start:step:stop");
    synthesize->add_flag("--equal-bounds", equal_bounds, "force a single common bound on all channels");

    CLI::App* sample = app.add_subcommand("sample", "Monte-Carlo reachable-set cloud");
    add_common(sample);
    sample->add_option("--result", result_path, "result file with the ellipsoid to validate");
    sample->add_option("--seed", seed, "override the sampling seed");

    CLI::App* platoon = app.add_subcommand("platoon", "closed-loop platoon attack simulation");
    add_common(platoon);
    platoon->add_option("--seed", seed, "override the attack seed");

    CLI::App* ellipse = app.add_subcommand("ellipse", "boundary polyline of a result ellipsoid");
    add_common(ellipse);
    ellipse->add_option("--plane", plane, "1-based projection indices i,j (default 1,2)");
    ellipse->add_option("--samples", samples, "boundary points (>= 4, default 256)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*analyze) return guarded([&] { return run_analyze(opt); });
    if (*synthesize) return guarded([&] { return run_synthesize(opt, equal_bounds); });
    if (*sample) return guarded([&] { return run_sample(opt, result_path, seed); });
    if (*platoon) return guarded([&] { return run_platoon(opt, seed); });
    if (*ellipse) return guarded([&] { return run_ellipse(opt, plane, samples); });
    return 1;
}
