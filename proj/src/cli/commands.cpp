#include "iwz/cli/commands.hpp"

#include "iwz/fbl_bounds.hpp"
#include "iwz/model_io.hpp"
#include "iwz/poisson_codec.hpp"
#include "iwz/rng.hpp"

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

namespace iwz::cli {

using nlohmann::json;

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NumericalCollapse:
    case ErrorCode::NotPSD:
    case ErrorCode::NoSupport:
      return 3;
    case ErrorCode::BudgetExceeded:
      return 4;
    default:
      return 2;
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

namespace {

MvnOptions cell_mvn_options(std::size_t samples, std::uint64_t seed, std::size_t cell) {
  Rng rng = substream(seed, StreamTag::Gaussian, cell + 1);
  MvnOptions opts;
  opts.samples = samples;
  opts.seed = rng();
  return opts;
}

double clamp_rate(double rate) { return (rate < 0.0 && rate >= -1e-9) ? 0.0 : rate; }

}  // namespace

RegionEvaluator::RegionEvaluator(const JointSourceModel& model, const SweepResult& sweep,
                                 std::size_t mvn_samples, std::uint64_t seed)
    : sweep_(&sweep) {
  for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
    const auto& sol = sweep.cells[i].solution;
    if (!sol) continue;
    MomentSummary moments = exact_moments(model, *sol);
    GaussianOrthant orthant(moments.v_cov, cell_mvn_options(mvn_samples, seed, i));
    candidates_.push_back({i, std::move(moments), std::move(orthant)});
  }
}

std::optional<RegionEvaluator::Choice> RegionEvaluator::asymptotic(double dist_x,
                                                                   double dist_s) const {
  std::optional<Choice> best;
  for (const Candidate& c : candidates_) {
    const BASolution& sol = *sweep_->cells[c.cell].solution;
    if (sol.dist_x > dist_x || sol.dist_s > dist_s) continue;
    if (!best || sol.rate < best->rate) best = Choice{sol.rate, c.cell};
  }
  return best;
}

std::optional<RegionEvaluator::Choice> RegionEvaluator::second_order(long long n, double eps,
                                                                     double dist_x,
                                                                     double dist_s) const {
  std::optional<Choice> best;
  for (const Candidate& c : candidates_) {
    const auto r = second_order_rate(c.moments, c.orthant, n, eps, dist_x, dist_s);
    if (r && (!best || *r < best->rate)) best = Choice{*r, c.cell};
  }
  return best;
}

std::string region_csv(const JointSourceModel& model, const RegionConfig& config,
                       std::ostream* progress) {
  if (config.lambda_grid.empty() || config.mu_grid.empty()) {
    throw Error(ErrorCode::InvalidArgument, "lambda and mu grids must be nonempty");
  }
  for (long long n : config.n_list) {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "blocklengths must be >= 2");
  }
  for (double e : config.eps_list) {
    if (!(e > 0.0 && e < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be in (0,1)");
  }
  if (!config.n_list.empty() && config.eps_list.empty()) {
    throw Error(ErrorCode::InvalidArgument, "--n-list needs --eps-list");
  }

  const SweepResult sweep =
      sweep_lagrange_grid(model, config.lambda_grid, config.mu_grid, config.solve, config.jobs);
  if (progress) {
    *progress << "sweep: " << sweep.cells.size() << " cells, " << sweep.pareto.size()
              << " pareto points\n";
  }
  const std::string seed_text = std::to_string(config.seed);
  std::ostringstream csv;
  csv << kRegionHeader << '\n';

  auto failed_row = [&](const SweepCell& cell) {
    csv << format_number(cell.lambda) << ',' << format_number(cell.mu) << ",,,,,,,false,,,"
        << seed_text << '\n';
  };

  if (config.n_list.empty()) {
    std::size_t next = 0;
    for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
      const SweepCell& cell = sweep.cells[i];
      if (!cell.solution) {
        failed_row(cell);
        continue;
      }
      if (next >= sweep.pareto.size() || sweep.pareto[next] != i) continue;
      ++next;
      const BASolution& sol = *cell.solution;
      csv << format_number(cell.lambda) << ',' << format_number(cell.mu) << ','
          << format_number(clamp_rate(sol.rate)) << ',' << format_number(sol.dist_x) << ','
          << format_number(sol.dist_s) << ",,,,true,,," << seed_text << '\n';
    }
    return csv.str();
  }

  const RegionEvaluator region(model, sweep, config.mvn_samples, config.seed);
  std::size_t next = 0;
  for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
    const SweepCell& cell = sweep.cells[i];
    if (!cell.solution) {
      failed_row(cell);
      continue;
    }
    if (next >= sweep.pareto.size() || sweep.pareto[next] != i) continue;
    ++next;
    const BASolution& sol = *cell.solution;
    const std::string prefix = format_number(cell.lambda) + ',' + format_number(cell.mu) + ',' +
                               format_number(clamp_rate(sol.rate)) + ',' +
                               format_number(sol.dist_x) + ',' + format_number(sol.dist_s) + ',';
    csv << prefix << ",,,true,,," << seed_text << '\n';
    for (long long n : config.n_list) {
      for (double eps : config.eps_list) {
        csv << prefix << n << ',' << format_number(eps) << ',';
        const auto choice = region.second_order(n, eps, sol.dist_x, sol.dist_s);
        if (!choice) {
          csv << ",false,,," << seed_text << '\n';
          continue;
        }
        csv << format_number(choice->rate) << ",true,";
        if (config.bound_trials > 0) {
          const double log2_m = static_cast<double>(n) * std::max(choice->rate, 0.0);
          BoundOptions bopts{config.bound_trials, config.seed, config.jobs};
          const BoundEstimate b = theorem3_bound_mc(model, *sweep.cells[choice->cell].solution,
                                                    n, log2_m, sol.dist_x, sol.dist_s, bopts);
          csv << format_number(b.mean) << ',' << format_number(b.std_error);
        } else {
          csv << ',';
        }
        csv << ',' << seed_text << '\n';
      }
    }
  }
  return csv.str();
}

json simulate_report(const JointSourceModel& model, const BASolution& solution,
                     const SimulateConfig& config) {
  CodecOptions copts;
  copts.trials = config.trials;
  copts.seed = config.seed;
  copts.jobs = config.jobs;
  copts.budget = config.budget;
  const CodecReport codec =
      simulate_excess(model, solution, static_cast<std::size_t>(config.n), config.bins,
                      config.dist_x, config.dist_s, copts);
  const BoundOptions bopts{config.trials, config.seed, config.jobs};
  const BoundEstimate bound = theorem3_bound_mc(model, solution, config.n,
                                                std::log2(static_cast<double>(config.bins)),
                                                config.dist_x, config.dist_s, bopts);
  const double combined = std::hypot(codec.excess.std_error, bound.std_error);
  json doc;
  doc["n"] = config.n;
  doc["M"] = config.bins;
  doc["dist_x"] = config.dist_x;
  doc["dist_s"] = config.dist_s;
  doc["trials"] = config.trials;
  doc["seed"] = config.seed;
  doc["rate_bits"] = std::log2(static_cast<double>(config.bins)) / static_cast<double>(config.n);
  doc["codec"] = {{"excess_probability", codec.excess.mean},
                  {"std_error", codec.excess.std_error},
                  {"mismatch_rate", codec.mismatch_rate},
                  {"mismatch_std_error", codec.mismatch_std_error},
                  {"matching_bound", codec.matching_bound},
                  {"matching_bound_std_error", codec.matching_bound_std_error}};
  doc["theorem3_bound"] = {{"mean", bound.mean}, {"std_error", bound.std_error}};
  doc["dominance_margin"] = bound.mean - codec.excess.mean;
  doc["combined_std_error"] = combined;
  doc["dominated"] = codec.excess.mean <= bound.mean + 4.0 * combined;
  return doc;
}

std::string model_summary(const JointSourceModel& model) {
  std::ostringstream out;
  out << "|S|=" << model.s_size() << " |X|=" << model.x_size() << " |Y|=" << model.y_size()
      << " |S_hat|=" << model.s_hat_size() << " |X_hat|=" << model.x_hat_size() << '\n';
  out << "H(S)=" << format_number(entropy_bits(model.p_s()))
      << " H(X)=" << format_number(entropy_bits(model.p_x()))
      << " H(Y)=" << format_number(entropy_bits(model.p_y())) << '\n';
  return out.str();
}

namespace {

void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Indirect Wyner-Ziv rate-distortion toolkit", "iwz"};
  app.require_subcommand(1);

  // model build | validate
  auto* model_cmd = app.add_subcommand("model", "Build or validate a model file");
  model_cmd->require_subcommand(1);
  auto* build_cmd = model_cmd->add_subcommand("build", "Write a model JSON");
  bool mixture = false;
  bool tiny = false;
  GaussianMixtureParams mix;
  std::vector<double> range{mix.grid_min, mix.grid_max};
  double flip_sx = 0.1;
  double flip_xy = 0.25;
  std::string out_path;
  auto* mixture_flag =
      build_cmd->add_flag("--gaussian-mixture", mixture, "Two-class Gaussian mixture");
  auto* tiny_flag = build_cmd->add_flag("--tiny-dsbs", tiny, "Binary symmetric test model");
  mixture_flag->excludes(tiny_flag);
  build_cmd->add_option("--sx2", mix.sigma_x2, "Variance of X")->capture_default_str();
  build_cmd->add_option("--sy2", mix.sigma_y2, "Variance of Y")->capture_default_str();
  build_cmd->add_option("--t0", mix.theta_0, "Covariance for class 0")->capture_default_str();
  build_cmd->add_option("--t1", mix.theta_1, "Covariance for class 1")->capture_default_str();
  build_cmd->add_option("--levels", mix.grid_count, "Grid levels per axis")
      ->capture_default_str();
  build_cmd->add_option("--range", range, "Grid bounds lo hi")->expected(2);
  build_cmd->add_option("--flip-sx", flip_sx, "P(X != S)")->capture_default_str();
  build_cmd->add_option("--flip-xy", flip_xy, "P(Y != X)")->capture_default_str();
  build_cmd->add_option("--out", out_path, "Output path");

  auto* validate_cmd = model_cmd->add_subcommand("validate", "Check a model file");
  std::string model_path;
  validate_cmd->add_option("model", model_path, "Model JSON")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Run Blahut-Arimoto at one (lambda, mu)");
  double lambda = 1.0;
  double mu = 1.0;
  SolveOptions solve_opts;
  std::size_t u_size = 0;
  unsigned jobs = 1;
  std::uint64_t seed = 42;
  solve_cmd->add_option("model", model_path, "Model JSON")->required();
  solve_cmd->add_option("--lambda", lambda, "Multiplier on E[d]")->capture_default_str();
  solve_cmd->add_option("--mu", mu, "Multiplier on E[d_s]")->capture_default_str();
  solve_cmd->add_option("--max-iters", solve_opts.max_iters, "Iteration cap")
      ->capture_default_str();
  solve_cmd->add_option("--tol", solve_opts.tol_delta, "Distortion-change tolerance")
      ->capture_default_str();
  solve_cmd->add_option("--u-size", u_size, "Auxiliary alphabet size (default |X|+1)");
  solve_cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
  solve_cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  solve_cmd->add_option("--out", out_path, "Output path");

  // region
  auto* region_cmd = app.add_subcommand("region", "Sweep and emit the region CSV");
  RegionConfig region;
  region_cmd->add_option("model", model_path, "Model JSON")->required();
  region_cmd->add_option("--lambda-grid", region.lambda_grid, "Comma-separated lambdas")
      ->delimiter(',')
      ->required();
  region_cmd->add_option("--mu-grid", region.mu_grid, "Comma-separated mus")
      ->delimiter(',')
      ->required();
  region_cmd->add_option("--n-list", region.n_list, "Comma-separated blocklengths")
      ->delimiter(',');
  region_cmd->add_option("--eps-list", region.eps_list, "Comma-separated excess probabilities")
      ->delimiter(',');
  region_cmd->add_option("--max-iters", region.solve.max_iters, "Iteration cap")
      ->capture_default_str();
  region_cmd->add_option("--tol", region.solve.tol_delta, "Distortion-change tolerance")
      ->capture_default_str();
  region_cmd->add_option("--u-size", u_size, "Auxiliary alphabet size (default |X|+1)");
  region_cmd->add_option("--mvn-samples", region.mvn_samples, "Gaussian samples per point")
      ->capture_default_str();
  region_cmd->add_option("--bound-trials", region.bound_trials,
                         "Monte Carlo trials for the bound column (0 = skip)")
      ->capture_default_str();
  region_cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
  region_cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  region_cmd->add_option("--out", out_path, "Output path");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate the codec against the bound");
  std::string solution_path;
  SimulateConfig sim;
  sim_cmd->add_option("model", model_path, "Model JSON")->required();
  sim_cmd->add_option("solution", solution_path, "Solution JSON from `solve`")->required();
  sim_cmd->add_option("-n,--n", sim.n, "Blocklength")->capture_default_str();
  sim_cmd->add_option("-M,--bins", sim.bins, "Number of messages")->capture_default_str();
  sim_cmd->add_option("--D", sim.dist_x, "Distortion threshold on X")->required();
  sim_cmd->add_option("--Ds", sim.dist_s, "Distortion threshold on S")->required();
  sim_cmd->add_option("--trials", sim.trials, "Monte Carlo trials")->capture_default_str();
  sim_cmd->add_option("--budget", sim.budget, "Cap on |U|^n * M")->capture_default_str();
  sim_cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--jobs", jobs, "Worker threads")->capture_default_str();
  sim_cmd->add_option("--out", out_path, "Output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*build_cmd) {
      JointSourceModel model = [&] {
        if (tiny) return build_tiny_dsbs(flip_sx, flip_xy);
        if (!mixture) {
          throw Error(ErrorCode::InvalidArgument, "choose --gaussian-mixture or --tiny-dsbs");
        }
        mix.grid_min = range[0];
        mix.grid_max = range[1];
        return build_gaussian_mixture_model(mix);
      }();
      const std::string summary = model_summary(model);
      emit(model_to_json(model).dump(2) + "\n", out_path, out);
      err << summary;
      return 0;
    }
    if (*validate_cmd) {
      const JointSourceModel model = load_model(model_path);
      out << "OK\n" << model_summary(model);
      return 0;
    }
    if (*solve_cmd) {
      const JointSourceModel model = load_model(model_path);
      solve_opts.seed = seed;
      if (u_size > 0) solve_opts.u_size = u_size;
      const BASolution sol = solve(model, lambda, mu, solve_opts);
      emit(solution_to_json(sol).dump(2) + "\n", out_path, out);
      err << "rate=" << format_number(sol.rate) << " dist_x=" << format_number(sol.dist_x)
          << " dist_s=" << format_number(sol.dist_s) << " iterations=" << sol.iterations
          << (sol.converged ? "" : " (not converged)") << '\n';
      return sol.converged ? 0 : 3;
    }
    if (*region_cmd) {
      const JointSourceModel model = load_model(model_path);
      region.seed = seed;
      region.solve.seed = seed;
      region.jobs = jobs;
      if (u_size > 0) region.solve.u_size = u_size;
      emit(region_csv(model, region, &err), out_path, out);
      return 0;
    }
    if (*sim_cmd) {
      const JointSourceModel model = load_model(model_path);
      const BASolution sol = load_solution(solution_path, model);
      sim.seed = seed;
      sim.jobs = jobs;
      emit(simulate_report(model, sol, sim).dump(2) + "\n", out_path, out);
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

}  // namespace iwz::cli
