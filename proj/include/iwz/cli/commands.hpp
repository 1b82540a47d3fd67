#pragma once

#include "iwz/ba_solver.hpp"
#include "iwz/dispersion.hpp"
#include "iwz/error.hpp"
#include "iwz/source_model.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iwz::cli {

/// 0 success, 2 validation, 3 numerical failure, 4 budget exceeded.
int exit_code(ErrorCode code) noexcept;

/// Shortest round-trip decimal representation, '.' separator.
std::string format_number(double v);

/// Second-order region over every solved point of a Lagrange sweep. Each
/// solved point keeps its own fixed Gaussian sample, seeded from the master
/// seed and its grid index, so repeated queries see common random numbers.
class RegionEvaluator {
 public:
  RegionEvaluator(const JointSourceModel& model, const SweepResult& sweep,
                  std::size_t mvn_samples, std::uint64_t seed);

  struct Choice {
    double rate = 0.0;
    std::size_t cell = 0;  ///< index into the sweep cells
  };

  /// Smallest asymptotic rate among points with dist_x <= D and dist_s <= D_s.
  std::optional<Choice> asymptotic(double dist_x, double dist_s) const;

  /// Smallest second-order rate at (n, eps) over all solved points.
  std::optional<Choice> second_order(long long n, double eps, double dist_x,
                                     double dist_s) const;

 private:
  struct Candidate {
    std::size_t cell;
    MomentSummary moments;
    GaussianOrthant orthant;
  };
  const SweepResult* sweep_;
  std::vector<Candidate> candidates_;
};

struct RegionConfig {
  std::vector<double> lambda_grid;
  std::vector<double> mu_grid;
  std::vector<long long> n_list;
  std::vector<double> eps_list;
  SolveOptions solve;
  std::size_t mvn_samples = 200000;
  long long bound_trials = 0;  ///< 0 leaves the theorem3_bound column empty
  std::uint64_t seed = 42;
  unsigned jobs = 1;
};

inline constexpr const char* kRegionHeader =
    "lambda,mu,rate,dist_x,dist_s,n,epsilon,second_order_rate,feasible,theorem3_bound,"
    "bound_stderr,seed";

/// Full CSV text (header included) for a region run.
std::string region_csv(const JointSourceModel& model, const RegionConfig& config,
                       std::ostream* progress = nullptr);

struct SimulateConfig {
  long long n = 4;
  std::size_t bins = 8;
  double dist_x = 0.0;
  double dist_s = 0.0;
  long long trials = 10000;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  std::size_t budget = std::size_t{1} << 20;
};

/// Codec excess probability, the paired bound estimate and their margin.
nlohmann::json simulate_report(const JointSourceModel& model, const BASolution& solution,
                               const SimulateConfig& config);

/// Human summary of a model: alphabet sizes and marginal entropies.
std::string model_summary(const JointSourceModel& model);

/// Entry point of the `iwz` executable; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iwz::cli
