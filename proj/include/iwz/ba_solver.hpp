#pragma once

#include "iwz/source_model.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iwz {

/// Test channel P(u|x), indexed (x, u).
struct TestChannel {
  Eigen::MatrixXd p_u_given_x;

  std::size_t x_size() const noexcept { return static_cast<std::size_t>(p_u_given_x.rows()); }
  std::size_t u_size() const noexcept { return static_cast<std::size_t>(p_u_given_x.cols()); }
};

/// Decoder rule g(u, y) -> (s_hat, x_hat), stored as symbol indices.
struct ReconstructionMap {
  std::size_t u_size = 0;
  std::size_t y_size = 0;
  std::vector<std::size_t> s_hat;
  std::vector<std::size_t> x_hat;

  ReconstructionMap() = default;
  ReconstructionMap(std::size_t u, std::size_t y)
      : u_size(u), y_size(y), s_hat(u * y, 0), x_hat(u * y, 0) {}

  std::size_t s_hat_at(std::size_t u, std::size_t y) const { return s_hat[u * y_size + y]; }
  std::size_t x_hat_at(std::size_t u, std::size_t y) const { return x_hat[u * y_size + y]; }
};

struct Distortions {
  double dist_x = 0.0;
  /// E[d_s(S, S_hat)] over the full joint of (s, x, y, u).
  double dist_s = 0.0;
  /// The same quantity through the modified distortion E[d'(X, Y, S_hat)].
  double dist_s_modified = 0.0;
};

struct SolveOptions {
  int max_iters = 100;
  double tol_delta = 1e-3;
  std::uint64_t seed = 42;
  /// Auxiliary alphabet size; |X| + 1 when unset.
  std::optional<std::size_t> u_size;
  /// Starts tried besides the seeded near-uniform one: a near-deterministic
  /// channel, then widely perturbed random channels. The run with the lowest
  /// final Lagrangian is returned.
  int extra_starts = 3;
};

struct BASolution {
  TestChannel channel;
  ReconstructionMap recon;
  double rate = 0.0;    ///< I(X;U) - I(U;Y) in bits
  double dist_x = 0.0;
  double dist_s = 0.0;
  double lambda = 0.0;
  double mu = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Lagrangian (rate in nats + lambda E[d] + mu E[d']) after the initial
  /// reconstruction and after every iteration.
  std::vector<double> lagrangian_trace;
};

/// Validates that every row of the channel is a pmf (within 1e-10).
void validate_channel(const JointSourceModel& model, const TestChannel& channel);

/// Seeded near-uniform start: uniform rows scaled by exp(0.01 z), z ~ N(0,1).
TestChannel initial_channel(std::size_t x_size, std::size_t u_size, std::uint64_t seed);

/// P(u|y) = sum_x P(x|y) P(u|x), indexed (y, u). Rows for y with P(y) = 0 are zero.
Eigen::MatrixXd derive_u_given_y(const JointSourceModel& model, const TestChannel& channel);

/// Per (u, y): x_hat minimizes sum_x P(x|y)P(u|x) lambda d(x, x_hat) and s_hat
/// minimizes sum_x P(x|y)P(u|x) mu d'(x, y, s_hat). Ties go to the lowest index.
ReconstructionMap update_reconstruction(const JointSourceModel& model,
                                        const TestChannel& channel, double lambda, double mu);

/// Gibbs update of the test channel given P(u|y) and the reconstruction,
/// evaluated in the log domain with natural logarithms.
TestChannel update_test_channel(const JointSourceModel& model,
                                const Eigen::MatrixXd& p_u_given_y,
                                const ReconstructionMap& recon, double lambda, double mu);

/// I(X;U) - I(U;Y) in bits.
double evaluate_rate(const JointSourceModel& model, const TestChannel& channel);

Distortions evaluate_distortions(const JointSourceModel& model, const TestChannel& channel,
                                 const ReconstructionMap& recon);

double lagrangian_nats(const JointSourceModel& model, const TestChannel& channel,
                       const ReconstructionMap& recon, double lambda, double mu);

/// Initial channels tried by `solve`, in order.
std::vector<TestChannel> starting_channels(std::size_t x_size, std::size_t u_size,
                                           const SolveOptions& opts);

/// Alternates reconstruction and channel updates from each starting channel
/// until the summed distortion change drops below tol_delta or max_iters.
BASolution solve(const JointSourceModel& model, double lambda, double mu,
                 const SolveOptions& opts = {});

/// Indices of the nondominated points (minimizing all three coordinates),
/// in input order. Points within `tol` of an earlier point are dropped.
std::vector<std::size_t> pareto_front(const std::vector<std::array<double, 3>>& points,
                                      double tol = 1e-9);

struct SweepCell {
  std::size_t lambda_index = 0;
  std::size_t mu_index = 0;
  double lambda = 0.0;
  double mu = 0.0;
  std::optional<BASolution> solution;
  std::string error;  ///< set when the solve failed
};

struct SweepResult {
  std::vector<SweepCell> cells;     ///< lambda-major grid order
  std::vector<std::size_t> pareto;  ///< indices into `cells`, grid order
};

SweepResult sweep_lagrange_grid(const JointSourceModel& model,
                                const std::vector<double>& lambda_grid,
                                const std::vector<double>& mu_grid, const SolveOptions& opts = {},
                                unsigned jobs = 1);

}  // namespace iwz
