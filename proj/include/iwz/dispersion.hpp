#pragma once

#include "iwz/ba_solver.hpp"
#include "iwz/source_model.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>

namespace iwz {

/// First moment J and covariance V of the per-letter vector
/// j = [iota(x;u) - iota(u;y), d(x, x_hat), d_s(s, s_hat)].
struct MomentSummary {
  Eigen::Vector3d j_mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d v_cov = Eigen::Matrix3d::Zero();
};

/// log2(P(b|a) / P(b)); `p_b_given_a` is indexed (a, b). Throws OutOfSupport
/// when either probability is zero.
double info_density(const Eigen::MatrixXd& p_b_given_a, const Eigen::VectorXd& p_b,
                    std::size_t a, std::size_t b);

Eigen::Vector3d j_vector(const JointSourceModel& model, const BASolution& solution,
                         std::size_t s, std::size_t x, std::size_t y, std::size_t u);

MomentSummary exact_moments(const JointSourceModel& model, const BASolution& solution);

struct MvnOptions {
  std::size_t samples = 200000;
  std::uint64_t seed = 42;
  /// Sample even when V is diagonal (for cross-checking the closed form).
  bool force_sampling = false;
};

struct ProbabilityEstimate {
  double probability = 0.0;
  double std_error = 0.0;
};

/// Lower-orthant probabilities P[B <= b] for B ~ N(0, V) in three dimensions.
///
/// A diagonal V (off-diagonals below 1e-12) is evaluated in closed form.
/// Otherwise one fixed sample of `samples` draws from N(0, V + 1e-12 I) is
/// drawn at construction and reused by every query, so the estimate is a
/// monotone step function of b.
class GaussianOrthant {
 public:
  explicit GaussianOrthant(const Eigen::Matrix3d& v, const MvnOptions& opts = {});

  ProbabilityEstimate lower_prob(const Eigen::Vector3d& b) const;

  /// Smallest b1 with P[B <= (b1, b2, b3)] >= 1 - eps, or nullopt when the
  /// b1 -> infinity limit stays below 1 - eps.
  std::optional<double> min_feasible_b1(double b2, double b3, double eps) const;

  bool exact() const noexcept { return diagonal_; }

 private:
  Eigen::Matrix3d v_;
  bool diagonal_ = false;
  Eigen::Vector3d sigma_ = Eigen::Vector3d::Zero();
  Eigen::Matrix3Xd draws_;
};

ProbabilityEstimate mvn_lower_prob(const Eigen::Matrix3d& v, const Eigen::Vector3d& b,
                                   const MvnOptions& opts = {});

std::optional<double> min_feasible_b1(const Eigen::Matrix3d& v, double b2, double b3,
                                      double eps, const MvnOptions& opts = {});

/// Second-order achievable rate in bits at blocklength n for excess
/// probability eps and distortion targets (D, D_s):
///   b2 = sqrt(n) (D - J2 - 2 log2(n)/n), b3 likewise with D_s and J3,
///   R = J1 + b1*/sqrt(n) + 2 log2(n)/n.
/// nullopt when no b1 makes the threshold vector feasible.
std::optional<double> second_order_rate(const MomentSummary& moments,
                                        const GaussianOrthant& orthant, long long n, double eps,
                                        double dist_x_target, double dist_s_target);

std::optional<double> second_order_rate(const JointSourceModel& model,
                                        const BASolution& solution, long long n, double eps,
                                        double dist_x_target, double dist_s_target,
                                        const MvnOptions& opts = {});

}  // namespace iwz
