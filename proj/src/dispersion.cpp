#include "iwz/dispersion.hpp"

#include "iwz/error.hpp"
#include "iwz/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace iwz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_cdf(double z) {
  if (z == kInf) return 1.0;
  if (z == -kInf) return 0.0;
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// P[B_i <= b] for B_i ~ N(0, sigma^2), with the sigma = 0 limit 1[b >= 0].
double marginal_cdf(double sigma, double b) {
  if (sigma == 0.0) return b >= 0.0 ? 1.0 : 0.0;
  return std_normal_cdf(b / sigma);
}

void check_psd(const Eigen::Matrix3d& v) {
  if (!v.allFinite()) throw Error(ErrorCode::NotPSD, "covariance has non-finite entries");
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::NotPSD, "covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(v, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw Error(ErrorCode::NotPSD, "covariance has a negative eigenvalue");
  }
}

Eigen::Matrix3d sqrt_factor(const Eigen::Matrix3d& v) {
  const Eigen::Matrix3d jittered = v + 1e-12 * Eigen::Matrix3d::Identity();
  Eigen::LLT<Eigen::Matrix3d> llt(jittered);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Rank-deficient up to rounding: symmetric square root with clamped spectrum.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(jittered);
  const Eigen::Vector3d root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

}  // namespace

double info_density(const Eigen::MatrixXd& p_b_given_a, const Eigen::VectorXd& p_b,
                    std::size_t a, std::size_t b) {
  if (a >= static_cast<std::size_t>(p_b_given_a.rows()) ||
      b >= static_cast<std::size_t>(p_b_given_a.cols()) ||
      b >= static_cast<std::size_t>(p_b.size())) {
    throw Error(ErrorCode::OutOfSupport, "symbol index out of range");
  }
  const double cond = p_b_given_a(a, b);
  const double marg = p_b(b);
  if (!(cond > 0.0) || !(marg > 0.0)) {
    throw Error(ErrorCode::OutOfSupport, "information density undefined at (" +
                                             std::to_string(a) + "," + std::to_string(b) + ")");
  }
  return std::log2(cond / marg);
}

Eigen::Vector3d j_vector(const JointSourceModel& model, const BASolution& solution,
                         std::size_t s, std::size_t x, std::size_t y, std::size_t u) {
  if (s >= model.s_size() || x >= model.x_size() || y >= model.y_size() ||
      u >= solution.channel.u_size() || model.p(s, x, y) <= 0.0 || !model.supported(x, y)) {
    throw Error(ErrorCode::OutOfSupport, "(s,x,y) outside the support");
  }
  const Eigen::VectorXd p_u = solution.channel.p_u_given_x.transpose() * model.p_x();
  const Eigen::MatrixXd p_u_given_y = derive_u_given_y(model, solution.channel);
  const double density = info_density(solution.channel.p_u_given_x, p_u, x, u) -
                         info_density(p_u_given_y, p_u, y, u);
  return {density, model.d_x()(x, solution.recon.x_hat_at(u, y)),
          model.d_s()(s, solution.recon.s_hat_at(u, y))};
}

MomentSummary exact_moments(const JointSourceModel& model, const BASolution& solution) {
  const Eigen::MatrixXd& ch = solution.channel.p_u_given_x;
  const Eigen::MatrixXd p_u_given_y = derive_u_given_y(model, solution.channel);
  const std::size_t nu = solution.channel.u_size();

  Eigen::Vector3d first = Eigen::Vector3d::Zero();
  Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
  for (std::size_t x = 0; x < model.x_size(); ++x) {
    for (std::size_t y = 0; y < model.y_size(); ++y) {
      if (!model.supported(x, y)) continue;
      for (std::size_t u = 0; u < nu; ++u) {
        const double pc = ch(x, u);
        if (pc <= 0.0) continue;
        // iota(x;u) - iota(u;y); the P(u) terms cancel.
        const double density = std::log2(pc) - std::log2(p_u_given_y(y, u));
        const double dx = model.d_x()(x, solution.recon.x_hat_at(u, y));
        const std::size_t sh = solution.recon.s_hat_at(u, y);
        for (std::size_t s = 0; s < model.s_size(); ++s) {
          const double w = model.p(s, x, y) * pc;
          if (w <= 0.0) continue;
          const Eigen::Vector3d j(density, dx, model.d_s()(s, sh));
          first += w * j;
          second += w * j * j.transpose();
        }
      }
    }
  }
  MomentSummary out;
  out.j_mean = first;
  const Eigen::Matrix3d v = second - first * first.transpose();
  out.v_cov = 0.5 * (v + v.transpose());
  return out;
}

GaussianOrthant::GaussianOrthant(const Eigen::Matrix3d& v, const MvnOptions& opts) : v_(v) {
  check_psd(v);
  const Eigen::Matrix3d off = v - Eigen::Matrix3d(v.diagonal().asDiagonal());
  diagonal_ = off.cwiseAbs().maxCoeff() < 1e-12 && !opts.force_sampling;
  sigma_ = v.diagonal().cwiseMax(0.0).cwiseSqrt();
  if (diagonal_) return;
  if (opts.samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be positive");

  const Eigen::Matrix3d factor = sqrt_factor(v);
  Rng rng = substream(opts.seed, StreamTag::Gaussian);
  std::normal_distribution<double> normal;
  draws_.resize(3, static_cast<Eigen::Index>(opts.samples));
  for (Eigen::Index k = 0; k < draws_.cols(); ++k) {
    Eigen::Vector3d z;
    for (int i = 0; i < 3; ++i) z(i) = normal(rng);
    draws_.col(k) = factor * z;
  }
}

ProbabilityEstimate GaussianOrthant::lower_prob(const Eigen::Vector3d& b) const {
  if (b.hasNaN()) throw Error(ErrorCode::InvalidArgument, "threshold vector has NaN");
  if (diagonal_) {
    double p = 1.0;
    for (int i = 0; i < 3; ++i) p *= marginal_cdf(sigma_(i), b(i));
    return {p, 0.0};
  }
  std::size_t hits = 0;
  for (Eigen::Index k = 0; k < draws_.cols(); ++k) {
    if (draws_(0, k) <= b(0) && draws_(1, k) <= b(1) && draws_(2, k) <= b(2)) ++hits;
  }
  const double n = static_cast<double>(draws_.cols());
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

std::optional<double> GaussianOrthant::min_feasible_b1(double b2, double b3, double eps) const {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "eps must be in (0,1)");
  const double target = 1.0 - eps;
  if (diagonal_) {
    const double tail = marginal_cdf(sigma_(1), b2) * marginal_cdf(sigma_(2), b3);
    if (tail < target) return std::nullopt;
    if (sigma_(0) == 0.0) return 0.0;
    const double needed = target / tail;
    if (needed >= 1.0) return std::nullopt;
    return sigma_(0) * boost::math::quantile(boost::math::normal(), needed);
  }
  // Exact minimizer on the fixed sample: the k-th smallest B1 among draws
  // satisfying the other two coordinates.
  const double n = static_cast<double>(draws_.cols());
  const auto k = static_cast<std::size_t>(std::ceil(target * n - 1e-9));
  std::vector<double> candidates;
  candidates.reserve(static_cast<std::size_t>(draws_.cols()));
  for (Eigen::Index i = 0; i < draws_.cols(); ++i) {
    if (draws_(1, i) <= b2 && draws_(2, i) <= b3) candidates.push_back(draws_(0, i));
  }
  if (k == 0) return -kInf;
  if (candidates.size() < k) return std::nullopt;
  std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   candidates.end());
  return candidates[k - 1];
}

ProbabilityEstimate mvn_lower_prob(const Eigen::Matrix3d& v, const Eigen::Vector3d& b,
                                   const MvnOptions& opts) {
  return GaussianOrthant(v, opts).lower_prob(b);
}

std::optional<double> min_feasible_b1(const Eigen::Matrix3d& v, double b2, double b3,
                                      double eps, const MvnOptions& opts) {
  return GaussianOrthant(v, opts).min_feasible_b1(b2, b3, eps);
}

std::optional<double> second_order_rate(const MomentSummary& moments,
                                        const GaussianOrthant& orthant, long long n, double eps,
                                        double dist_x_target, double dist_s_target) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "blocklength must be at least 2");
  const double nd = static_cast<double>(n);
  const double root = std::sqrt(nd);
  const double penalty = 2.0 * std::log2(nd) / nd;
  const double b2 = root * (dist_x_target - moments.j_mean(1) - penalty);
  const double b3 = root * (dist_s_target - moments.j_mean(2) - penalty);
  const auto b1 = orthant.min_feasible_b1(b2, b3, eps);
  if (!b1) return std::nullopt;
  return moments.j_mean(0) + *b1 / root + penalty;
}

std::optional<double> second_order_rate(const JointSourceModel& model,
                                        const BASolution& solution, long long n, double eps,
                                        double dist_x_target, double dist_s_target,
                                        const MvnOptions& opts) {
  const MomentSummary moments = exact_moments(model, solution);
  const GaussianOrthant orthant(moments.v_cov, opts);
  return second_order_rate(moments, orthant, n, eps, dist_x_target, dist_s_target);
}

}  // namespace iwz
