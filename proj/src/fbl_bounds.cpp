#include "iwz/fbl_bounds.hpp"

#include "iwz/error.hpp"
#include "iwz/parallel.hpp"
#include "iwz/rng.hpp"
#include "iwz/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace iwz {

namespace {

struct BlockStats {
  double density_sum = 0.0;  ///< sum_i iota(u_i;x_i) - iota(u_i;y_i), bits
  double dist_x = 0.0;       ///< d_n
  double dist_s = 0.0;       ///< d_ns
};

void check_args(long long n, double log2_m, const BoundOptions& opts) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "blocklength must be >= 1");
  if (!(log2_m >= 0.0) || std::isinf(log2_m)) {
    throw Error(ErrorCode::InvalidArgument, "log2 M must be finite and >= 0");
  }
  if (opts.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
}

template <class Score>
BoundEstimate run_trials(const JointSourceModel& model, const BASolution& solution, long long n,
                         double log2_m, double dist_x, double dist_s,
                         const BoundOptions& opts, Score&& score) {
  check_args(n, log2_m, opts);
  validate_channel(model, solution.channel);
  const BlockSampler sampler(model, solution.channel);
  const Eigen::MatrixXd log_u_given_x = solution.channel.p_u_given_x.array().log2();
  const Eigen::MatrixXd log_u_given_y =
      derive_u_given_y(model, solution.channel).array().log2();

  std::vector<double> values(static_cast<std::size_t>(opts.trials));
  parallel_for(values.size(), opts.jobs, [&](std::size_t t) {
    Rng rng = substream(opts.seed, StreamTag::BoundTrial, t);
    BlockStats block;
    for (long long i = 0; i < n; ++i) {
      const Letter l = sampler.draw_letter(rng);
      const std::size_t u = sampler.draw_u(l.x, rng);
      block.density_sum += log_u_given_x(l.x, u) - log_u_given_y(l.y, u);
      block.dist_x += model.d_x()(l.x, solution.recon.x_hat_at(u, l.y));
      block.dist_s += model.d_s()(l.s, solution.recon.s_hat_at(u, l.y));
    }
    block.dist_x /= static_cast<double>(n);
    block.dist_s /= static_cast<double>(n);
    values[t] = score(block);
  });

  RunningMean acc;
  for (double v : values) acc.add(v);
  BoundEstimate out;
  out.mean = acc.mean;
  out.std_error = acc.std_error();
  out.trials = opts.trials;
  out.n = n;
  out.log2_codebook_size = log2_m;
  out.dist_x = dist_x;
  out.dist_s = dist_s;
  return out;
}

}  // namespace

void RunningMean::add(double v) {
  ++count;
  const double delta = v - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (v - mean);
}

double RunningMean::std_error() const {
  if (count == 0) return 0.0;
  const double var = std::max(0.0, m2 / static_cast<double>(count));
  return std::sqrt(var / static_cast<double>(count));
}

BoundEstimate theorem3_bound_mc(const JointSourceModel& model, const BASolution& solution,
                                long long n, double log2_m, double dist_x, double dist_s,
                                const BoundOptions& opts) {
  return run_trials(model, solution, n, log2_m, dist_x, dist_s, opts,
                    [&](const BlockStats& b) {
                      if (!(b.dist_s <= dist_s && b.dist_x <= dist_x)) return 1.0;
                      // 1 - (1 + 2^a / M)^-1 == (1 + 2^(log2 M - a))^-1
                      return 1.0 / (1.0 + std::exp2(log2_m - b.density_sum));
                    });
}

BoundEstimate relaxed_bound(const JointSourceModel& model, const BASolution& solution,
                            long long n, double log2_m, double dist_x, double dist_s,
                            const BoundOptions& opts) {
  const double gamma = log2_m - std::log2(static_cast<double>(n));
  BoundEstimate est = run_trials(model, solution, n, log2_m, dist_x, dist_s, opts,
                                 [&](const BlockStats& b) {
                                   const bool excess = b.density_sum > gamma ||
                                                       b.dist_s > dist_s || b.dist_x > dist_x;
                                   return excess ? 1.0 : 0.0;
                                 });
  est.mean = std::min(1.0, est.mean + 1.0 / static_cast<double>(n));
  return est;
}

}  // namespace iwz
