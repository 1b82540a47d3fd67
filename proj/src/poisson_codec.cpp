#include "iwz/poisson_codec.hpp"

#include "iwz/error.hpp"
#include "iwz/parallel.hpp"
#include "iwz/sampling.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace iwz {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// argmin over u-sequences of log(weight) - sum_i log P(u_i | c_i) within one
// bin, where `log_rows` is indexed (context, u).
struct RaceWinner {
  std::size_t sequence = 0;
  std::size_t bin = 0;
  bool found = false;
};

std::vector<double> sequence_log_density(std::span<const std::size_t> context,
                                         const SharedRandomness& shared,
                                         const Eigen::MatrixXd& log_rows) {
  std::vector<double> out(shared.sequences(), 0.0);
  for (std::size_t seq = 0; seq < shared.sequences(); ++seq) {
    double acc = 0.0;
    std::size_t rest = seq;
    for (std::size_t i = 0; i < context.size(); ++i) {
      acc += log_rows(static_cast<Eigen::Index>(context[i]),
                      static_cast<Eigen::Index>(rest % shared.u_size()));
      rest /= shared.u_size();
    }
    out[seq] = acc;
  }
  return out;
}

Eigen::MatrixXd log_table(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      out(i, j) = p(i, j) > 0.0 ? std::log(p(i, j)) : -kInf;
    }
  }
  return out;
}

void check_context(std::span<const std::size_t> seq, const SharedRandomness& shared,
                   const Eigen::MatrixXd& rows, const char* what) {
  if (seq.size() != shared.block_length()) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " sequence length mismatch");
  }
  if (static_cast<std::size_t>(rows.cols()) != shared.u_size()) {
    throw Error(ErrorCode::DimensionMismatch, "conditional table has wrong |U|");
  }
  for (std::size_t v : seq) {
    if (v >= static_cast<std::size_t>(rows.rows())) {
      throw Error(ErrorCode::DimensionMismatch, std::string(what) + " symbol out of range");
    }
  }
}

}  // namespace

std::size_t race_table_size(std::size_t u_size, std::size_t n, std::size_t bins,
                            std::size_t budget) {
  if (u_size == 0 || bins == 0) throw Error(ErrorCode::InvalidArgument, "empty race table");
  std::size_t size = bins;
  double approx = static_cast<double>(bins);
  bool over = size > budget;
  for (std::size_t i = 0; i < n; ++i) {
    approx *= static_cast<double>(u_size);
    if (!over) {
      if (size > budget / u_size) {
        over = true;
      } else {
        size *= u_size;
      }
    }
  }
  if (over || size > budget) {
    std::ostringstream msg;
    msg << "race table |U|^n*M = " << u_size << "^" << n << "*" << bins << " = " << approx
        << " exceeds budget " << budget;
    throw Error(ErrorCode::BudgetExceeded, msg.str());
  }
  return size;
}

SharedRandomness::SharedRandomness(std::size_t u_size, std::size_t n, std::size_t bins,
                                   Rng& rng, std::size_t budget)
    : u_size_(u_size), n_(n), bins_(bins) {
  const std::size_t entries = race_table_size(u_size, n, bins, budget);
  sequences_ = entries / bins;
  weights_.resize(entries);
  std::exponential_distribution<double> expo(1.0);
  for (double& w : weights_) {
    do {
      w = expo(rng);
    } while (!(w > 0.0));
  }
}

std::size_t SharedRandomness::symbol(std::size_t seq, std::size_t i) const {
  for (std::size_t k = 0; k < i; ++k) seq /= u_size_;
  return seq % u_size_;
}

EncodeResult encode(std::span<const std::size_t> x_seq, const SharedRandomness& shared,
                    const Eigen::MatrixXd& p_u_given_x) {
  check_context(x_seq, shared, p_u_given_x, "x");
  const std::vector<double> log_density =
      sequence_log_density(x_seq, shared, log_table(p_u_given_x));
  // The uniform bin mass 1/M scales every ratio equally and drops out.
  RaceWinner best;
  double best_score = kInf;
  for (std::size_t seq = 0; seq < shared.sequences(); ++seq) {
    if (log_density[seq] == -kInf) continue;
    for (std::size_t bin = 0; bin < shared.bins(); ++bin) {
      const double score = std::log(shared.weight(seq, bin)) - log_density[seq];
      if (!best.found || score < best_score) {
        best = {seq, bin, true};
        best_score = score;
      }
    }
  }
  if (!best.found) throw Error(ErrorCode::NoSupport, "encoder density is zero everywhere");
  return {best.bin + 1, best.sequence};
}

DecodeResult decode(std::size_t bin, std::span<const std::size_t> y_seq,
                    const SharedRandomness& shared, const Eigen::MatrixXd& p_u_given_y,
                    const ReconstructionMap& recon) {
  if (bin < 1 || bin > shared.bins()) {
    throw Error(ErrorCode::InvalidArgument, "message outside 1..M");
  }
  check_context(y_seq, shared, p_u_given_y, "y");
  const std::vector<double> log_density =
      sequence_log_density(y_seq, shared, log_table(p_u_given_y));
  RaceWinner best;
  double best_score = kInf;
  for (std::size_t seq = 0; seq < shared.sequences(); ++seq) {
    if (log_density[seq] == -kInf) continue;
    const double score = std::log(shared.weight(seq, bin - 1)) - log_density[seq];
    if (!best.found || score < best_score) {
      best = {seq, bin - 1, true};
      best_score = score;
    }
  }
  if (!best.found) throw Error(ErrorCode::NoSupport, "decoder density is zero everywhere");

  DecodeResult out;
  out.sequence = best.sequence;
  out.s_hat.resize(y_seq.size());
  out.x_hat.resize(y_seq.size());
  for (std::size_t i = 0; i < y_seq.size(); ++i) {
    const std::size_t u = shared.symbol(best.sequence, i);
    out.s_hat[i] = recon.s_hat_at(u, y_seq[i]);
    out.x_hat[i] = recon.x_hat_at(u, y_seq[i]);
  }
  return out;
}

CodecReport simulate_excess(const JointSourceModel& model, const BASolution& solution,
                            std::size_t n, std::size_t bins, double dist_x, double dist_s,
                            const CodecOptions& opts) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "blocklength must be >= 1");
  if (opts.trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  validate_channel(model, solution.channel);
  const std::size_t nu = solution.channel.u_size();
  race_table_size(nu, n, bins, opts.budget);

  const BlockSampler sampler(model, solution.channel);
  const Eigen::MatrixXd& p_u_given_x = solution.channel.p_u_given_x;
  const Eigen::MatrixXd p_u_given_y = derive_u_given_y(model, solution.channel);

  struct TrialOutcome {
    double excess = 0.0;
    double mismatch = 0.0;
    double matching = 0.0;
  };
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(opts.trials));
  parallel_for(outcomes.size(), opts.jobs, [&](std::size_t t) {
    Rng rng = substream(opts.seed, StreamTag::CodecTrial, t);
    std::vector<std::size_t> xs(n), ys(n), ss(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Letter l = sampler.draw_letter(rng);
      ss[i] = l.s;
      xs[i] = l.x;
      ys[i] = l.y;
    }
    const SharedRandomness shared(nu, n, bins, rng, opts.budget);
    const EncodeResult enc = encode(xs, shared, p_u_given_x);
    const DecodeResult dec = decode(enc.bin, ys, shared, p_u_given_y, solution.recon);

    double dx = 0.0;
    double ds = 0.0;
    double density = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dx += model.d_x()(xs[i], dec.x_hat[i]);
      ds += model.d_s()(ss[i], dec.s_hat[i]);
      const std::size_t u = shared.symbol(enc.sequence, i);
      density += std::log2(p_u_given_x(xs[i], u)) - std::log2(p_u_given_y(ys[i], u));
    }
    dx /= static_cast<double>(n);
    ds /= static_cast<double>(n);

    TrialOutcome& o = outcomes[t];
    o.excess = (ds >= dist_s || dx >= dist_x) ? 1.0 : 0.0;
    o.mismatch = dec.sequence != enc.sequence ? 1.0 : 0.0;
    o.matching = 1.0 - 1.0 / (1.0 + std::exp2(density) / static_cast<double>(bins));
  });

  RunningMean excess, mismatch, matching;
  for (const auto& o : outcomes) {
    excess.add(o.excess);
    mismatch.add(o.mismatch);
    matching.add(o.matching);
  }
  CodecReport report;
  report.excess.mean = excess.mean;
  report.excess.std_error = excess.std_error();
  report.excess.trials = opts.trials;
  report.excess.n = static_cast<long long>(n);
  report.excess.log2_codebook_size = std::log2(static_cast<double>(bins));
  report.excess.dist_x = dist_x;
  report.excess.dist_s = dist_s;
  report.mismatch_rate = mismatch.mean;
  report.mismatch_std_error = mismatch.std_error();
  report.matching_bound = matching.mean;
  report.matching_bound_std_error = matching.std_error();
  return report;
}

}  // namespace iwz
