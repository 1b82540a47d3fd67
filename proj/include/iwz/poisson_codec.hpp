#pragma once

#include "iwz/ba_solver.hpp"
#include "iwz/fbl_bounds.hpp"
#include "iwz/rng.hpp"
#include "iwz/source_model.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iwz {

/// Default cap on |U|^n * M race entries.
inline constexpr std::size_t kDefaultRaceBudget = std::size_t{1} << 20;

/// Number of race entries |U|^n * M; throws BudgetExceeded above `budget`.
std::size_t race_table_size(std::size_t u_size, std::size_t n, std::size_t bins,
                            std::size_t budget = kDefaultRaceBudget);

/// One Exp(1) variate per (u-sequence, bin), shared by encoder and decoder.
/// u-sequences are enumerated little-endian: index = sum_i u_i |U|^i.
class SharedRandomness {
 public:
  SharedRandomness(std::size_t u_size, std::size_t n, std::size_t bins, Rng& rng,
                   std::size_t budget = kDefaultRaceBudget);

  std::size_t u_size() const noexcept { return u_size_; }
  std::size_t block_length() const noexcept { return n_; }
  std::size_t bins() const noexcept { return bins_; }
  std::size_t sequences() const noexcept { return sequences_; }

  /// Weight of u-sequence `seq` in 0-based bin `bin`.
  double weight(std::size_t seq, std::size_t bin) const { return weights_[seq * bins_ + bin]; }

  /// Symbol i of u-sequence `seq`.
  std::size_t symbol(std::size_t seq, std::size_t i) const;

 private:
  std::size_t u_size_;
  std::size_t n_;
  std::size_t bins_;
  std::size_t sequences_;
  std::vector<double> weights_;
};

struct EncodeResult {
  std::size_t bin = 1;       ///< message l in 1..M
  std::size_t sequence = 0;  ///< selected u-sequence index
};

/// argmin over (u-sequence, bin) of weight / (prod_i P(u_i|x_i) / M), entries
/// with zero density excluded, ties to the lowest enumeration index.
/// `p_u_given_x` is indexed (x, u).
EncodeResult encode(std::span<const std::size_t> x_seq, const SharedRandomness& shared,
                    const Eigen::MatrixXd& p_u_given_x);

struct DecodeResult {
  std::size_t sequence = 0;
  std::vector<std::size_t> s_hat;
  std::vector<std::size_t> x_hat;
};

/// Race in bin l (1-based) against prod_i P(u_i|y_i); outputs g(u_i, y_i).
/// `p_u_given_y` is indexed (y, u).
DecodeResult decode(std::size_t bin, std::span<const std::size_t> y_seq,
                    const SharedRandomness& shared, const Eigen::MatrixXd& p_u_given_y,
                    const ReconstructionMap& recon);

struct CodecReport {
  BoundEstimate excess;            ///< P[d_ns >= D_s or d_n >= D]
  double mismatch_rate = 0.0;      ///< frequency of decoder u != encoder u
  double mismatch_std_error = 0.0;
  /// Per-trial average of 1 - (1 + 2^(sum density diff) / M)^-1 at the encoder's u.
  double matching_bound = 0.0;
  double matching_bound_std_error = 0.0;
};

struct CodecOptions {
  long long trials = 10000;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  std::size_t budget = kDefaultRaceBudget;
};

CodecReport simulate_excess(const JointSourceModel& model, const BASolution& solution,
                            std::size_t n, std::size_t bins, double dist_x, double dist_s,
                            const CodecOptions& opts = {});

}  // namespace iwz
