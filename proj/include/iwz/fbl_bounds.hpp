#pragma once

#include "iwz/ba_solver.hpp"
#include "iwz/source_model.hpp"

#include <cstdint>
#include <vector>

namespace iwz {

/// Monte Carlo estimate of an excess-probability bound at blocklength n.
struct BoundEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long long trials = 0;
  long long n = 0;
  double log2_codebook_size = 0.0;  ///< log2 M; M itself overflows at large n
  double dist_x = 0.0;
  double dist_s = 0.0;
};

struct BoundOptions {
  long long trials = 1000;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
};

/// E[1 - 1[d_ns <= D_s and d_n <= D] (1 + 2^(sum iota(u;x) - sum iota(u;y)) / M)^-1]
/// with the codebook size given as log2 M >= 0.
/// over i.i.d. blocks (s, x, y, u)^n drawn from P(s,x,y) P(u|x). Trial t uses
/// its own sub-stream, so paired calls with one seed see identical blocks.
BoundEstimate theorem3_bound_mc(const JointSourceModel& model, const BASolution& solution,
                                long long n, double log2_codebook_size, double dist_x,
                                double dist_s, const BoundOptions& opts = {});

/// P[sum of density differences > gamma, or d_ns > D_s, or d_n > D] + 2^gamma / M
/// with gamma = log2 M - log2 n, so the additive term is 1/n. Clamped to 1.
BoundEstimate relaxed_bound(const JointSourceModel& model, const BASolution& solution,
                            long long n, double log2_codebook_size, double dist_x,
                            double dist_s, const BoundOptions& opts = {});

/// Sample mean and standard error (population variance) accumulated in order.
struct RunningMean {
  long long count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v);
  double std_error() const;
};

}  // namespace iwz
