#pragma once

#include "iwz/ba_solver.hpp"
#include "iwz/rng.hpp"
#include "iwz/source_model.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace iwz {

struct Letter {
  std::size_t s = 0;
  std::size_t x = 0;
  std::size_t y = 0;
};

/// Draws i.i.d. letters from P(s,x,y) and auxiliary symbols from P(u|x) by
/// inverse-CDF lookup. Const and safe to share across threads.
class BlockSampler {
 public:
  BlockSampler(const JointSourceModel& model, const TestChannel& channel);

  Letter draw_letter(Rng& rng) const;
  std::size_t draw_u(std::size_t x, Rng& rng) const;

 private:
  static std::size_t pick(const std::vector<double>& cumulative, Rng& rng);

  std::size_t x_size_;
  std::size_t y_size_;
  std::vector<double> joint_cdf_;
  std::vector<std::vector<double>> row_cdfs_;
};

}  // namespace iwz
