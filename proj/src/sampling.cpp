#include "iwz/sampling.hpp"

#include <algorithm>

namespace iwz {

namespace {

std::vector<double> cumulate(const auto& weights) {
  std::vector<double> cdf;
  cdf.reserve(static_cast<std::size_t>(weights.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(weights.size()); ++i) {
    acc += weights[i];
    cdf.push_back(acc);
  }
  return cdf;
}

}  // namespace

BlockSampler::BlockSampler(const JointSourceModel& model, const TestChannel& channel)
    : x_size_(model.x_size()), y_size_(model.y_size()) {
  std::vector<double> joint = model.p_sxy();
  for (std::size_t k = 0; k < joint.size(); ++k) {
    const std::size_t xy = k % (x_size_ * y_size_);
    if (!model.supported(xy / y_size_, xy % y_size_)) joint[k] = 0.0;
  }
  joint_cdf_ = cumulate(joint);
  row_cdfs_.reserve(channel.x_size());
  for (Eigen::Index x = 0; x < channel.p_u_given_x.rows(); ++x) {
    const Eigen::VectorXd row = channel.p_u_given_x.row(x).transpose();
    row_cdfs_.push_back(cumulate(row));
  }
}

std::size_t BlockSampler::pick(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, cumulative.back());
  const double r = unif(rng);
  // upper_bound never lands on a zero-mass entry except when r rounds up to
  // the total; fall back to the last entry carrying mass.
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  if (it != cumulative.end()) return static_cast<std::size_t>(it - cumulative.begin());
  std::size_t k = cumulative.size() - 1;
  while (k > 0 && cumulative[k] == cumulative[k - 1]) --k;
  return k;
}

Letter BlockSampler::draw_letter(Rng& rng) const {
  const std::size_t k = pick(joint_cdf_, rng);
  const std::size_t xy = k % (x_size_ * y_size_);
  return {k / (x_size_ * y_size_), xy / y_size_, xy % y_size_};
}

std::size_t BlockSampler::draw_u(std::size_t x, Rng& rng) const {
  return pick(row_cdfs_[x], rng);
}

}  // namespace iwz
