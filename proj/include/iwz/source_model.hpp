#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace iwz {

/// One alphabet letter. Discretized continuous alphabets carry the grid value.
struct Symbol {
  std::string label;
  std::optional<double> value;

  static Symbol numeric(double v);
  static Symbol named(std::string name) { return {std::move(name), std::nullopt}; }

  bool operator==(const Symbol&) const = default;
};

using Alphabet = std::vector<Symbol>;

/// Probabilities of P(x,y) below this are outside the support.
inline constexpr double kSupportFloor = 1e-300;

/// Finite joint source P(s,x,y) with reconstruction alphabets and the two
/// per-letter distortion tables d(x, x_hat) and d_s(s, s_hat).
///
/// Immutable once built. Derived quantities (marginals, conditionals, the
/// class posterior and the modified distortion d'(x,y,s_hat)) are cached at
/// construction so every query is a plain read.
class JointSourceModel {
 public:
  std::size_t s_size() const noexcept { return s_alphabet_.size(); }
  std::size_t x_size() const noexcept { return x_alphabet_.size(); }
  std::size_t y_size() const noexcept { return y_alphabet_.size(); }
  std::size_t s_hat_size() const noexcept { return s_hat_alphabet_.size(); }
  std::size_t x_hat_size() const noexcept { return x_hat_alphabet_.size(); }

  const Alphabet& s_alphabet() const noexcept { return s_alphabet_; }
  const Alphabet& x_alphabet() const noexcept { return x_alphabet_; }
  const Alphabet& y_alphabet() const noexcept { return y_alphabet_; }
  const Alphabet& s_hat_alphabet() const noexcept { return s_hat_alphabet_; }
  const Alphabet& x_hat_alphabet() const noexcept { return x_hat_alphabet_; }

  double p(std::size_t s, std::size_t x, std::size_t y) const {
    return p_sxy_[(s * x_size() + x) * y_size() + y];
  }
  const std::vector<double>& p_sxy() const noexcept { return p_sxy_; }

  /// Indexed (x, y).
  const Eigen::MatrixXd& p_xy() const noexcept { return p_xy_; }
  const Eigen::VectorXd& p_s() const noexcept { return p_s_; }
  const Eigen::VectorXd& p_x() const noexcept { return p_x_; }
  const Eigen::VectorXd& p_y() const noexcept { return p_y_; }
  /// P(y|x), indexed (x, y); zero rows for x outside the support.
  const Eigen::MatrixXd& p_y_given_x() const noexcept { return p_y_given_x_; }
  /// P(x|y), indexed (x, y); zero columns for y outside the support.
  const Eigen::MatrixXd& p_x_given_y() const noexcept { return p_x_given_y_; }

  bool supported(std::size_t x, std::size_t y) const { return support_[x * y_size() + y]; }
  bool x_supported(std::size_t x) const { return p_x_[static_cast<Eigen::Index>(x)] > 0.0; }
  bool y_supported(std::size_t y) const { return p_y_[static_cast<Eigen::Index>(y)] > 0.0; }

  /// Indexed (x, x_hat).
  const Eigen::MatrixXd& d_x() const noexcept { return d_x_; }
  /// Indexed (s, s_hat).
  const Eigen::MatrixXd& d_s() const noexcept { return d_s_; }

  /// Cached d'(x, y, s_hat); zero outside the support. Unchecked.
  double modified(std::size_t x, std::size_t y, std::size_t s_hat) const {
    return d_mod_[(x * y_size() + y) * s_hat_size() + s_hat];
  }

 private:
  friend JointSourceModel make_model(Alphabet, Alphabet, Alphabet, Alphabet, Alphabet,
                                     std::vector<double>, Eigen::MatrixXd, Eigen::MatrixXd);
  JointSourceModel() = default;
  void derive();

  Alphabet s_alphabet_, x_alphabet_, y_alphabet_, s_hat_alphabet_, x_hat_alphabet_;
  std::vector<double> p_sxy_;
  Eigen::MatrixXd d_x_, d_s_;

  Eigen::MatrixXd p_xy_, p_y_given_x_, p_x_given_y_;
  Eigen::VectorXd p_s_, p_x_, p_y_;
  std::vector<bool> support_;
  std::vector<double> d_mod_;
};

/// Assembles a model from an already normalized pmf; validates distortions.
JointSourceModel make_model(Alphabet s_alpha, Alphabet x_alpha, Alphabet y_alpha,
                            Alphabet s_hat_alpha, Alphabet x_hat_alpha,
                            std::vector<double> p_sxy, Eigen::MatrixXd d_x,
                            Eigen::MatrixXd d_s);

/// `p_table` is flat in (s, x, y) row-major order. A total mass within 1e-9
/// of one is renormalized; anything further off is rejected.
JointSourceModel build_from_table(Alphabet s_alpha, Alphabet x_alpha, Alphabet y_alpha,
                                  Alphabet s_hat_alpha, Alphabet x_hat_alpha,
                                  std::vector<double> p_table, Eigen::MatrixXd d_x_table,
                                  Eigen::MatrixXd d_s_table);

struct GaussianMixtureParams {
  double sigma_x2 = 2.0;
  double sigma_y2 = 1.0;
  double theta_0 = 1.0;
  double theta_1 = -1.0;
  int grid_count = 100;
  double grid_min = -10.0;
  double grid_max = 10.0;
};

/// Two equiprobable classes, (X,Y) | S=s ~ N(0, [[sx2, theta_s], [theta_s, sy2]]),
/// discretized on cell centers of a uniform grid. Squared-error d, Hamming d_s.
JointSourceModel build_gaussian_mixture_model(const GaussianMixtureParams& params);

/// Uniform-grid cell centers used by the mixture builder.
std::vector<double> grid_centers(int count, double lo, double hi);

/// S ~ Bern(1/2), X = S xor Bern(flip_sx), Y = X xor Bern(flip_xy), Hamming
/// distortions. The defaults (0.1, 0.25) are the canonical tiny test model.
JointSourceModel build_tiny_dsbs(double flip_sx = 0.1, double flip_xy = 0.25);

/// P(s | x, y). Throws OutOfSupport when P(x,y) = 0.
Eigen::VectorXd posterior_s(const JointSourceModel& model, std::size_t x, std::size_t y);

/// d'(x, y, s_hat) = sum_s P(s|x,y) d_s(s, s_hat). Throws OutOfSupport.
double modified_distortion(const JointSourceModel& model, std::size_t x, std::size_t y,
                           std::size_t s_hat);

/// Shannon entropy in bits of a pmf.
double entropy_bits(const Eigen::Ref<const Eigen::VectorXd>& pmf);

}  // namespace iwz
