#include "iwz/source_model.hpp"

#include "iwz/error.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

namespace iwz {

namespace {

void check_distortion_table(const Eigen::MatrixXd& d, std::size_t rows, std::size_t cols,
                            const char* name) {
  if (static_cast<std::size_t>(d.rows()) != rows || static_cast<std::size_t>(d.cols()) != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must be " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", got " + std::to_string(d.rows()) + "x" +
                    std::to_string(d.cols()));
  }
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (!std::isfinite(d(i, j)) || d(i, j) < 0.0) {
        throw Error(ErrorCode::InvalidArgument, std::string(name) + "(" + std::to_string(i) +
                                                    "," + std::to_string(j) +
                                                    ") must be finite and nonnegative");
      }
    }
  }
}

Eigen::MatrixXd hamming(std::size_t n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  d.diagonal().setZero();
  return d;
}

}  // namespace

Symbol Symbol::numeric(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {std::string(buf, res.ptr), v};
}

JointSourceModel make_model(Alphabet s_alpha, Alphabet x_alpha, Alphabet y_alpha,
                            Alphabet s_hat_alpha, Alphabet x_hat_alpha,
                            std::vector<double> p_sxy, Eigen::MatrixXd d_x,
                            Eigen::MatrixXd d_s) {
  if (s_alpha.empty() || x_alpha.empty() || y_alpha.empty() || s_hat_alpha.empty() ||
      x_hat_alpha.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "alphabets must be nonempty");
  }
  const std::size_t cells = s_alpha.size() * x_alpha.size() * y_alpha.size();
  if (p_sxy.size() != cells) {
    throw Error(ErrorCode::DimensionMismatch, "p_sxy has " + std::to_string(p_sxy.size()) +
                                                  " entries, expected " + std::to_string(cells));
  }
  check_distortion_table(d_x, x_alpha.size(), x_hat_alpha.size(), "d_x");
  check_distortion_table(d_s, s_alpha.size(), s_hat_alpha.size(), "d_s");

  JointSourceModel m;
  m.s_alphabet_ = std::move(s_alpha);
  m.x_alphabet_ = std::move(x_alpha);
  m.y_alphabet_ = std::move(y_alpha);
  m.s_hat_alphabet_ = std::move(s_hat_alpha);
  m.x_hat_alphabet_ = std::move(x_hat_alpha);
  m.p_sxy_ = std::move(p_sxy);
  m.d_x_ = std::move(d_x);
  m.d_s_ = std::move(d_s);
  m.derive();
  return m;
}

void JointSourceModel::derive() {
  const auto ns = static_cast<Eigen::Index>(s_size());
  const auto nx = static_cast<Eigen::Index>(x_size());
  const auto ny = static_cast<Eigen::Index>(y_size());
  const auto nsh = s_hat_size();

  p_xy_ = Eigen::MatrixXd::Zero(nx, ny);
  p_s_ = Eigen::VectorXd::Zero(ns);
  for (Eigen::Index s = 0; s < ns; ++s) {
    for (Eigen::Index x = 0; x < nx; ++x) {
      for (Eigen::Index y = 0; y < ny; ++y) {
        const double v = p(s, x, y);
        p_xy_(x, y) += v;
        p_s_(s) += v;
      }
    }
  }

  support_.assign(x_size() * y_size(), false);
  for (Eigen::Index x = 0; x < nx; ++x) {
    for (Eigen::Index y = 0; y < ny; ++y) {
      if (p_xy_(x, y) < kSupportFloor) {
        p_xy_(x, y) = 0.0;
      } else {
        support_[x * ny + y] = true;
      }
    }
  }
  p_x_ = p_xy_.rowwise().sum();
  p_y_ = p_xy_.colwise().sum().transpose();

  p_y_given_x_ = Eigen::MatrixXd::Zero(nx, ny);
  p_x_given_y_ = Eigen::MatrixXd::Zero(nx, ny);
  for (Eigen::Index x = 0; x < nx; ++x) {
    for (Eigen::Index y = 0; y < ny; ++y) {
      if (!support_[x * ny + y]) continue;
      p_y_given_x_(x, y) = p_xy_(x, y) / p_x_(x);
      p_x_given_y_(x, y) = p_xy_(x, y) / p_y_(y);
    }
  }

  d_mod_.assign(x_size() * y_size() * nsh, 0.0);
  for (Eigen::Index x = 0; x < nx; ++x) {
    for (Eigen::Index y = 0; y < ny; ++y) {
      if (!support_[x * ny + y]) continue;
      for (std::size_t sh = 0; sh < nsh; ++sh) {
        double acc = 0.0;
        for (Eigen::Index s = 0; s < ns; ++s) acc += p(s, x, y) * d_s_(s, sh);
        d_mod_[(x * ny + y) * nsh + sh] = acc / p_xy_(x, y);
      }
    }
  }
}

JointSourceModel build_from_table(Alphabet s_alpha, Alphabet x_alpha, Alphabet y_alpha,
                                  Alphabet s_hat_alpha, Alphabet x_hat_alpha,
                                  std::vector<double> p_table, Eigen::MatrixXd d_x_table,
                                  Eigen::MatrixXd d_s_table) {
  const std::size_t cells = s_alpha.size() * x_alpha.size() * y_alpha.size();
  if (p_table.size() != cells) {
    throw Error(ErrorCode::DimensionMismatch, "p_table has " + std::to_string(p_table.size()) +
                                                  " entries, expected " + std::to_string(cells));
  }
  for (std::size_t i = 0; i < p_table.size(); ++i) {
    if (!std::isfinite(p_table[i])) {
      throw Error(ErrorCode::NegativeProbability, "entry " + std::to_string(i) + " is not finite");
    }
    if (p_table[i] < 0.0) {
      throw Error(ErrorCode::NegativeProbability,
                  "entry " + std::to_string(i) + " is " + std::to_string(p_table[i]));
    }
  }
  const double total = std::accumulate(p_table.begin(), p_table.end(), 0.0);
  if (!(std::abs(total - 1.0) < 1e-9)) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, total);
    throw Error(ErrorCode::SumNotOne, "probabilities sum to " + std::string(buf, res.ptr));
  }
  for (double& v : p_table) v /= total;
  return make_model(std::move(s_alpha), std::move(x_alpha), std::move(y_alpha),
                    std::move(s_hat_alpha), std::move(x_hat_alpha), std::move(p_table),
                    std::move(d_x_table), std::move(d_s_table));
}

std::vector<double> grid_centers(int count, double lo, double hi) {
  std::vector<double> out(static_cast<std::size_t>(count));
  const double width = (hi - lo) / count;
  for (int i = 0; i < count; ++i) out[i] = lo + (i + 0.5) * width;
  return out;
}

JointSourceModel build_gaussian_mixture_model(const GaussianMixtureParams& params) {
  if (!(params.sigma_x2 > 0.0) || !(params.sigma_y2 > 0.0)) {
    throw Error(ErrorCode::NonPositiveDefinite, "variances must be positive");
  }
  const double thetas[2] = {params.theta_0, params.theta_1};
  for (int s = 0; s < 2; ++s) {
    const double det = params.sigma_x2 * params.sigma_y2 - thetas[s] * thetas[s];
    if (!(det > 0.0)) {
      throw Error(ErrorCode::NonPositiveDefinite,
                  "covariance of class " + std::to_string(s) + " has determinant " +
                      std::to_string(det));
    }
  }
  if (params.grid_count < 2) {
    throw Error(ErrorCode::InvalidArgument, "grid_count must be at least 2");
  }
  if (!(params.grid_min < params.grid_max)) {
    throw Error(ErrorCode::InvalidArgument, "grid_min must be below grid_max");
  }

  const auto grid = grid_centers(params.grid_count, params.grid_min, params.grid_max);
  const std::size_t n = grid.size();
  std::vector<double> p(2 * n * n);
  for (int s = 0; s < 2; ++s) {
    const double det = params.sigma_x2 * params.sigma_y2 - thetas[s] * thetas[s];
    // Inverse of [[sx2, t], [t, sy2]].
    const double ixx = params.sigma_y2 / det;
    const double iyy = params.sigma_x2 / det;
    const double ixy = -thetas[s] / det;
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double x = grid[i];
        const double y = grid[j];
        const double q = ixx * x * x + 2.0 * ixy * x * y + iyy * y * y;
        const double f = norm * std::exp(-0.5 * q);
        p[(s * n + i) * n + j] = f;
        mass += f;
      }
    }
    for (std::size_t k = 0; k < n * n; ++k) p[s * n * n + k] *= 0.5 / mass;
  }

  Alphabet axis;
  axis.reserve(n);
  for (double g : grid) axis.push_back(Symbol::numeric(g));
  Alphabet binary{Symbol::numeric(0), Symbol::numeric(1)};

  Eigen::MatrixXd d_x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d_x(i, j) = (grid[i] - grid[j]) * (grid[i] - grid[j]);
  }
  return make_model(binary, axis, axis, binary, axis, std::move(p), std::move(d_x), hamming(2));
}

JointSourceModel build_tiny_dsbs(double flip_sx, double flip_xy) {
  std::vector<double> p(8);
  for (int s = 0; s < 2; ++s) {
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        const double px = (x == s) ? 1.0 - flip_sx : flip_sx;
        const double py = (y == x) ? 1.0 - flip_xy : flip_xy;
        p[(s * 2 + x) * 2 + y] = 0.5 * px * py;
      }
    }
  }
  Alphabet binary{Symbol::numeric(0), Symbol::numeric(1)};
  return build_from_table(binary, binary, binary, binary, binary, std::move(p), hamming(2),
                          hamming(2));
}

Eigen::VectorXd posterior_s(const JointSourceModel& model, std::size_t x, std::size_t y) {
  if (x >= model.x_size() || y >= model.y_size() || !model.supported(x, y)) {
    throw Error(ErrorCode::OutOfSupport,
                "(x=" + std::to_string(x) + ", y=" + std::to_string(y) + ") has P(x,y)=0");
  }
  Eigen::VectorXd post(static_cast<Eigen::Index>(model.s_size()));
  for (std::size_t s = 0; s < model.s_size(); ++s) post(s) = model.p(s, x, y);
  return post / post.sum();
}

double modified_distortion(const JointSourceModel& model, std::size_t x, std::size_t y,
                           std::size_t s_hat) {
  if (s_hat >= model.s_hat_size()) {
    throw Error(ErrorCode::InvalidArgument, "s_hat index out of range");
  }
  const Eigen::VectorXd post = posterior_s(model, x, y);
  return post.dot(model.d_s().col(static_cast<Eigen::Index>(s_hat)));
}

double entropy_bits(const Eigen::Ref<const Eigen::VectorXd>& pmf) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < pmf.size(); ++i) {
    if (pmf(i) > 0.0) h -= pmf(i) * std::log2(pmf(i));
  }
  return h;
}

}  // namespace iwz
