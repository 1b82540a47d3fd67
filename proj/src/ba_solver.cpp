#include "iwz/ba_solver.hpp"

#include "iwz/error.hpp"
#include "iwz/parallel.hpp"
#include "iwz/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace iwz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_multipliers(double lambda, double mu) {
  if (!(lambda >= 0.0) || !(mu >= 0.0) || !std::isfinite(lambda) || !std::isfinite(mu)) {
    throw Error(ErrorCode::InvalidArgument, "Lagrange multipliers must be finite and nonnegative");
  }
}

double safe_log(double p) { return p < kSupportFloor ? kNegInf : std::log(p); }

// Index of the smallest entry; strict comparison keeps the lowest index on ties.
Eigen::Index argmin_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row(j) < row(best)) best = j;
  }
  return best;
}

}  // namespace

void validate_channel(const JointSourceModel& model, const TestChannel& channel) {
  if (channel.x_size() != model.x_size() || channel.u_size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "channel must have one row per x symbol");
  }
  for (std::size_t x = 0; x < channel.x_size(); ++x) {
    const auto row = channel.p_u_given_x.row(static_cast<Eigen::Index>(x));
    if ((row.array() < 0.0).any() || !row.allFinite()) {
      throw Error(ErrorCode::NegativeProbability, "channel row " + std::to_string(x));
    }
    if (std::abs(row.sum() - 1.0) > 1e-10) {
      throw Error(ErrorCode::SumNotOne, "channel row " + std::to_string(x));
    }
  }
}

TestChannel initial_channel(std::size_t x_size, std::size_t u_size, std::uint64_t seed) {
  Rng rng = substream(seed, StreamTag::SolverInit);
  std::normal_distribution<double> normal;
  TestChannel ch{Eigen::MatrixXd(static_cast<Eigen::Index>(x_size),
                                 static_cast<Eigen::Index>(u_size))};
  for (Eigen::Index x = 0; x < ch.p_u_given_x.rows(); ++x) {
    for (Eigen::Index u = 0; u < ch.p_u_given_x.cols(); ++u) {
      ch.p_u_given_x(x, u) = std::exp(0.01 * normal(rng));
    }
    ch.p_u_given_x.row(x) /= ch.p_u_given_x.row(x).sum();
  }
  return ch;
}

Eigen::MatrixXd derive_u_given_y(const JointSourceModel& model, const TestChannel& channel) {
  // (y, u) = sum_x P(x|y) P(u|x); unsupported y have an all-zero P(.|y) column.
  return model.p_x_given_y().transpose() * channel.p_u_given_x;
}

ReconstructionMap update_reconstruction(const JointSourceModel& model,
                                        const TestChannel& channel, double lambda, double mu) {
  check_multipliers(lambda, mu);
  const auto nx = static_cast<Eigen::Index>(model.x_size());
  const auto nu = static_cast<Eigen::Index>(channel.u_size());
  const auto nsh = static_cast<Eigen::Index>(model.s_hat_size());
  ReconstructionMap recon(channel.u_size(), model.y_size());

  Eigen::MatrixXd weights(nx, nu);
  Eigen::MatrixXd d_mod(nx, nsh);
  for (std::size_t y = 0; y < model.y_size(); ++y) {
    if (!model.y_supported(y)) continue;
    // weights(x, u) = P(x|y) P(u|x), proportional to P(x|u,y).
    weights = model.p_x_given_y().col(static_cast<Eigen::Index>(y)).asDiagonal() *
              channel.p_u_given_x;
    for (Eigen::Index x = 0; x < nx; ++x) {
      for (Eigen::Index sh = 0; sh < nsh; ++sh) d_mod(x, sh) = model.modified(x, y, sh);
    }
    const Eigen::MatrixXd cost_x = lambda * (weights.transpose() * model.d_x());
    const Eigen::MatrixXd cost_s = mu * (weights.transpose() * d_mod);
    for (Eigen::Index u = 0; u < nu; ++u) {
      const std::size_t k = static_cast<std::size_t>(u) * model.y_size() + y;
      recon.x_hat[k] = static_cast<std::size_t>(argmin_row(cost_x.row(u)));
      recon.s_hat[k] = static_cast<std::size_t>(argmin_row(cost_s.row(u)));
    }
  }
  return recon;
}

TestChannel update_test_channel(const JointSourceModel& model,
                                const Eigen::MatrixXd& p_u_given_y,
                                const ReconstructionMap& recon, double lambda, double mu) {
  check_multipliers(lambda, mu);
  const std::size_t nx = model.x_size();
  const std::size_t ny = model.y_size();
  const std::size_t nu = static_cast<std::size_t>(p_u_given_y.cols());
  if (static_cast<std::size_t>(p_u_given_y.rows()) != ny || recon.u_size != nu ||
      recon.y_size != ny) {
    throw Error(ErrorCode::DimensionMismatch, "P(u|y) and reconstruction sizes disagree");
  }

  Eigen::MatrixXd log_q(ny, nu);
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t u = 0; u < nu; ++u) log_q(y, u) = safe_log(p_u_given_y(y, u));
  }

  TestChannel out{Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nx),
                                            static_cast<Eigen::Index>(nu), 1.0 / nu)};
  Eigen::VectorXd exponent(nu);
  for (std::size_t x = 0; x < nx; ++x) {
    if (!model.x_supported(x)) continue;
    exponent.setZero();
    for (std::size_t y = 0; y < ny; ++y) {
      const double w = model.p_y_given_x()(x, y);
      if (w <= 0.0) continue;
      for (std::size_t u = 0; u < nu; ++u) {
        const double dist = lambda * model.d_x()(x, recon.x_hat_at(u, y)) +
                            mu * model.modified(x, y, recon.s_hat_at(u, y));
        exponent(u) += w * (log_q(y, u) - dist);
      }
    }
    const double top = exponent.maxCoeff();
    if (top == kNegInf || std::isnan(top)) {
      throw Error(ErrorCode::AllZeroRow, "no auxiliary symbol is reachable from x=" +
                                             std::to_string(x));
    }
    double mass = 0.0;
    for (std::size_t u = 0; u < nu; ++u) {
      const double v = std::exp(exponent(u) - top);
      out.p_u_given_x(x, u) = v;
      mass += v;
    }
    out.p_u_given_x.row(x) /= mass;
  }
  return out;
}

double evaluate_rate(const JointSourceModel& model, const TestChannel& channel) {
  const Eigen::VectorXd p_u = channel.p_u_given_x.transpose() * model.p_x();
  const Eigen::MatrixXd p_u_given_y = derive_u_given_y(model, channel);
  double i_xu = 0.0;
  for (Eigen::Index x = 0; x < channel.p_u_given_x.rows(); ++x) {
    if (model.p_x()(x) <= 0.0) continue;
    for (Eigen::Index u = 0; u < channel.p_u_given_x.cols(); ++u) {
      const double pc = channel.p_u_given_x(x, u);
      if (pc > 0.0) i_xu += model.p_x()(x) * pc * std::log2(pc / p_u(u));
    }
  }
  double i_uy = 0.0;
  for (Eigen::Index y = 0; y < p_u_given_y.rows(); ++y) {
    if (model.p_y()(y) <= 0.0) continue;
    for (Eigen::Index u = 0; u < p_u_given_y.cols(); ++u) {
      const double pc = p_u_given_y(y, u);
      if (pc > 0.0) i_uy += model.p_y()(y) * pc * std::log2(pc / p_u(u));
    }
  }
  return i_xu - i_uy;
}

Distortions evaluate_distortions(const JointSourceModel& model, const TestChannel& channel,
                                 const ReconstructionMap& recon) {
  Distortions out;
  const std::size_t nu = channel.u_size();
  for (std::size_t x = 0; x < model.x_size(); ++x) {
    for (std::size_t y = 0; y < model.y_size(); ++y) {
      if (!model.supported(x, y)) continue;
      const double pxy = model.p_xy()(x, y);
      for (std::size_t u = 0; u < nu; ++u) {
        const double w = pxy * channel.p_u_given_x(x, u);
        if (w == 0.0) continue;
        const std::size_t sh = recon.s_hat_at(u, y);
        out.dist_x += w * model.d_x()(x, recon.x_hat_at(u, y));
        out.dist_s_modified += w * model.modified(x, y, sh);
        for (std::size_t s = 0; s < model.s_size(); ++s) {
          out.dist_s += model.p(s, x, y) * channel.p_u_given_x(x, u) * model.d_s()(s, sh);
        }
      }
    }
  }
  return out;
}

double lagrangian_nats(const JointSourceModel& model, const TestChannel& channel,
                       const ReconstructionMap& recon, double lambda, double mu) {
  const Distortions d = evaluate_distortions(model, channel, recon);
  return std::numbers::ln2 * evaluate_rate(model, channel) + lambda * d.dist_x +
         mu * d.dist_s_modified;
}

namespace {

BASolution run_from(const JointSourceModel& model, TestChannel start, double lambda, double mu,
                    const SolveOptions& opts) {
  BASolution sol;
  sol.lambda = lambda;
  sol.mu = mu;
  sol.channel = std::move(start);
  sol.recon = update_reconstruction(model, sol.channel, lambda, mu);

  Distortions dist = evaluate_distortions(model, sol.channel, sol.recon);
  double rate = evaluate_rate(model, sol.channel);
  auto lagrangian = [&] {
    return std::numbers::ln2 * rate + lambda * dist.dist_x + mu * dist.dist_s_modified;
  };
  sol.lagrangian_trace.push_back(lagrangian());

  for (int it = 1; it <= opts.max_iters; ++it) {
    const Eigen::MatrixXd p_u_given_y = derive_u_given_y(model, sol.channel);
    try {
      sol.channel = update_test_channel(model, p_u_given_y, sol.recon, lambda, mu);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::AllZeroRow) {
        throw Error(ErrorCode::NumericalCollapse, e.what());
      }
      throw;
    }
    sol.recon = update_reconstruction(model, sol.channel, lambda, mu);
    const Distortions next = evaluate_distortions(model, sol.channel, sol.recon);
    rate = evaluate_rate(model, sol.channel);
    const double delta =
        std::abs(next.dist_x - dist.dist_x) + std::abs(next.dist_s - dist.dist_s);
    dist = next;
    sol.lagrangian_trace.push_back(lagrangian());
    sol.iterations = it;
    if (delta < opts.tol_delta) {
      sol.converged = true;
      break;
    }
  }
  sol.rate = rate;
  sol.dist_x = dist.dist_x;
  sol.dist_s = dist.dist_s;
  return sol;
}

}  // namespace

std::vector<TestChannel> starting_channels(std::size_t x_size, std::size_t u_size,
                                           const SolveOptions& opts) {
  std::vector<TestChannel> starts;
  starts.push_back(initial_channel(x_size, u_size, opts.seed));
  if (opts.extra_starts < 1) return starts;

  // Near-deterministic start: u = x mod |U| carries 0.9 of each row.
  TestChannel sharp{Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(x_size),
                                              static_cast<Eigen::Index>(u_size),
                                              u_size > 1 ? 0.1 / static_cast<double>(u_size - 1)
                                                         : 1.0)};
  if (u_size > 1) {
    for (std::size_t x = 0; x < x_size; ++x) {
      sharp.p_u_given_x(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x % u_size)) =
          0.9;
    }
  }
  starts.push_back(std::move(sharp));

  for (int k = 1; k < opts.extra_starts; ++k) {
    Rng rng = substream(opts.seed, StreamTag::SolverInit, static_cast<std::uint64_t>(k));
    std::normal_distribution<double> normal;
    TestChannel ch{Eigen::MatrixXd(static_cast<Eigen::Index>(x_size),
                                   static_cast<Eigen::Index>(u_size))};
    for (Eigen::Index x = 0; x < ch.p_u_given_x.rows(); ++x) {
      for (Eigen::Index u = 0; u < ch.p_u_given_x.cols(); ++u) {
        ch.p_u_given_x(x, u) = std::exp(2.0 * normal(rng));
      }
      ch.p_u_given_x.row(x) /= ch.p_u_given_x.row(x).sum();
    }
    starts.push_back(std::move(ch));
  }
  return starts;
}

BASolution solve(const JointSourceModel& model, double lambda, double mu,
                 const SolveOptions& opts) {
  check_multipliers(lambda, mu);
  if (opts.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(opts.tol_delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol_delta must be > 0");
  const std::size_t nu = opts.u_size.value_or(model.x_size() + 1);
  if (nu == 0) throw Error(ErrorCode::InvalidArgument, "u_size must be positive");

  std::optional<BASolution> best;
  for (TestChannel& start : starting_channels(model.x_size(), nu, opts)) {
    BASolution sol = run_from(model, std::move(start), lambda, mu, opts);
    if (!best || sol.lagrangian_trace.back() < best->lagrangian_trace.back() - 1e-12) {
      best = std::move(sol);
    }
  }
  return std::move(*best);
}

std::vector<std::size_t> pareto_front(const std::vector<std::array<double, 3>>& points,
                                      double tol) {
  auto near = [tol](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    for (int k = 0; k < 3; ++k) {
      if (std::abs(a[k] - b[k]) > tol) return false;
    }
    return true;
  };
  auto dominates = [tol](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    bool strict = false;
    for (int k = 0; k < 3; ++k) {
      if (a[k] > b[k] + tol) return false;
      if (a[k] < b[k] - tol) strict = true;
    }
    return strict;
  };

  std::vector<std::size_t> unique;
  for (std::size_t i = 0; i < points.size(); ++i) {
    bool dup = false;
    for (std::size_t j : unique) dup = dup || near(points[j], points[i]);
    if (!dup) unique.push_back(i);
  }
  std::vector<std::size_t> front;
  for (std::size_t i : unique) {
    bool dominated = false;
    for (std::size_t j : unique) {
      if (j != i && dominates(points[j], points[i])) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(i);
  }
  return front;
}

SweepResult sweep_lagrange_grid(const JointSourceModel& model,
                                const std::vector<double>& lambda_grid,
                                const std::vector<double>& mu_grid, const SolveOptions& opts,
                                unsigned jobs) {
  if (lambda_grid.empty() || mu_grid.empty()) {
    throw Error(ErrorCode::InvalidArgument, "Lagrange grids must be nonempty");
  }
  for (double v : lambda_grid) check_multipliers(v, 0.0);
  for (double v : mu_grid) check_multipliers(0.0, v);

  SweepResult result;
  result.cells.resize(lambda_grid.size() * mu_grid.size());
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    for (std::size_t j = 0; j < mu_grid.size(); ++j) {
      SweepCell& c = result.cells[i * mu_grid.size() + j];
      c.lambda_index = i;
      c.mu_index = j;
      c.lambda = lambda_grid[i];
      c.mu = mu_grid[j];
    }
  }
  parallel_for(result.cells.size(), jobs, [&](std::size_t k) {
    SweepCell& c = result.cells[k];
    try {
      c.solution = solve(model, c.lambda, c.mu, opts);
    } catch (const Error& e) {
      c.error = e.what();
    }
  });

  std::vector<std::array<double, 3>> pts;
  std::vector<std::size_t> owner;
  for (std::size_t k = 0; k < result.cells.size(); ++k) {
    const auto& s = result.cells[k].solution;
    if (!s) continue;
    pts.push_back({s->rate, s->dist_x, s->dist_s});
    owner.push_back(k);
  }
  for (std::size_t idx : pareto_front(pts)) result.pareto.push_back(owner[idx]);
  return result;
}

}  // namespace iwz
