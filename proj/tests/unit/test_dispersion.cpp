#include "iwz/ba_solver.hpp"
#include "iwz/dispersion.hpp"
#include "iwz/error.hpp"
#include "iwz/source_model.hpp"

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace iwz;

namespace {

BASolution with_channel(const JointSourceModel& m, Eigen::MatrixXd channel, double lambda = 1.0,
                        double mu = 1.0) {
  BASolution sol;
  sol.channel.p_u_given_x = std::move(channel);
  sol.recon = update_reconstruction(m, sol.channel, lambda, mu);
  sol.rate = evaluate_rate(m, sol.channel);
  const Distortions d = evaluate_distortions(m, sol.channel, sol.recon);
  sol.dist_x = d.dist_x;
  sol.dist_s = d.dist_s;
  return sol;
}

Eigen::MatrixXd uniform_channel(std::size_t nx, std::size_t nu) {
  return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nu),
                                   1.0 / static_cast<double>(nu));
}

BASolution tiny_solution() {
  SolveOptions opts;
  opts.u_size = 3;
  return solve(build_tiny_dsbs(), 2.0, 2.0, opts);
}

// Two-pass covariance of j over every (s, x, y, u) with positive mass.
Eigen::Matrix3d two_pass_covariance(const JointSourceModel& m, const BASolution& sol) {
  struct Atom {
    double w;
    Eigen::Vector3d j;
  };
  std::vector<Atom> atoms;
  for (std::size_t s = 0; s < m.s_size(); ++s)
    for (std::size_t x = 0; x < m.x_size(); ++x)
      for (std::size_t y = 0; y < m.y_size(); ++y)
        for (std::size_t u = 0; u < sol.channel.u_size(); ++u) {
          const double w = m.p(s, x, y) * sol.channel.p_u_given_x(x, u);
          if (w > 0.0) atoms.push_back({w, j_vector(m, sol, s, x, y, u)});
        }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& a : atoms) mean += a.w * a.j;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& a : atoms) cov += a.w * (a.j - mean) * (a.j - mean).transpose();
  return cov;
}

}  // namespace

TEST_CASE("information density in bits and outside the support") {
  Eigen::MatrixXd cond(2, 2);
  cond << 0.5, 0.5, 1.0, 0.0;
  Eigen::VectorXd marg(2);
  marg << 0.75, 0.25;
  CHECK(info_density(cond, marg, 0, 1) == doctest::Approx(1.0));
  CHECK(info_density(cond, marg, 1, 0) == doctest::Approx(std::log2(4.0 / 3.0)));
  CHECK_THROWS_AS(info_density(cond, marg, 1, 1), Error);
  CHECK_THROWS_AS(info_density(cond, marg, 2, 0), Error);
}

TEST_CASE("first moment of j matches the solver's rate and distortions") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  const MomentSummary mom = exact_moments(m, sol);
  CHECK(std::abs(mom.j_mean(0) - sol.rate) < 1e-10);
  CHECK(std::abs(mom.j_mean(1) - sol.dist_x) < 1e-10);
  CHECK(std::abs(mom.j_mean(2) - sol.dist_s) < 1e-10);

  const auto mix = build_gaussian_mixture_model({.grid_count = 12});
  SolveOptions opts;
  opts.max_iters = 30;
  const BASolution msol = solve(mix, 0.5, 1.0, opts);
  const MomentSummary mm = exact_moments(mix, msol);
  CHECK(std::abs(mm.j_mean(0) - msol.rate) < 1e-10);
  CHECK(std::abs(mm.j_mean(1) - msol.dist_x) < 1e-10);
  CHECK(std::abs(mm.j_mean(2) - msol.dist_s) < 1e-10);
}

TEST_CASE("covariance agrees with a two-pass enumeration and is PSD") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  const MomentSummary mom = exact_moments(m, sol);
  const Eigen::Matrix3d ref = two_pass_covariance(m, sol);
  CHECK((mom.v_cov - ref).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((mom.v_cov - mom.v_cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(mom.v_cov);
  CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("uniform channel has a degenerate density coordinate") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = with_channel(m, uniform_channel(2, 3));
  const MomentSummary mom = exact_moments(m, sol);
  CHECK(std::abs(mom.j_mean(0)) < 1e-15);
  CHECK(std::abs(mom.v_cov(0, 0)) < 1e-15);
  CHECK(std::abs(mom.v_cov(0, 1)) < 1e-15);
  // x_hat follows y, so d is Bernoulli(1/4).
  CHECK(mom.v_cov(1, 1) == doctest::Approx(0.1875));
}

TEST_CASE("j vector rejects points outside the support") {
  std::vector<double> p(8, 0.0);
  p[0] = 0.5;  // (0,0,0)
  p[7] = 0.5;  // (1,1,1)
  Alphabet bin{Symbol::numeric(0), Symbol::numeric(1)};
  Eigen::MatrixXd ham(2, 2);
  ham << 0, 1, 1, 0;
  const auto m = build_from_table(bin, bin, bin, bin, bin, p, ham, ham);
  const BASolution sol = with_channel(m, uniform_channel(2, 2));
  CHECK_NOTHROW(j_vector(m, sol, 0, 0, 0, 1));
  CHECK_THROWS_AS(j_vector(m, sol, 0, 0, 1, 0), Error);
  CHECK_THROWS_AS(j_vector(m, sol, 0, 0, 0, 2), Error);
}

TEST_CASE("orthant probability in closed form") {
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  const auto p0 = mvn_lower_prob(id, Eigen::Vector3d::Zero());
  CHECK(p0.probability == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(p0.std_error == 0.0);
  CHECK(mvn_lower_prob(id, Eigen::Vector3d::Constant(40.0)).probability == 1.0);
  const double z = 0.8193286198;
  CHECK(mvn_lower_prob(id, Eigen::Vector3d::Constant(z)).probability ==
        doctest::Approx(0.5).epsilon(1e-9));
  // Zero-variance coordinates are step functions.
  Eigen::Matrix3d v = Eigen::Matrix3d::Zero();
  v(0, 0) = 1.0;
  CHECK(mvn_lower_prob(v, {0.0, 0.0, 0.0}).probability == doctest::Approx(0.5));
  CHECK(mvn_lower_prob(v, {0.0, -1e-9, 0.0}).probability == 0.0);
}

TEST_CASE("sampled orthant probability agrees with the closed form") {
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  MvnOptions opts;
  opts.force_sampling = true;
  opts.samples = 200000;
  for (const Eigen::Vector3d& b : {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0.5, -0.3, 1.2),
                                  Eigen::Vector3d(-1, 2, 0.1)}) {
    const auto exact = mvn_lower_prob(id, b);
    const auto mc = mvn_lower_prob(id, b, opts);
    CHECK(mc.std_error > 0.0);
    CHECK(std::abs(mc.probability - exact.probability) <= 4.0 * mc.std_error);
  }
}

TEST_CASE("sampled orthant probability is monotone in every coordinate") {
  Eigen::Matrix3d v;
  v << 1.0, 0.4, -0.2, 0.4, 2.0, 0.3, -0.2, 0.3, 0.5;
  const GaussianOrthant orthant(v, {.samples = 20000, .seed = 9});
  CHECK_FALSE(orthant.exact());
  Eigen::Vector3d b(-0.5, -0.5, -0.5);
  double prev = orthant.lower_prob(b).probability;
  for (int step = 0; step < 30; ++step) {
    b(step % 3) += 0.1;
    const double cur = orthant.lower_prob(b).probability;
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("minimal feasible first threshold") {
  const Eigen::Matrix3d id = Eigen::Matrix3d::Identity();
  const auto b1 = min_feasible_b1(id, 1e6, 1e6, 0.1);
  REQUIRE(b1.has_value());
  CHECK(*b1 == doctest::Approx(1.2815515655).epsilon(1e-9));
  CHECK_FALSE(min_feasible_b1(id, 0.0, 0.0, 0.5).has_value());
  // P[B2 <= 0, B3 <= 0] = 1/4 >= 1 - 0.875 and the b1 requirement is 1/2.
  const auto loose = min_feasible_b1(id, 0.0, 0.0, 0.875);
  REQUIRE(loose.has_value());
  CHECK(std::abs(*loose) < 1e-9);
  CHECK_THROWS_AS(min_feasible_b1(id, 0.0, 0.0, 0.0), Error);

  Eigen::Matrix3d v;
  v << 1.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.0;
  const GaussianOrthant orthant(v, {.samples = 50000, .seed = 3});
  const auto mc = orthant.min_feasible_b1(1.5, 1.5, 0.2);
  REQUIRE(mc.has_value());
  CHECK(orthant.lower_prob({*mc, 1.5, 1.5}).probability >= 0.8);
  CHECK(orthant.lower_prob({*mc - 1e-9, 1.5, 1.5}).probability < 0.8);
}

TEST_CASE("non PSD covariance is rejected") {
  Eigen::Matrix3d v = Eigen::Matrix3d::Identity();
  v(0, 1) = v(1, 0) = 2.0;
  try {
    mvn_lower_prob(v, Eigen::Vector3d::Zero());
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotPSD);
  }
  Eigen::Matrix3d asym = Eigen::Matrix3d::Identity();
  asym(0, 2) = 0.1;
  CHECK_THROWS_AS(GaussianOrthant{asym}, Error);
}

TEST_CASE("second-order rate approaches the first moment") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  const MomentSummary mom = exact_moments(m, sol);
  const auto far = second_order_rate(m, sol, 100000000LL, 0.1, sol.dist_x + 0.01,
                                     sol.dist_s + 0.01);
  REQUIRE(far.has_value());
  CHECK(std::abs(*far - mom.j_mean(0)) < 1e-3);

  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {0.05, 0.1, 0.2, 0.4}) {
    const auto r = second_order_rate(m, sol, 1000, eps, sol.dist_x + 0.05, sol.dist_s + 0.05);
    REQUIRE(r.has_value());
    CHECK(*r <= prev + 1e-12);
    prev = *r;
  }
  CHECK_THROWS_AS(second_order_rate(m, sol, 1, 0.1, 1.0, 1.0), Error);
}

TEST_CASE("degenerate moments collapse to the mean plus the penalty") {
  MomentSummary mom;
  mom.j_mean = {0.3, 0.2, 0.1};
  const GaussianOrthant orthant(Eigen::Matrix3d::Zero());
  const long long n = 1000;
  const double penalty = 2.0 * std::log2(1000.0) / 1000.0;
  const auto r = second_order_rate(mom, orthant, n, 0.1, 0.2 + penalty + 1e-9, 0.1 + penalty + 1e-9);
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(0.3 + penalty).epsilon(1e-12));
  CHECK_FALSE(second_order_rate(mom, orthant, n, 0.1, 0.2, 0.1).has_value());
}
