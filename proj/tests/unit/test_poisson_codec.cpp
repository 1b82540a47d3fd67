#include "iwz/ba_solver.hpp"
#include "iwz/error.hpp"
#include "iwz/fbl_bounds.hpp"
#include "iwz/poisson_codec.hpp"
#include "iwz/rng.hpp"
#include "iwz/source_model.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

using namespace iwz;

namespace {

BASolution tiny_solution() {
  SolveOptions opts;
  opts.u_size = 3;
  return solve(build_tiny_dsbs(), 2.0, 2.0, opts);
}

Eigen::MatrixXd skewed_channel() {
  Eigen::MatrixXd c(2, 3);
  c << 0.6, 0.3, 0.1, 0.2, 0.2, 0.6;
  return c;
}

}  // namespace

TEST_CASE("race table budget") {
  CHECK(race_table_size(3, 4, 8) == 648);
  try {
    race_table_size(4, 20, 2);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExceeded);
  }
  CHECK_THROWS_AS(race_table_size(2, 3, 0), Error);
}

TEST_CASE("sequence enumeration is little-endian") {
  Rng rng(1);
  const SharedRandomness shared(3, 3, 2, rng);
  CHECK(shared.sequences() == 27);
  const std::size_t seq = 2 + 1 * 3 + 0 * 9;
  CHECK(shared.symbol(seq, 0) == 2);
  CHECK(shared.symbol(seq, 1) == 1);
  CHECK(shared.symbol(seq, 2) == 0);
}

TEST_CASE("a single bin always sends message one") {
  Rng rng(4);
  const SharedRandomness shared(3, 2, 1, rng);
  const std::array<std::size_t, 2> x{0, 1};
  CHECK(encode(x, shared, skewed_channel()).bin == 1);
}

TEST_CASE("deterministic channel selects the mapped sequence") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 3);
  c(0, 2) = 1.0;
  c(1, 0) = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const SharedRandomness shared(3, 3, 4, rng);
    const std::array<std::size_t, 3> x{0, 1, 0};
    const EncodeResult enc = encode(x, shared, c);
    CHECK(shared.symbol(enc.sequence, 0) == 2);
    CHECK(shared.symbol(enc.sequence, 1) == 0);
    CHECK(shared.symbol(enc.sequence, 2) == 2);
  }
}

TEST_CASE("encoder and decoder are the exact argmin of the weight ratios") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  const Eigen::MatrixXd p_uy = derive_u_given_y(m, sol.channel);
  const Eigen::MatrixXd c = skewed_channel();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t bins = 5;
    const SharedRandomness shared(3, 1, bins, rng);
    const std::array<std::size_t, 1> x{seed % 2};
    double best = INFINITY;
    std::size_t best_u = 0, best_bin = 0;
    for (std::size_t u = 0; u < 3; ++u) {
      for (std::size_t b = 0; b < bins; ++b) {
        const double r = shared.weight(u, b) / (c(x[0], u) / bins);
        if (r < best) best = r, best_u = u, best_bin = b;
      }
    }
    const EncodeResult enc = encode(x, shared, c);
    CHECK(enc.sequence == best_u);
    CHECK(enc.bin == best_bin + 1);

    const std::array<std::size_t, 1> y{(seed / 2) % 2};
    double dbest = INFINITY;
    std::size_t dbest_u = 0;
    for (std::size_t u = 0; u < 3; ++u) {
      const double r = shared.weight(u, enc.bin - 1) / p_uy(y[0], u);
      if (r < dbest) dbest = r, dbest_u = u;
    }
    const DecodeResult dec = decode(enc.bin, y, shared, p_uy, sol.recon);
    CHECK(dec.sequence == dbest_u);
    CHECK(dec.x_hat[0] == sol.recon.x_hat_at(dbest_u, y[0]));
    CHECK(dec.s_hat[0] == sol.recon.s_hat_at(dbest_u, y[0]));
  }
}

TEST_CASE("single-bin encoder output follows P(u|x)") {
  const Eigen::MatrixXd c = skewed_channel();
  const std::array<std::size_t, 2> x{0, 1};
  std::array<double, 9> counts{};
  const int trials = 100000;
  for (int t = 0; t < trials; ++t) {
    Rng rng = substream(77, StreamTag::CodecTrial, static_cast<std::uint64_t>(t));
    const SharedRandomness shared(3, 2, 1, rng);
    counts[encode(x, shared, c).sequence] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t seq = 0; seq < 9; ++seq) {
    const double expected = trials * c(0, seq % 3) * c(1, seq / 3);
    stat += (counts[seq] - expected) * (counts[seq] - expected) / expected;
  }
  const double critical = boost::math::quantile(boost::math::chi_squared(8.0), 0.999);
  CHECK(critical == doctest::Approx(26.124482).epsilon(1e-6));
  CHECK(stat < critical);
}

TEST_CASE("codec errors") {
  Rng rng(0);
  const SharedRandomness shared(3, 2, 2, rng);
  const std::array<std::size_t, 2> x{0, 1};
  const std::array<std::size_t, 1> short_x{0};
  CHECK_THROWS_AS(encode(short_x, shared, skewed_channel()), Error);
  Eigen::MatrixXd dead = Eigen::MatrixXd::Zero(2, 3);
  try {
    encode(x, shared, dead);
    FAIL("expected NoSupport");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoSupport);
  }
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  CHECK_THROWS_AS(decode(3, x, shared, derive_u_given_y(m, sol.channel), sol.recon), Error);
}

TEST_CASE("simulation budget is enforced before any trial") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  try {
    simulate_excess(m, sol, 20, 8, 0.3, 0.3, {.trials = 1});
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExceeded);
  }
}

TEST_CASE("trivial thresholds") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  CHECK(simulate_excess(m, sol, 3, 4, 2.0, 2.0, {.trials = 500}).excess.mean == 0.0);
  CHECK(simulate_excess(m, sol, 3, 4, 0.0, 0.0, {.trials = 500}).excess.mean == 1.0);
}

TEST_CASE("mismatch rate respects the matching bound and the bound dominates") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  const CodecReport r = simulate_excess(m, sol, 4, 8, 0.3, 0.3, {.trials = 10000, .seed = 8});
  CHECK(r.mismatch_rate <=
        r.matching_bound + 4.0 * std::hypot(r.mismatch_std_error, r.matching_bound_std_error));
  const BoundEstimate t3 = theorem3_bound_mc(m, sol, 4, 3.0, 0.3, 0.3, {.trials = 10000});
  CHECK(r.excess.mean <= t3.mean + 4.0 * std::hypot(r.excess.std_error, t3.std_error));
}

TEST_CASE("simulation is reproducible for a seed and independent of jobs") {
  const auto m = build_tiny_dsbs();
  const BASolution sol = tiny_solution();
  const CodecReport a = simulate_excess(m, sol, 3, 4, 0.4, 0.4, {.trials = 800, .seed = 6});
  const CodecReport b =
      simulate_excess(m, sol, 3, 4, 0.4, 0.4, {.trials = 800, .seed = 6, .jobs = 4});
  CHECK(a.excess.mean == b.excess.mean);
  CHECK(a.mismatch_rate == b.mismatch_rate);
  CHECK(a.matching_bound == b.matching_bound);
  const CodecReport c = simulate_excess(m, sol, 3, 4, 0.4, 0.4, {.trials = 800, .seed = 7});
  CHECK(c.matching_bound != a.matching_bound);
}
