#include "iwz/error.hpp"
#include "iwz/model_io.hpp"

#include <doctest.h>

#include <string>

using namespace iwz;

namespace {

const char* kTiny = R"({
  "s_alphabet": ["cat", "dog"],
  "x_alphabet": [0, 1],
  "y_alphabet": [0, 1],
  "s_hat_alphabet": ["cat", "dog"],
  "x_hat_alphabet": [0, 1],
  "p_sxy": [
    [[0.3375, 0.1125], [0.0125, 0.0375]],
    [[0.0375, 0.0125], [0.1125, 0.3375]]
  ],
  "d_x": [[0, 1], [1, 0]],
  "d_s": [[0, 1], [1, 0]]
}
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

Error parse_error(const std::string& text) {
  try {
    parse_model_json(text);
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected a parse failure");
  return Error(ErrorCode::Schema, "");
}

}  // namespace

TEST_CASE("model document round-trips") {
  const auto m = parse_model_json(kTiny);
  CHECK(m.s_alphabet()[1].label == "dog");
  CHECK_FALSE(m.s_alphabet()[1].value.has_value());
  CHECK(m.x_alphabet()[1].value.value() == 1.0);
  CHECK(m.p(1, 1, 1) == doctest::Approx(0.3375));

  const auto again = parse_model_json(model_to_json(m).dump(2));
  CHECK(again.p_sxy() == m.p_sxy());
  CHECK(again.s_alphabet() == m.s_alphabet());
  CHECK(again.d_s() == m.d_s());

  const auto tiny = build_tiny_dsbs();
  const auto copy = parse_model_json(model_to_json(tiny).dump());
  CHECK(copy.p_sxy() == tiny.p_sxy());
}

TEST_CASE("negative probability is reported with its line and pointer") {
  const auto e = parse_error(replace(kTiny, "[0.0125, 0.0375]", "[-0.0125, 0.0625]"));
  CHECK(e.code() == ErrorCode::NegativeProbability);
  CHECK(std::string(e.what()).find("line 8: /p_sxy/0/1/0") != std::string::npos);
}

TEST_CASE("malformed pmf reports SumNotOne") {
  const auto e = parse_error(replace(kTiny, "0.3375, 0.1125", "0.4375, 0.1125"));
  CHECK(e.code() == ErrorCode::SumNotOne);
  CHECK(std::string(e.what()).find("line 7: /p_sxy") != std::string::npos);
}

TEST_CASE("schema violations name the offending location") {
  {
    const auto e = parse_error(replace(kTiny, R"("y_alphabet": [0, 1],)", ""));
    CHECK(e.code() == ErrorCode::Schema);
    CHECK(std::string(e.what()).find("y_alphabet") != std::string::npos);
  }
  {
    const auto e = parse_error(replace(kTiny, R"("d_x": [[0, 1], [1, 0]])",
                                       R"("d_x": [[0, 1], [1, "x"]])"));
    CHECK(e.code() == ErrorCode::Schema);
    CHECK(std::string(e.what()).find("line 11: /d_x/1/1") != std::string::npos);
  }
  {
    const auto e = parse_error(replace(kTiny, "[[0.0375, 0.0125], [0.1125, 0.3375]]",
                                       "[[0.0375, 0.0125]]"));
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(std::string(e.what()).find("line 9: /p_sxy/1") != std::string::npos);
  }
  {
    const auto e = parse_error(replace(kTiny, R"("x_alphabet": [0, 1],)",
                                       R"("x_alphabet": [0, true],)"));
    CHECK(std::string(e.what()).find("line 3: /x_alphabet/1") != std::string::npos);
  }
}

TEST_CASE("JSON syntax errors are schema errors") {
  const auto e = parse_error(replace(kTiny, R"("d_s": [[0, 1], [1, 0]])", R"("d_s": [[0, 1], [1, 0])"));
  CHECK(e.code() == ErrorCode::Schema);
  CHECK(std::string(e.what()).find("line 13") != std::string::npos);
}

TEST_CASE("solution document round-trips") {
  const auto model = build_tiny_dsbs();
  SolveOptions opts;
  opts.u_size = 3;
  const BASolution sol = solve(model, 2.0, 2.0, opts);
  const BASolution back = parse_solution_json(solution_to_json(sol).dump(), model);
  CHECK(back.channel.p_u_given_x == sol.channel.p_u_given_x);
  CHECK(back.recon.s_hat == sol.recon.s_hat);
  CHECK(back.recon.x_hat == sol.recon.x_hat);
  CHECK(back.rate == doctest::Approx(sol.rate).epsilon(1e-14));
  CHECK(back.dist_x == doctest::Approx(sol.dist_x).epsilon(1e-14));
  CHECK(back.converged == sol.converged);

  auto doc = solution_to_json(sol);
  doc["recon"]["x_hat"][0][0] = 5;
  CHECK_THROWS_AS(parse_solution_json(doc.dump(), model), Error);
}
