#include <doctest.h>

#include "crcgram/risk_policy.hpp"
#include "generators.hpp"

using namespace crcgram;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::config_error;
}

}  // namespace

TEST_CASE("closed gate") {
  CHECK(gate(0.7, Lambda::at(0.7)) == Decision::accept);
  CHECK(gate(0.69, Lambda::at(0.7)) == Decision::reject);
  CHECK(gate(1.0, Lambda::reject_all()) == Decision::reject);
  CHECK(gate(0.0, Lambda::at(0.0)) == Decision::accept);
  CHECK(code_of([] { gate(1.2, Lambda::at(0.5)); }) == ErrorCode::score_out_of_range);
  CHECK(code_of([] { gate(-0.1, Lambda::at(0.5)); }) == ErrorCode::score_out_of_range);
}

TEST_CASE("loss fixtures") {
  CHECK(loss(make_item(0.9, 0.4), Lambda::at(0.5)) == doctest::Approx(0.4));
  CHECK(loss(make_item(0.2, 1.0), Lambda::at(0.5)) == 0.0);
  CHECK(loss(make_item(1.0, 1.0), Lambda::reject_all()) == 0.0);
}

TEST_CASE("empirical risk fixtures") {
  const std::vector<CalibrationItem> two{make_item(0.2, 1), make_item(0.8, 1)};
  CHECK(empirical_risk(two, Lambda::at(0.5)) == doctest::Approx(0.5));
  const std::vector<CalibrationItem> zero{make_item(0.3, 0), make_item(0.9, 0)};
  for (double l : {0.0, 0.3, 0.9, 1.0}) CHECK(empirical_risk(zero, Lambda::at(l)) == 0.0);
  CHECK(code_of([] { empirical_risk({}, Lambda::at(0.5)); }) == ErrorCode::empty_input);

  gen::Rng rng(3);
  const auto items = gen::random_items(100, rng);
  for (double l : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    long double sum = 0;
    for (const auto& it : items) sum += it.score >= l ? it.severity : 0.0;
    CHECK(empirical_risk(items, Lambda::at(l)) == doctest::Approx(double(sum / 100)).epsilon(1e-12));
  }
}

TEST_CASE("severity clipping tolerance") {
  CHECK(make_item(0.5, 1.0000003).severity == 1.0);
  CHECK(make_item(0.5, -5e-7).severity == 0.0);
  CHECK(code_of([] { make_item(0.5, 1.3); }) == ErrorCode::value_out_of_range);
  CHECK(code_of([] { make_item(1.01, 0.5); }) == ErrorCode::value_out_of_range);
  CHECK(code_of([] { make_item(std::nan(""), 0.5); }) == ErrorCode::value_out_of_range);
}

TEST_CASE("lambda ordering and formatting") {
  CHECK(Lambda::at(0.3) < Lambda::at(0.4));
  CHECK(Lambda::at(1.0) < Lambda::reject_all());
  CHECK_FALSE(Lambda::reject_all() < Lambda::reject_all());
  CHECK(Lambda::reject_all() <= Lambda::reject_all());
  CHECK(format_lambda(Lambda::reject_all()) == "REJECT_ALL");
  CHECK(format_lambda(Lambda::at(0.6)) == "0.6");
  CHECK(code_of([] { Lambda::reject_all().value(); }) == ErrorCode::missing_threshold);
  CHECK(code_of([] { Lambda::at(1.5); }) == ErrorCode::value_out_of_range);
}

TEST_CASE("loss is monotone and bounded, risk is right-continuous") {
  gen::Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto items = gen::random_items(30, rng);
    std::vector<double> grid{0.0, 1.0};
    for (const auto& it : items) grid.push_back(it.score);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double prev = 2.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double r = empirical_risk(items, Lambda::at(grid[k]));
      CHECK(r <= prev);
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
      prev = r;
      if (k + 1 < grid.size()) {
        const double eps = (grid[k + 1] - grid[k]) / 2;
        CHECK(empirical_risk(items, Lambda::at(grid[k] + eps)) == empirical_risk(items, Lambda::at(grid[k + 1])));
      }
    }
    for (const auto& it : items) CHECK(loss(it, Lambda::at(0.2)) >= loss(it, Lambda::at(0.6)));
  }
}

TEST_CASE("deployment modes") {
  CHECK(mode_spec(Mode::geval_naive).score == ScoreKind::judge_norm);
  CHECK_FALSE(mode_spec(Mode::geval_naive).calibrator.has_value());
  CHECK(mode_spec(Mode::geval_crc).calibrator == CalibratorKind::bb_crc);
  CHECK(mode_spec(Mode::gram_crc).score == ScoreKind::gram_energy);
  CHECK(mode_spec(Mode::gram_crc).calibrator == CalibratorKind::rbwa_crc);
  CHECK(parse_mode("gram-crc") == Mode::gram_crc);
  CHECK_FALSE(parse_mode("other").has_value());
  CHECK(parse_calibrator("bb") == CalibratorKind::bb_crc);
  CHECK(parse_calibrator("rbwa") == CalibratorKind::rbwa_crc);
  CHECK_FALSE(parse_calibrator("xyz").has_value());
  CHECK(kNaiveThresholds.size() == 5);
}
