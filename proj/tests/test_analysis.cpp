#include <doctest.h>

#include <numeric>
#include <sstream>

#include "margin_probe/analysis.hpp"
#include "margin_probe/errors.hpp"

using namespace margin_probe;
using analysis::Rounding;

namespace {

const bayes::BayesRidgeModel& model() {
  static const auto m = [] {
    dataset::GenerationConfig cfg;
    return bayes::train(dataset::generate(5000, 41, cfg).records, 41);
  }();
  return m;
}

}  // namespace

TEST_CASE("histogram of a perfect predictor") {
  std::vector<double> y{0.3, 1.2, 2.5, 0.0};
  const auto h = analysis::error_histogram(y, y, 0.1);
  REQUIRE(h.bins.size() == 1);
  CHECK(h.bins[0].lower == doctest::Approx(-0.05));
  CHECK(h.bins[0].upper == doctest::Approx(0.05));
  CHECK(h.bins[0].count == 4);
  CHECK(h.rmse == 0.0);
  CHECK(h.mean == 0.0);
}

TEST_CASE("histogram bins are half-open and keep every sample") {
  std::vector<double> pred{0.25, -0.25, 0.0, 0.74, 3.0}, lab(5, 0.0);
  const auto h = analysis::error_histogram(pred, lab, 0.5);
  std::size_t total = 0;
  for (const auto& b : h.bins) total += b.count;
  CHECK(total == 5);
  CHECK(h.bins.front().lower == doctest::Approx(-0.25));
  // -0.25 is the lower edge of the 0 bin; 0.25 opens the next one.
  CHECK(h.bins[0].count == 2);
  CHECK(h.bins[1].count == 2);
  CHECK(h.bins.back().count == 1);
  for (std::size_t i = 1; i < h.bins.size(); ++i) CHECK(h.bins[i].lower == h.bins[i - 1].upper);
  CHECK(h.rmse == doctest::Approx(std::sqrt((0.0625 * 2 + 0.74 * 0.74 + 9.0) / 5.0)));
  CHECK_THROWS_AS(analysis::error_histogram(std::vector<double>{}, std::vector<double>{}, 0.1), InvalidArgument);
}

TEST_CASE("summary statistics") {
  std::vector<double> v{1, 2, 3, 4};
  const auto ms = analysis::mean_std(v);
  CHECK(ms.mean == 2.5);
  CHECK(ms.stddev == doctest::Approx(std::sqrt(1.25)));
  std::vector<double> x{1, 2, 3, 4, 5}, up{2, 4, 6, 8, 10}, down{5, 4, 3, 2, 1};
  CHECK(analysis::pearson(x, up) == doctest::Approx(1.0));
  CHECK(analysis::pearson(x, down) == doctest::Approx(-1.0));

  std::vector<double> many(1001);
  std::iota(many.begin(), many.end(), 0.0);
  CHECK(analysis::mean_std(many).mean == 500.0);
}

TEST_CASE("unimodality") {
  CHECK(analysis::is_unimodal(std::vector<double>{1, 2, 3, 2, 1}));
  CHECK(analysis::is_unimodal(std::vector<double>{1, 1, 1}));
  CHECK(analysis::is_unimodal(std::vector<double>{3, 2, 1}));
  CHECK_FALSE(analysis::is_unimodal(std::vector<double>{1, 3, 2, 3, 1}));
  std::vector<double> wiggle{1.0, 2.0, 1.99, 2.5, 1.0}, tol{0, 0, 0, 0.02, 0};
  CHECK_FALSE(analysis::is_unimodal(wiggle));
  tol[2] = 0.02;
  CHECK(analysis::is_unimodal(wiggle, tol));
}

TEST_CASE("fill quantization") {
  CHECK(analysis::quantize_fill(0.37, 0.0, Rounding::kNearest) == 0.37);
  CHECK(analysis::quantize_fill(0.37, 0.2, Rounding::kNearest) == doctest::Approx(0.4));
  CHECK(analysis::quantize_fill(0.37, 0.2, Rounding::kFloor) == doctest::Approx(0.2));
  CHECK(analysis::quantize_fill(0.37, 0.2, Rounding::kCeil) == doctest::Approx(0.4));
  CHECK(analysis::quantize_fill(0.6, 0.2, Rounding::kFloor) == doctest::Approx(0.6));
  CHECK(analysis::quantize_fill(0.6, 0.2, Rounding::kCeil) == doctest::Approx(0.6));
  CHECK(analysis::rounding_from_string("floor") == Rounding::kFloor);
  CHECK_THROWS_AS(analysis::rounding_from_string("up"), InvalidArgument);
  CHECK_THROWS_AS(analysis::quantize_fill(0.5, -0.1, Rounding::kNearest), InvalidArgument);
}

TEST_CASE("granularity sweep: zero step reproduces the baseline") {
  dataset::GenerationConfig cfg;
  const auto rows = dataset::generate(3000, 42, cfg).records;
  const auto s = dataset::split(rows, 42);
  const auto& m = model();
  const auto table = analysis::granularity_sweep(m, s.train, s.test, {0.0, 0.2, 0.5}, Rounding::kNearest, 42);
  REQUIRE(table.size() == 3);
  CHECK(table[0].rmse_original == bayes::rmse(m, s.test));
  CHECK(table[0].rmse_retrained == table[0].rmse_original);
  CHECK(table[2].rmse_original > table[0].rmse_original);
}

TEST_CASE("fill sweep") {
  dataset::GenerationConfig cfg;
  analysis::FillSweepOptions o;
  o.n_samples = 60;
  const auto sw = analysis::fill_sweep(model(), cfg, o, 1);
  REQUIRE(sw.points.size() == o.fills.size());
  for (const auto& p : sw.points) {
    CHECK(p.n == 60);
    CHECK(p.gn_std >= 0.0);
    CHECK(p.ml_std >= 0.0);
  }
  CHECK(sw.points.back().gn_mean == 0.0);
  CHECK(sw.points.back().gn_std == 0.0);
  CHECK(std::abs(sw.points.back().ml_mean) <= 0.05);
  CHECK(sw.metrics.at("pearson_gn") < -0.8);
  CHECK(sw.metrics.at("pearson_ml") < -0.8);

  std::ostringstream a, b;
  analysis::write_sweep_csv(a, sw);
  analysis::write_sweep_csv(b, analysis::fill_sweep(model(), cfg, o, 3));
  CHECK(a.str() == b.str());
}

TEST_CASE("frequency sweep anchor normalization") {
  dataset::GenerationConfig cfg;
  analysis::FrequencySweepOptions o;
  o.n_samples = 40;
  const auto pooled = analysis::frequency_sweep(model(), cfg, o, 1);
  CHECK(pooled.metrics.at("gn_at_anchor") == doctest::Approx(1.0).epsilon(1e-12));
  o.per_sample_normalization = true;
  const auto per = analysis::frequency_sweep(model(), cfg, o, 2);
  CHECK(per.metrics.at("gn_at_anchor") == 1.0);
  for (const auto& p : per.points) CHECK(p.n == 40);
}

TEST_CASE("power sweep on surrogate records") {
  adapt::SurrogateLinkProfile p;
  p.center_freqs_thz = {193.625};
  p.fill_levels = {0.3};
  const auto recs = adapt::surrogate_measure_all(p);
  const adapt::Recalibration identity;
  analysis::PowerSweepOptions o;
  o.center_freq_thz = 193.625;
  o.fill_target = 0.3;
  const auto sw = analysis::power_sweep(model(), identity, recs, o);
  REQUIRE(sw.points.size() == 6);
  CHECK(sw.points.front().value == -3.0);
  CHECK(sw.points.back().value == 0.0);
  for (const auto& pt : sw.points) CHECK(pt.n >= 10);
  // per-point means carry plan-to-plan noise; the 3 dB span does not
  CHECK(sw.points.back().gn_mean > sw.points.front().gn_mean + 0.1);
  o.center_freq_thz = 150.0;
  CHECK_THROWS_AS(analysis::power_sweep(model(), identity, recs, o), InvalidArgument);
}

TEST_CASE("JSON summaries are stable text") {
  analysis::SweepResult sw;
  sw.variable = "x";
  sw.metrics["a"] = 0.1 + 0.2;
  const auto j = analysis::sweep_summary_json(sw);
  CHECK(j.find("\"a\": 0.3") != std::string::npos);
  CHECK(j == analysis::sweep_summary_json(sw));
}
