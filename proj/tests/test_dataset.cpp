#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "margin_probe/dataset.hpp"
#include "margin_probe/errors.hpp"

using namespace margin_probe;

namespace {

std::string csv_of(const std::vector<dataset::ProbeRecord>& rows) {
  std::ostringstream ss;
  dataset::write_csv(ss, rows);
  return ss.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Pearson chi-square statistic of `values` in `bins` equal cells over [lo, hi].
double chi_square(const std::vector<double>& values, double lo, double hi, int bins) {
  std::vector<double> count(static_cast<std::size_t>(bins), 0.0);
  for (double v : values) {
    auto k = static_cast<int>((v - lo) / (hi - lo) * bins);
    k = std::clamp(k, 0, bins - 1);
    count[static_cast<std::size_t>(k)] += 1.0;
  }
  const double expected = static_cast<double>(values.size()) / bins;
  double chi = 0.0;
  for (double c : count) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

}  // namespace

TEST_CASE("scenario draws stay in range and look uniform") {
  dataset::GenerationConfig cfg;
  const auto sc = dataset::sample_parameter_space(10000, 123, cfg);
  std::vector<double> spans, lengths, rates, anchors;
  for (const auto& s : sc) {
    CHECK(s.n_spans >= 2);
    CHECK(s.n_spans <= 30);
    CHECK(s.span_length_km >= 60.0);
    CHECK(s.span_length_km <= 120.0);
    CHECK(s.cut_gbd >= 35.0);
    CHECK(s.cut_gbd <= 69.0);
    CHECK(s.psd_anchor_dbm >= -3.0);
    CHECK(s.psd_anchor_dbm <= 0.0);
    CHECK(s.center_freq_thz - s.cut_gbd * 0.5e-3 >= 191.3 - 1e-9);
    CHECK(s.center_freq_thz + s.cut_gbd * 0.5e-3 <= 196.1 + 1e-9);
    CHECK(s.fill_target > s.cut_gbd / 4800.0);
    CHECK(s.fill_target <= 1.0);
    spans.push_back(s.n_spans);
    lengths.push_back(s.span_length_km);
    rates.push_back(s.cut_gbd);
    anchors.push_back(s.psd_anchor_dbm);
  }
  // 5% critical values: chi2(19) = 30.144, chi2(28) = 41.337.
  CHECK(chi_square(lengths, 60.0, 120.0, 20) < 30.144);
  CHECK(chi_square(rates, 35.0, 69.0, 20) < 30.144);
  CHECK(chi_square(anchors, -3.0, 0.0, 20) < 30.144);
  CHECK(chi_square(spans, 1.5, 30.5, 29) < 41.337);

  const auto again = dataset::sample_parameter_space(10000, 123, cfg);
  for (std::size_t i = 0; i < sc.size(); ++i) {
    CHECK(again[i].seed == sc[i].seed);
    CHECK(again[i].span_length_km == sc[i].span_length_km);
    CHECK(again[i].fill_target == sc[i].fill_target);
  }
}

TEST_CASE("rows: labels, replay and worker invariance") {
  dataset::GenerationConfig cfg;
  const auto one = dataset::generate(400, 99, cfg);
  CHECK(one.errors.empty());
  REQUIRE(one.records.size() == 400);
  for (const auto& r : one.records) {
    CHECK(r.margin_db >= 0.0);
    CHECK(r.snr_current_db >= r.snr_full_db);
    CHECK(r.fill_fraction > 0.0);
    CHECK(r.fill_fraction <= 1.0);
  }
  for (std::size_t i : {0u, 17u, 399u}) {
    const auto r = dataset::replay_row(one.records[i].seed, cfg);
    CHECK(dataset::format_csv_row(r) == dataset::format_csv_row(one.records[i]));
    CHECK(r.snr_current_db == one.records[i].snr_current_db);
  }
  cfg.workers = 3;
  CHECK(csv_of(dataset::generate(400, 99, cfg).records) == csv_of(one.records));
}

TEST_CASE("full-fill rows have zero margin") {
  dataset::GenerationConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto sc = dataset::sample_scenario(seed, cfg);
    sc.fill_target = 1.0;
    const auto r = dataset::generate_row(sc, cfg);
    CHECK(r.margin_db == 0.0);
    CHECK_FALSE(std::signbit(r.margin_db));
  }
}

TEST_CASE("split sizes and partition") {
  CHECK(dataset::split_sizes(100) == std::array<std::size_t, 3>{70, 10, 20});
  CHECK(dataset::split_sizes(101) == std::array<std::size_t, 3>{71, 10, 20});
  for (std::size_t n : {1u, 2u, 7u, 999u, 100000u}) {
    const auto s = dataset::split_sizes(n);
    CHECK(s[0] + s[1] + s[2] == n);
  }
  const auto s = dataset::split_sizes(100000);
  CHECK(s[0] == 70000);
  CHECK(s[2] == 20000);

  dataset::GenerationConfig cfg;
  const auto rows = dataset::generate(101, 5, cfg).records;
  const auto a = dataset::split(rows, 8), b = dataset::split(rows, 8);
  CHECK(csv_of(a.train) == csv_of(b.train));
  CHECK(csv_of(a.test) == csv_of(b.test));
  std::multiset<std::uint64_t> seen;
  for (const auto* part : {&a.train, &a.validation, &a.test}) {
    for (const auto& r : *part) seen.insert(r.seed);
  }
  std::multiset<std::uint64_t> all;
  for (const auto& r : rows) all.insert(r.seed);
  CHECK(seen == all);
  CHECK_THROWS_AS(dataset::split({}, 1), InvalidArgument);
}

TEST_CASE("CSV round trip and header checks") {
  dataset::GenerationConfig cfg;
  const auto rows = dataset::generate(20, 3, cfg).records;
  const auto text = csv_of(rows);
  CHECK(text.rfind(std::string(dataset::kCsvHeader) + "\n", 0) == 0);
  std::istringstream in(text);
  const auto back = dataset::read_csv(in);
  REQUIRE(back.size() == rows.size());
  CHECK(csv_of(back) == text);
  CHECK(back[3].seed == rows[3].seed);

  std::istringstream bad_header("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(dataset::read_csv(bad_header), FormatError);
  std::istringstream bad_row(std::string(dataset::kCsvHeader) + "\n1,2,x\n");
  CHECK_THROWS_AS(dataset::read_csv(bad_row), FormatError);
}

TEST_CASE("file generation resumes after a torn write") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "margin_probe_resume_test";
  fs::create_directories(dir);
  const auto whole = (dir / "whole.csv").string();
  const auto torn = (dir / "torn.csv").string();
  dataset::GenerationConfig cfg;
  dataset::generate_to_file(whole, 2500, 17, cfg, false);
  const auto reference = slurp(whole);

  // Keep the header and ~1200 rows plus half a line, as a killed run would.
  const auto cut = reference.find('\n', reference.size() / 2) + 25;
  {
    std::ofstream out(torn, std::ios::binary | std::ios::trunc);
    out << reference.substr(0, cut);
  }
  const auto summary = dataset::generate_to_file(torn, 2500, 17, cfg, true);
  CHECK(summary.rows_resumed > 1000);
  CHECK(summary.rows_written == 2500);  // total rows in the file
  CHECK(slurp(torn) == reference);
  CHECK(fs::exists(torn + ".errors.csv"));
  fs::remove_all(dir);
}
