#include <doctest.h>

#include <cmath>

#include <algorithm>
#include <sstream>

#include "margin_probe/errors.hpp"
#include "margin_probe/spectrum.hpp"

using namespace margin_probe;

namespace {

ChannelSpec cut_at(double f, double gbd) {
  ChannelSpec c;
  c.center_freq_thz = f;
  c.symbol_rate_gbd = gbd;
  c.is_cut = true;
  return c;
}

bool same_plan(const SpectrumRealization& a, const SpectrumRealization& b) {
  if (a.channels.size() != b.channels.size() || a.active != b.active || a.cut_index != b.cut_index) return false;
  for (std::size_t i = 0; i < a.channels.size(); ++i) {
    const auto &x = a.channels[i], &y = b.channels[i];
    if (x.center_freq_thz != y.center_freq_thz || x.symbol_rate_gbd != y.symbol_rate_gbd ||
        x.launch_power_dbm != y.launch_power_dbm || x.modulation != y.modulation) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("full plans cover the band and respect the policy") {
  spectrum::GridPolicy p;
  p.psd_anchor_dbm = -1.5;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double f = 191.4 + 0.047 * static_cast<double>(seed);
    const auto s = spectrum::build_full_plan(p, cut_at(f, 35.0 + 0.34 * static_cast<double>(seed)), seed);
    CHECK_NOTHROW(s.validate());
    CHECK(s.fill_fraction() >= 0.95);
    CHECK(s.active_count() == s.channels.size());
    const double psd = s.cut().psd_w_per_hz();
    for (const auto& c : s.channels) {
      CHECK(std::abs(c.psd_w_per_hz() - psd) / psd <= 1e-9);
      CHECK(c.symbol_rate_gbd >= 35.0);
      CHECK(c.symbol_rate_gbd <= 69.0);
    }
    CHECK(s.cut().center_freq_thz == f);
  }
}

TEST_CASE("full plans are deterministic per seed") {
  spectrum::GridPolicy p;
  const auto a = spectrum::build_full_plan(p, cut_at(193.0, 42.0), 77);
  const auto b = spectrum::build_full_plan(p, cut_at(193.0, 42.0), 77);
  const auto c = spectrum::build_full_plan(p, cut_at(193.0, 42.0), 78);
  CHECK(same_plan(a, b));
  CHECK_FALSE(same_plan(a, c));
}

TEST_CASE("experimental grid: 95 interferers plus the CUT on 50 GHz slots") {
  const auto p = spectrum::experimental_policy(-2.0);
  CHECK(p.slot_count() == 96);
  const auto s = spectrum::build_full_plan(p, cut_at(p.slot_center_thz(40), 35.0), 3);
  CHECK(s.channels.size() == 96);
  CHECK(s.cut_index == 40);
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    CHECK(s.channels[i].center_freq_thz == doctest::Approx(p.slot_center_thz(i)).epsilon(1e-15));
  }
  CHECK(s.cut().launch_power_dbm == doctest::Approx(-2.0));
  CHECK_THROWS_AS(spectrum::build_full_plan(p, cut_at(p.slot_center_thz(40) + 0.01, 35.0), 3), CutOutOfBand);
}

TEST_CASE("CUT outside the band") {
  spectrum::GridPolicy p;
  CHECK_THROWS_AS(spectrum::build_full_plan(p, cut_at(191.31, 35.0), 1), CutOutOfBand);
  CHECK_THROWS_AS(spectrum::build_full_plan(p, cut_at(197.0, 35.0), 1), CutOutOfBand);
}

TEST_CASE("partial loads") {
  spectrum::GridPolicy p;
  const auto full = spectrum::build_full_plan(p, cut_at(194.2, 60.0), 9);

  const auto all = spectrum::sample_partial(full, 1.0, 1);
  CHECK(all.active == full.active);

  const double cut_only = full.cut_only_fraction();
  const auto lone = spectrum::sample_partial(full, cut_only + 1e-6, 1);
  CHECK(lone.active_count() == 1);
  CHECK(lone.is_active(lone.cut_index));

  // Realized fill never exceeds the target and stays within one channel of it.
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const double target = cut_only + (1.0 - cut_only) * static_cast<double>(seed % 97) / 96.0;
    const auto s = spectrum::sample_partial(spectrum::build_full_plan(p, cut_at(193.7, 35.0), seed), target, seed);
    CHECK(s.is_active(s.cut_index));
    CHECK(s.fill_fraction() <= target + 1e-12);
    CHECK(target - s.fill_fraction() <= 69.0 / 4800.0 + 1e-12);
  }
  CHECK_THROWS_AS(spectrum::sample_partial(full, 0.0, 1), InvalidArgument);
}

TEST_CASE("realization text round trip is exact") {
  spectrum::GridPolicy p;
  p.psd_anchor_dbm = -2.345678901;
  const auto s = spectrum::sample_partial(spectrum::build_full_plan(p, cut_at(192.5, 47.3), 4), 0.4, 5);
  std::stringstream ss;
  write_realization(ss, s);
  const auto back = read_realization(ss);
  CHECK(back.band_start_thz == s.band_start_thz);
  CHECK(back.band_end_thz == s.band_end_thz);
  CHECK(back.cut_index == s.cut_index);
  CHECK(back.active == s.active);
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    CHECK(back.channels[i].center_freq_thz == s.channels[i].center_freq_thz);
    CHECK(back.channels[i].symbol_rate_gbd == s.channels[i].symbol_rate_gbd);
    CHECK(back.channels[i].launch_power_dbm == s.channels[i].launch_power_dbm);
  }
  std::stringstream bad("band 191.3 196.1\n193.7 35 0 1\n");
  CHECK_THROWS_AS(read_realization(bad), FormatError);
}

TEST_CASE("validate catches broken plans") {
  SpectrumRealization s;
  ChannelSpec a = cut_at(193.7, 35.0), b = cut_at(193.72, 35.0);
  b.is_cut = false;
  s.channels = {a, b};
  s.active = {1, 1};
  CHECK_THROWS_AS(s.validate(), OverlappingChannels);
  s.channels = {cut_at(196.09, 35.0)};
  s.active = {1};
  CHECK_THROWS_AS(s.validate(), CutOutOfBand);
  s.channels = {cut_at(193.7, 35.0)};
  s.active = {0};
  CHECK_THROWS(s.validate());
}

TEST_CASE("grid policy checks") {
  spectrum::GridPolicy p;
  p.psd_anchor_dbm = 0.5;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.psd_anchor_dbm = 0.0;
  CHECK(p.constant_psd_power_dbm(70.0) == doctest::Approx(10.0 * std::log10(2.0)));
  const auto rates = p.allowed_symbol_rates();
  CHECK(rates.front() == doctest::Approx(37.5));
  CHECK(rates.back() == doctest::Approx(68.75));
}
