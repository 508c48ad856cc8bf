#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "margin_probe/errors.hpp"
#include "margin_probe/gn_engine.hpp"
#include "margin_probe/rng.hpp"
#include "margin_probe/spectrum.hpp"
#include "margin_probe/units.hpp"

using namespace margin_probe;
using test_support::plan;
using test_support::rel_close;

// Frozen anchors. Each was computed outside this code base (scipy dblquad on
// the reference integrand, or the formula by hand) and then matched by the
// engine before being pinned here.
namespace oracle {
constexpr double kLeff100km = 21.497576854210966;         // closed formula and quad of exp(-2 a z)
constexpr double kLeffAsymptote = 21.71472409516259;      // 1 / (2 a) at 0.2 dB/km
constexpr double kAse2x50 = 2.510544631283287e-07;        // 2 h f F (G - 1) B, 34.4 GHz at 193.5 THz
constexpr double kSci80kmIntegral = 6.1209310740833464e-18;  // dblquad, rel tol 1e-9
constexpr double kSci80kmClosedForm = 6.310203776200187e-18; // asinh formula by hand
constexpr double kSnr3ch2x80 = 27.261810933388652;        // three 35 GBd channels, 50 GHz spacing
constexpr double kNli3ch2x80 = 7.758892401838101e-07;     // NLI power in the CUT band [W]
}  // namespace oracle

TEST_CASE("effective length limits and reference value") {
  FiberParams lossless;
  lossless.attenuation_db_per_km = 1e-9;
  CHECK(gn::effective_length(lossless, 100.0).effective_km == doctest::Approx(100.0).epsilon(1e-5));

  FiberParams f;
  const auto l = gn::effective_length(f, 100.0);
  CHECK(rel_close(l.effective_km, oracle::kLeff100km, 1e-12));
  CHECK(rel_close(l.asymptotic_km, oracle::kLeffAsymptote, 1e-12));
  CHECK(gn::effective_length(f, 5000.0).effective_km == doctest::Approx(oracle::kLeffAsymptote).epsilon(1e-12));
}

TEST_CASE("ASE accumulation") {
  const LinkTopology two{2, 50.0, {}};
  CHECK(rel_close(gn::ase_power(two, 34.4, 193.5), oracle::kAse2x50, 1e-12));

  const LinkTopology four{4, 50.0, {}};
  CHECK(gn::ase_power(four, 34.4, 193.5) == doctest::Approx(2.0 * gn::ase_power(two, 34.4, 193.5)).epsilon(1e-15));

  // G -> 1 as the span vanishes.
  const LinkTopology tiny{3, 1e-12, {}};
  CHECK(gn::ase_power(tiny, 34.4, 193.5) < 1e-18 * oracle::kAse2x50 * 1e6);
}

TEST_CASE("SCI reference integral matches the frozen anchor") {
  const auto s = plan({{193.7, 35.0}}, 0);
  const LinkTopology t{1, 80.0, {}};
  const double integral = gn::nli_psd_integral(s, t, 193.7);
  CHECK(integral > 0.0);
  CHECK(rel_close(integral, oracle::kSci80kmIntegral, 1e-6));
  CHECK(rel_close(gn::nli_psd_closed_form(s, t, 0), oracle::kSci80kmClosedForm, 1e-10));
  CHECK(gn::nli_psd_closed_form(s, t, 0) == gn::sci_psd_single_span(s, t.fiber, 80.0, 0));
}

TEST_CASE("two-span SNR anchor on the oracle path") {
  const auto s = plan({{193.65, 35.0}, {193.7, 35.0}, {193.75, 35.0}}, 1);
  const LinkTopology t{2, 80.0, {}};
  gn::SnrOptions o;
  o.path = gn::NliPath::kIntegral;
  const auto b = gn::snr_breakdown(s, t, o);
  CHECK(std::abs(b.snr_db - oracle::kSnr3ch2x80) <= 1e-3);
  CHECK(rel_close(b.nli_w, oracle::kNli3ch2x80, 1e-4));
  // closed form within the 0.5 dB agreement band
  const auto c = gn::snr_breakdown(s, t);
  CHECK(std::abs(linear_to_db(c.nli_w / b.nli_w)) < 0.5);
}

TEST_CASE("NLI is cubic in PSD on both paths") {
  const LinkTopology t{1, 90.0, {}};
  const auto s1 = plan({{193.6, 50.0}, {193.7, 35.0}, {193.8, 50.0}}, 1, 0.0);
  const auto s2 = plan({{193.6, 50.0}, {193.7, 35.0}, {193.8, 50.0}}, 1, linear_to_db(2.0));
  CHECK(rel_close(gn::nli_psd_closed_form(s2, t, 1), 8.0 * gn::nli_psd_closed_form(s1, t, 1), 1e-6));
  CHECK(rel_close(gn::nli_psd_integral(s2, t, 193.7), 8.0 * gn::nli_psd_integral(s1, t, 193.7), 1e-6));
}

TEST_CASE("incoherent accumulation is exact") {
  const auto s = plan({{193.6, 50.0}, {193.7, 35.0}}, 1);
  const LinkTopology one{1, 70.0, {}}, seven{7, 70.0, {}};
  CHECK(gn::nli_psd_closed_form(s, seven, 1) == 7.0 * gn::nli_psd_closed_form(s, one, 1));
  CHECK(rel_close(gn::nli_psd_integral(s, seven, 193.7), 7.0 * gn::nli_psd_integral(s, one, 193.7), 1e-14));
}

TEST_CASE("closed form: empty interferer set and mirror symmetry") {
  const LinkTopology t{3, 100.0, {}};
  const auto alone = plan({{193.7, 35.0}}, 0);
  CHECK(gn::nli_psd_closed_form(alone, t, 0) == 3.0 * gn::sci_psd_single_span(alone, t.fiber, 100.0, 0));

  const auto left = plan({{193.6, 50.0}, {193.7, 35.0}}, 1);
  const auto right = plan({{193.7, 35.0}, {193.8, 50.0}}, 0);
  CHECK(rel_close(gn::nli_psd_closed_form(left, t, 1), gn::nli_psd_closed_form(right, t, 0), 1e-14));
}

TEST_CASE("overlapping channels are rejected") {
  const auto s = plan({{193.68, 35.0}, {193.7, 35.0}}, 1);
  const LinkTopology t{1, 80.0, {}};
  CHECK_THROWS_AS(gn::nli_psd_closed_form(s, t, 1), OverlappingChannels);
}

TEST_CASE("quadrature budget exhaustion is reported") {
  const auto s = plan({{193.3, 69.0}, {193.7, 35.0}, {194.1, 69.0}}, 1);
  const LinkTopology t{1, 80.0, {}};
  gn::QuadratureOptions q;
  q.rel_tol = 1e-12;
  q.max_outer_intervals = 3;
  CHECK_THROWS_AS(gn::nli_psd_integral(s, t, 193.7, q), QuadratureNotConverged);
}

TEST_CASE("SNR limits and interferer monotonicity") {
  LinkTopology t{10, 80.0, {}};
  const auto s = plan({{193.7, 35.0}}, 0);
  t.fiber.gamma_per_w_km = 1e-12;
  const auto b = gn::snr_breakdown(s, t);
  CHECK(b.snr_db == doctest::Approx(linear_to_db(dbm_to_watt(0.0) / b.ase_w)).epsilon(1e-12));

  t.fiber.gamma_per_w_km = 1.3;
  auto full = plan({{193.5, 35.0}, {193.6, 50.0}, {193.7, 35.0}, {193.8, 69.0}}, 2);
  auto partial = full.cut_only();
  double prev = gn::snr_db(partial, t);
  for (std::size_t i : {0u, 1u, 3u}) {
    partial.active[i] = 1;
    const double snr = gn::snr_db(partial, t);
    CHECK(snr < prev);
    prev = snr;
  }
}

TEST_CASE("margin: zero at full load, nonnegative and non-increasing with load") {
  const LinkTopology t{15, 95.0, {}};
  spectrum::GridPolicy p;
  ChannelSpec cut;
  cut.center_freq_thz = 193.7;
  cut.symbol_rate_gbd = 50.0;
  cut.is_cut = true;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto full = spectrum::build_full_plan(p, cut, seed);
    CHECK(gn::margin_db(full, t) == 0.0);

    // Switch interferers on one at a time in a random order.
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < full.channels.size(); ++i) {
      if (i != full.cut_index) order.push_back(i);
    }
    Rng rng(seed);
    rng.shuffle(order);
    auto partial = full.cut_only();
    double prev = gn::margin_db(partial, t);
    CHECK(prev > 0.0);
    for (std::size_t k = 0; k < order.size(); k += 7) {
      for (std::size_t j = k; j < std::min(order.size(), k + 7); ++j) partial.active[order[j]] = 1;
      const double m = gn::margin_db(partial, t);
      CHECK(m >= 0.0);
      CHECK(m <= prev + 1e-12);
      prev = m;
    }
  }
}

TEST_CASE("long-haul margins sit in the common 1.5-3 dB band") {
  spectrum::GridPolicy p;
  ChannelSpec cut;
  cut.center_freq_thz = 193.7;
  cut.symbol_rate_gbd = 35.0;
  cut.is_cut = true;
  const auto full = spectrum::build_full_plan(p, cut, 5);
  for (int spans : {10, 20}) {
    const LinkTopology t{spans, 100.0, {}};
    const double m = gn::margin_db(spectrum::sample_partial(full, 0.10, 6), t);
    CHECK(m >= 1.5);
    CHECK(m <= 3.0);
  }
}

TEST_CASE("link impairments") {
  gn::LinkImpairments imp;
  imp.nf_tilt_start_db = 1.0;
  CHECK(imp.nf_offset_db(191.3) == doctest::Approx(1.0));
  CHECK(imp.nf_offset_db(196.1) == doctest::Approx(0.0));
  CHECK(imp.nf_offset_db(193.7) == doctest::Approx(0.5));
  const LinkTopology t{2, 50.0, {}};
  CHECK(gn::ase_power(t, 35.0, 191.3, imp) == doctest::Approx(db_to_linear(1.0) * gn::ase_power(t, 35.0, 191.3)));
  gn::LinkImpairments loss;
  loss.extra_loss_db_per_span = 1.5;
  CHECK(gn::ase_power(t, 35.0, 193.7, loss) > gn::ase_power(t, 35.0, 193.7));
}

TEST_CASE("fiber validation") {
  FiberParams f;
  f.nf_db = 2.9;
  CHECK_THROWS_AS(f.validate(), InvalidArgument);
  f = {};
  f.beta2_ps2_per_km = 0.0;
  CHECK_THROWS_AS(f.validate(), InvalidArgument);
  LinkTopology t{0, 80.0, {}};
  CHECK_THROWS_AS(t.validate(), InvalidArgument);
}
