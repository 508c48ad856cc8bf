#include "margin_probe/gn_engine.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "margin_probe/errors.hpp"
#include "margin_probe/quadrature.hpp"
#include "margin_probe/units.hpp"

namespace margin_probe::gn {
namespace {

// Active channel supports expressed as offsets [Hz] from an evaluation frequency.
struct Support {
  double lo;
  double hi;
  double psd;
};

std::vector<Support> active_supports(const SpectrumRealization& s, double f_hz) {
  std::vector<Support> out;
  out.reserve(s.channels.size());
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    if (!s.active[i]) continue;
    const auto& c = s.channels[i];
    out.push_back({thz_to_hz(c.lower_thz()) - f_hz, thz_to_hz(c.upper_thz()) - f_hz, c.psd_w_per_hz()});
  }
  std::sort(out.begin(), out.end(), [](const Support& a, const Support& b) { return a.lo < b.lo; });
  return out;
}

// Appends [lo, hi] to `segs`, split at zero where the rho ridge sits.
void push_split_at_zero(std::vector<quadrature::Segment>& segs, double lo, double hi, double scale) {
  if (lo < 0.0 && hi > 0.0) {
    segs.push_back({lo, 0.0, scale});
    segs.push_back({0.0, hi, scale});
  } else {
    segs.push_back({lo, hi, scale});
  }
}

// Segments in nu2 where both G(f + nu2) and G(f + nu1 + nu2) are nonzero,
// each scaled by the product of the two PSDs.
void inner_segments(const std::vector<Support>& sup, double nu1, std::vector<quadrature::Segment>& segs) {
  segs.clear();
  std::size_t j = 0, k = 0;
  while (j < sup.size() && k < sup.size()) {
    const double a_lo = sup[j].lo, a_hi = sup[j].hi;
    const double b_lo = sup[k].lo - nu1, b_hi = sup[k].hi - nu1;
    const double lo = std::max(a_lo, b_lo);
    const double hi = std::min(a_hi, b_hi);
    if (hi > lo) push_split_at_zero(segs, lo, hi, sup[j].psd * sup[k].psd);
    if (a_hi < b_hi) {
      ++j;
    } else {
      ++k;
    }
  }
}

void require_positive_psd(const SpectrumRealization& s) {
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    if (s.active[i] && !(s.channels[i].psd_w_per_hz() > 0.0)) {
      throw InvalidArgument("active channel " + std::to_string(i) + " has non-positive PSD");
    }
  }
}

}  // namespace

EffectiveLength effective_length(const FiberParams& fiber, double span_length_km) {
  const double two_alpha = 2.0 * fiber.alpha_field_per_km();
  // expm1 keeps the lossless limit accurate.
  return {-std::expm1(-two_alpha * span_length_km) / two_alpha, 1.0 / two_alpha};
}

double nli_psd_integral(const SpectrumRealization& spectrum, const LinkTopology& topology, double f_thz,
                        const QuadratureOptions& options, IntegralDiagnostics* diagnostics) {
  spectrum.validate();
  topology.validate();
  require_positive_psd(spectrum);
  if (f_thz < spectrum.band_start_thz || f_thz > spectrum.band_end_thz) {
    throw InvalidArgument("evaluation frequency outside the band");
  }
  const auto& fiber = topology.fiber;
  const double alpha = fiber.alpha_field_per_km();
  const double length = topology.span_length_km;
  const double c = std::exp(-2.0 * alpha * length);
  const double four_alpha_sq = 4.0 * alpha * alpha;
  const double numerator_const = 1.0 + c * c;
  const double k_disp = 4.0 * kPi * kPi * fiber.beta2_s2_per_km();  // theta = k_disp * nu1 * nu2

  const auto sup = active_supports(spectrum, thz_to_hz(f_thz));

  // rho = |1 - c exp(j theta L)|^2 / |2 alpha - j theta|^2
  auto rho = [&](double nu1, double nu2) {
    const double theta = k_disp * nu1 * nu2;
    return (numerator_const - 2.0 * c * std::cos(theta * length)) / (four_alpha_sq + theta * theta);
  };

  const double inner_rel_tol = options.rel_tol * 1e-2;
  bool inner_failed = false;
  std::vector<quadrature::Segment> segs;
  auto outer = [&](double nu1) {
    inner_segments(sup, nu1, segs);
    const auto r = quadrature::integrate([&](double nu2) { return rho(nu1, nu2); }, segs, inner_rel_tol, 0.0,
                                         options.max_inner_intervals);
    if (!r.converged) inner_failed = true;
    return r.value;
  };

  std::vector<quadrature::Segment> outer_segs;
  for (const auto& s : sup) push_split_at_zero(outer_segs, s.lo, s.hi, s.psd);
  const auto r = quadrature::integrate(outer, outer_segs, options.rel_tol, 0.0, options.max_outer_intervals);
  if (diagnostics) {
    diagnostics->abs_error = r.error;
    diagnostics->outer_intervals = r.intervals;
  }
  if (!r.converged || inner_failed) {
    throw QuadratureNotConverged("GN integral did not reach relative tolerance " +
                                 std::to_string(options.rel_tol) + " (estimated error " +
                                 std::to_string(r.error / std::abs(r.value)) + ")");
  }
  const double gamma = fiber.gamma_per_w_km;
  return topology.n_spans * (16.0 / 27.0) * gamma * gamma * r.value;
}

double sci_psd_single_span(const SpectrumRealization& spectrum, const FiberParams& fiber, double span_length_km,
                           std::size_t cut_index) {
  const auto len = effective_length(fiber, span_length_km);
  const double beta2 = std::abs(fiber.beta2_s2_per_km());
  const auto& cut = spectrum.channels.at(cut_index);
  const double g = cut.psd_w_per_hz();
  const double b = cut.bandwidth_hz();
  const double gamma = fiber.gamma_per_w_km;
  const double coef =
      (16.0 / 27.0) * gamma * gamma * len.effective_km * len.effective_km / (2.0 * kPi * beta2 * len.asymptotic_km);
  return coef * g * g * g * std::asinh(0.5 * kPi * kPi * beta2 * len.asymptotic_km * b * b);
}

double nli_psd_closed_form(const SpectrumRealization& spectrum, const LinkTopology& topology,
                           std::size_t cut_index) {
  spectrum.validate();
  topology.validate();
  const auto& fiber = topology.fiber;
  const auto len = effective_length(fiber, topology.span_length_km);
  const double beta2 = std::abs(fiber.beta2_s2_per_km());
  const double la = len.asymptotic_km;
  const auto& cut = spectrum.channels.at(cut_index);
  const double g_cut = cut.psd_w_per_hz();
  const double b_cut = cut.bandwidth_hz();
  const double f_cut = thz_to_hz(cut.center_freq_thz);
  const double x = kPi * kPi * beta2 * la * b_cut;

  double xci = 0.0;
  for (std::size_t m = 0; m < spectrum.channels.size(); ++m) {
    if (m == cut_index || !spectrum.active[m]) continue;
    const auto& ch = spectrum.channels[m];
    const double g_int = ch.psd_w_per_hz();
    const double half_b = 0.5 * ch.bandwidth_hz();
    const double df = std::abs(thz_to_hz(ch.center_freq_thz) - f_cut);
    xci += g_int * g_int * (std::asinh(x * (df + half_b)) - std::asinh(x * (df - half_b)));
  }
  const double gamma = fiber.gamma_per_w_km;
  // XCI integrates the rho ridge across the whole CUT, where the oscillating
  // part of |1 - c exp(j theta L)|^2 averages out: the prefactor is
  // (1 - c^2) L_a^2 instead of L_eff^2 = (1 - c)^2 L_a^2, c = exp(-2 alpha L).
  const double c = std::exp(-topology.span_length_km / la);
  const double xci_length_sq = (1.0 - c * c) * la * la;
  const double coef = (16.0 / 27.0) * gamma * gamma * xci_length_sq / (2.0 * kPi * beta2 * la);
  const double sci = sci_psd_single_span(spectrum, fiber, topology.span_length_km, cut_index);
  return topology.n_spans * (sci + coef * g_cut * xci);
}

double LinkImpairments::nf_offset_db(double f_thz) const {
  const double t = (f_thz - band_start_thz) / (band_end_thz - band_start_thz);
  return nf_tilt_start_db + (nf_tilt_end_db - nf_tilt_start_db) * t;
}

double ase_power(const LinkTopology& topology, double ref_bandwidth_ghz, double f_thz,
                 const LinkImpairments& impairments) {
  topology.validate();
  const double gain = db_to_linear(topology.span_loss_db() + impairments.extra_loss_db_per_span);
  const double nf = db_to_linear(topology.fiber.nf_db + impairments.nf_offset_db(f_thz));
  return topology.n_spans * kPlanck * thz_to_hz(f_thz) * nf * (gain - 1.0) * ghz_to_hz(ref_bandwidth_ghz);
}

SnrBreakdown snr_breakdown(const SpectrumRealization& spectrum, const LinkTopology& topology,
                           const SnrOptions& options) {
  spectrum.validate();
  const auto& cut = spectrum.cut();
  SnrBreakdown out;
  out.signal_w = cut.power_w();
  out.ase_w = ase_power(topology, cut.symbol_rate_gbd, cut.center_freq_thz, options.impairments);
  const double nli_psd = options.path == NliPath::kIntegral
                             ? nli_psd_integral(spectrum, topology, cut.center_freq_thz, options.quadrature)
                             : nli_psd_closed_form(spectrum, topology, spectrum.cut_index);
  out.nli_w = nli_psd * cut.bandwidth_hz();
  out.snr_db = linear_to_db(out.signal_w / (out.ase_w + out.nli_w));
  return out;
}

double snr_db(const SpectrumRealization& spectrum, const LinkTopology& topology, const SnrOptions& options) {
  return snr_breakdown(spectrum, topology, options).snr_db;
}

double margin_db(const SpectrumRealization& partial, const LinkTopology& topology, const SnrOptions& options) {
  return snr_db(partial, topology, options) - snr_db(partial.fully_loaded(), topology, options);
}

}  // namespace margin_probe::gn
