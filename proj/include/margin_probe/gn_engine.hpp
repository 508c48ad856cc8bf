#pragma once

#include <cstddef>

#include "margin_probe/channel_plan.hpp"
#include "margin_probe/link.hpp"

namespace margin_probe::gn {

struct EffectiveLength {
  double effective_km;   // (1 - exp(-2 alpha L)) / (2 alpha)
  double asymptotic_km;  // 1 / (2 alpha)
};

EffectiveLength effective_length(const FiberParams& fiber, double span_length_km);

struct QuadratureOptions {
  double rel_tol = 1e-4;
  std::size_t max_outer_intervals = 20000;
  std::size_t max_inner_intervals = 4000;
};

struct IntegralDiagnostics {
  double abs_error = 0.0;
  std::size_t outer_intervals = 0;
};

/// NLI PSD [W/Hz] at frequency `f_thz` from the GN reference double integral,
/// accumulated incoherently over all spans. Slow; used as the oracle for the
/// closed form. Throws QuadratureNotConverged when the tolerance is not met
/// within the interval budget.
double nli_psd_integral(const SpectrumRealization& spectrum, const LinkTopology& topology, double f_thz,
                        const QuadratureOptions& options = {}, IntegralDiagnostics* diagnostics = nullptr);

/// Self-channel part of the closed form for the channel at `cut_index` [W/Hz], one span.
double sci_psd_single_span(const SpectrumRealization& spectrum, const FiberParams& fiber,
                           double span_length_km, std::size_t cut_index);

/// Closed-form incoherent GN approximation at the center of `cut_index`:
/// one asinh SCI term plus one asinh XCI term per active interferer.
double nli_psd_closed_form(const SpectrumRealization& spectrum, const LinkTopology& topology,
                           std::size_t cut_index);

/// Link-level deviations from the ideal line used to emulate a real link.
struct LinkImpairments {
  double extra_loss_db_per_span = 0.0;  // lumped node loss, compensated by the amplifier
  double nf_tilt_start_db = 0.0;        // NF offset at band start
  double nf_tilt_end_db = 0.0;          // NF offset at band end
  double band_start_thz = 191.3;
  double band_end_thz = 196.1;

  double nf_offset_db(double f_thz) const;
  bool is_identity() const {
    return extra_loss_db_per_span == 0.0 && nf_tilt_start_db == 0.0 && nf_tilt_end_db == 0.0;
  }
};

/// Accumulated ASE power [W] in `ref_bandwidth_ghz` around `f_thz`:
/// n_spans * h f * F * (G - 1) * B_ref.
double ase_power(const LinkTopology& topology, double ref_bandwidth_ghz, double f_thz,
                 const LinkImpairments& impairments = {});

enum class NliPath { kClosedForm, kIntegral };

struct SnrOptions {
  NliPath path = NliPath::kClosedForm;
  LinkImpairments impairments{};
  QuadratureOptions quadrature{};
};

struct SnrBreakdown {
  double signal_w = 0.0;
  double ase_w = 0.0;
  double nli_w = 0.0;
  double snr_db = 0.0;
};

SnrBreakdown snr_breakdown(const SpectrumRealization& spectrum, const LinkTopology& topology,
                           const SnrOptions& options = {});

/// SNR of the CUT in its own symbol-rate bandwidth [dB].
double snr_db(const SpectrumRealization& spectrum, const LinkTopology& topology, const SnrOptions& options = {});

/// Fully loaded system margin: SNR(partial) - SNR(all channels on) [dB].
double margin_db(const SpectrumRealization& partial, const LinkTopology& topology, const SnrOptions& options = {});

}  // namespace margin_probe::gn
