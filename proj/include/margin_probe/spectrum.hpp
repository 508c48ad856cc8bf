#pragma once

#include <cstdint>
#include <vector>

#include "margin_probe/channel_plan.hpp"
#include "margin_probe/config.hpp"

namespace margin_probe::spectrum {

/// Channel plan policy over the C-band.
///
/// Packing mode (default) fills the band with channels whose symbol rates are
/// multiples of `granularity_ghz` inside [min_symbol_rate_gbd, max_symbol_rate_gbd].
/// Fixed-slot mode reproduces a lab grid: every `slot_width_ghz` slot holds one
/// channel, the CUT sits in one slot and every other slot carries an interferer
/// of `interferer_bandwidth_ghz`.
struct GridPolicy {
  double band_start_thz = 191.3;
  double band_end_thz = 196.1;
  double granularity_ghz = 6.25;
  double min_symbol_rate_gbd = 35.0;
  double max_symbol_rate_gbd = 69.0;
  bool constant_psd = true;
  double psd_anchor_dbm = 0.0;  // launch power of a 35 GBd channel

  bool fixed_slots = false;
  double slot_width_ghz = 50.0;
  double interferer_bandwidth_ghz = 50.0;

  static constexpr double kAnchorSymbolRateGbd = 35.0;

  void validate() const;
  double band_width_ghz() const { return (band_end_thz - band_start_thz) * 1e3; }
  /// Launch power giving the anchor PSD at `symbol_rate_gbd`.
  double constant_psd_power_dbm(double symbol_rate_gbd) const;
  /// Interferer symbol rates allowed in packing mode, ascending.
  std::vector<double> allowed_symbol_rates() const;
  std::size_t slot_count() const;
  double slot_center_thz(std::size_t slot) const;
};

/// 50 GHz fixed grid: 96 slots over the 4.8 THz band, 95 interferers plus the CUT.
GridPolicy experimental_policy(double psd_anchor_dbm = 0.0);

GridPolicy policy_from_config(const KeyValueConfig& cfg, GridPolicy base = {});

/// Full-load plan around `cut` with every channel active. The CUT keeps its
/// center and symbol rate; its launch power is reset to the constant-PSD value
/// when the policy asks for it. Throws CutOutOfBand if the CUT does not fit.
SpectrumRealization build_full_plan(const GridPolicy& policy, const ChannelSpec& cut, std::uint64_t seed);

/// Random partial load of `full`: the CUT plus a random subset of interferers,
/// added in shuffled order while the active bandwidth stays at or below
/// `fill_target` of the band.
SpectrumRealization sample_partial(const SpectrumRealization& full, double fill_target, std::uint64_t seed);

}  // namespace margin_probe::spectrum
