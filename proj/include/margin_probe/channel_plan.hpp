#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace margin_probe {

enum class ModulationFormat : std::uint8_t { kQpsk, k16Qam, k32Qam, k64Qam };

std::string to_string(ModulationFormat m);
ModulationFormat modulation_from_string(const std::string& s);

/// One optical channel with a rectangular PSD: occupied bandwidth equals the
/// symbol rate. The modulation label is metadata only.
struct ChannelSpec {
  double center_freq_thz = 193.7;
  double symbol_rate_gbd = 35.0;
  double launch_power_dbm = 0.0;
  bool is_cut = false;
  ModulationFormat modulation = ModulationFormat::k16Qam;

  double bandwidth_hz() const { return symbol_rate_gbd * 1e9; }
  double lower_thz() const { return center_freq_thz - symbol_rate_gbd * 0.5e-3; }
  double upper_thz() const { return center_freq_thz + symbol_rate_gbd * 0.5e-3; }
  double power_w() const;
  double psd_w_per_hz() const { return power_w() / bandwidth_hz(); }
};

/// A channel plan over a band plus an on/off mask. `channels` are ordered by
/// center frequency and have pairwise disjoint supports.
struct SpectrumRealization {
  double band_start_thz = 191.3;
  double band_end_thz = 196.1;
  std::vector<ChannelSpec> channels;
  std::vector<std::uint8_t> active;
  std::size_t cut_index = 0;

  const ChannelSpec& cut() const { return channels.at(cut_index); }
  bool is_active(std::size_t i) const { return active.at(i) != 0; }
  std::size_t active_count() const;

  double band_width_thz() const { return band_end_thz - band_start_thz; }
  /// Sum of active bandwidths over the band width.
  double fill_fraction() const;
  /// Fill fraction of the CUT alone.
  double cut_only_fraction() const;

  /// Same plan with every channel switched on.
  SpectrumRealization fully_loaded() const;
  /// Same plan with only the CUT switched on.
  SpectrumRealization cut_only() const;

  /// Throws OverlappingChannels / CutOutOfBand / InvalidArgument.
  void validate() const;
};

/// Line-oriented text form: a `band <start> <end>` line, then one
/// `<center_thz> <gbd> <dbm> <active> <is_cut>` line per channel. Values are
/// written in shortest round-trip form so replays are exact.
void write_realization(std::ostream& out, const SpectrumRealization& s);
SpectrumRealization read_realization(std::istream& in);

}  // namespace margin_probe
