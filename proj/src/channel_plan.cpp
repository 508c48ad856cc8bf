#include "margin_probe/channel_plan.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "margin_probe/errors.hpp"
#include "margin_probe/units.hpp"

namespace margin_probe {
namespace {

// Supports may touch; anything beyond 1 kHz of overlap is a real overlap.
constexpr double kEdgeToleranceThz = 1e-9;

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

std::string to_string(ModulationFormat m) {
  switch (m) {
    case ModulationFormat::kQpsk: return "QPSK";
    case ModulationFormat::k16Qam: return "16QAM";
    case ModulationFormat::k32Qam: return "32QAM";
    case ModulationFormat::k64Qam: return "64QAM";
  }
  return "?";
}

ModulationFormat modulation_from_string(const std::string& s) {
  if (s == "QPSK") return ModulationFormat::kQpsk;
  if (s == "16QAM") return ModulationFormat::k16Qam;
  if (s == "32QAM") return ModulationFormat::k32Qam;
  if (s == "64QAM") return ModulationFormat::k64Qam;
  throw FormatError("unknown modulation format '" + s + "'");
}

double ChannelSpec::power_w() const { return dbm_to_watt(launch_power_dbm); }

std::size_t SpectrumRealization::active_count() const {
  std::size_t n = 0;
  for (auto a : active) n += a ? 1 : 0;
  return n;
}

double SpectrumRealization::fill_fraction() const {
  double occupied_ghz = 0.0;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (active[i]) occupied_ghz += channels[i].symbol_rate_gbd;
  }
  return occupied_ghz * 1e-3 / band_width_thz();
}

double SpectrumRealization::cut_only_fraction() const {
  return cut().symbol_rate_gbd * 1e-3 / band_width_thz();
}

SpectrumRealization SpectrumRealization::fully_loaded() const {
  SpectrumRealization s = *this;
  std::fill(s.active.begin(), s.active.end(), std::uint8_t{1});
  return s;
}

SpectrumRealization SpectrumRealization::cut_only() const {
  SpectrumRealization s = *this;
  std::fill(s.active.begin(), s.active.end(), std::uint8_t{0});
  s.active[s.cut_index] = 1;
  return s;
}

void SpectrumRealization::validate() const {
  if (!(band_end_thz > band_start_thz)) throw InvalidArgument("band end must exceed band start");
  if (channels.empty()) throw InvalidArgument("spectrum has no channels");
  if (active.size() != channels.size()) throw InvalidArgument("active mask size mismatch");
  if (cut_index >= channels.size()) throw InvalidArgument("cut_index out of range");
  if (!channels[cut_index].is_cut) throw InvalidArgument("channel at cut_index is not flagged as CUT");
  if (!active[cut_index]) throw InvalidArgument("CUT must be active");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto& c = channels[i];
    if (!(c.symbol_rate_gbd > 0.0)) throw InvalidArgument("symbol rate must be positive");
    if (c.is_cut != (i == cut_index)) throw InvalidArgument("exactly one channel must be the CUT");
    if (c.lower_thz() < band_start_thz - kEdgeToleranceThz ||
        c.upper_thz() > band_end_thz + kEdgeToleranceThz) {
      if (c.is_cut) throw CutOutOfBand("CUT support leaves the band");
      throw InvalidArgument("channel " + std::to_string(i) + " leaves the band");
    }
    if (i > 0 && channels[i - 1].upper_thz() > c.lower_thz() + kEdgeToleranceThz) {
      throw OverlappingChannels("channels " + std::to_string(i - 1) + " and " + std::to_string(i) +
                                " overlap or are out of order");
    }
  }
}

void write_realization(std::ostream& out, const SpectrumRealization& s) {
  out << "band " << shortest(s.band_start_thz) << ' ' << shortest(s.band_end_thz) << '\n';
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    const auto& c = s.channels[i];
    out << shortest(c.center_freq_thz) << ' ' << shortest(c.symbol_rate_gbd) << ' '
        << shortest(c.launch_power_dbm) << ' ' << int(s.active[i] != 0) << ' ' << int(c.is_cut) << '\n';
  }
}

SpectrumRealization read_realization(std::istream& in) {
  SpectrumRealization s;
  s.channels.clear();
  s.active.clear();
  std::string line;
  bool have_band = false;
  bool have_cut = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (!have_band) {
      std::string tag;
      if (!(ls >> tag >> s.band_start_thz >> s.band_end_thz) || tag != "band") {
        throw FormatError("realization must start with 'band <start> <end>'");
      }
      have_band = true;
      continue;
    }
    ChannelSpec c;
    int active = 0, is_cut = 0;
    if (!(ls >> c.center_freq_thz >> c.symbol_rate_gbd >> c.launch_power_dbm >> active >> is_cut)) {
      throw FormatError("malformed channel line: '" + line + "'");
    }
    c.is_cut = is_cut != 0;
    if (c.is_cut) {
      if (have_cut) throw FormatError("more than one CUT in realization");
      have_cut = true;
      s.cut_index = s.channels.size();
    }
    s.channels.push_back(c);
    s.active.push_back(active ? 1 : 0);
  }
  if (!have_band || !have_cut) throw FormatError("realization lacks band line or CUT");
  s.validate();
  return s;
}

}  // namespace margin_probe
