#include "margin_probe/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "margin_probe/errors.hpp"
#include "margin_probe/rng.hpp"
#include "margin_probe/units.hpp"

namespace margin_probe::spectrum {
namespace {

constexpr double kFitToleranceGhz = 1e-6;

ModulationFormat random_modulation(Rng& rng) {
  return static_cast<ModulationFormat>(rng.uniform_int(0, 3));
}

// Packs channels left-to-right into [lo_ghz, hi_ghz] (offsets from band start).
void pack_segment(const GridPolicy& policy, const std::vector<double>& rates, double lo_ghz, double hi_ghz,
                  Rng& rng, std::vector<ChannelSpec>& out) {
  double pos = lo_ghz;
  while (true) {
    const double room = hi_ghz - pos;
    if (room + kFitToleranceGhz < rates.front()) break;
    double rate = rates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(rates.size()) - 1))];
    bool last = false;
    if (rate > room + kFitToleranceGhz) {
      // The draw does not fit: close the segment with the widest rate that does.
      rate = *std::prev(std::upper_bound(rates.begin(), rates.end(), room + kFitToleranceGhz));
      last = true;
    }
    ChannelSpec ch;
    ch.center_freq_thz = policy.band_start_thz + (pos + 0.5 * rate) * 1e-3;
    ch.symbol_rate_gbd = rate;
    ch.launch_power_dbm = policy.constant_psd_power_dbm(rate);
    ch.is_cut = false;
    ch.modulation = random_modulation(rng);
    out.push_back(ch);
    pos += rate;
    if (last) break;
  }
}

}  // namespace

void GridPolicy::validate() const {
  if (!(band_end_thz > band_start_thz)) throw InvalidArgument("band end must exceed band start");
  if (!(granularity_ghz > 0.0)) throw InvalidArgument("granularity must be positive");
  if (!(psd_anchor_dbm >= -3.0 && psd_anchor_dbm <= 0.0)) {
    throw InvalidArgument("psd_anchor_dbm must lie in [-3, 0] dBm");
  }
  if (fixed_slots) {
    if (!(slot_width_ghz > 0.0) || !(interferer_bandwidth_ghz > 0.0) ||
        interferer_bandwidth_ghz > slot_width_ghz + kFitToleranceGhz) {
      throw InvalidArgument("interferer bandwidth must be positive and fit in a slot");
    }
  } else if (allowed_symbol_rates().empty()) {
    throw InvalidArgument("no symbol rate on the granularity grid inside the allowed range");
  }
}

double GridPolicy::constant_psd_power_dbm(double symbol_rate_gbd) const {
  return psd_anchor_dbm + linear_to_db(symbol_rate_gbd / kAnchorSymbolRateGbd);
}

std::vector<double> GridPolicy::allowed_symbol_rates() const {
  std::vector<double> out;
  const auto first = static_cast<long>(std::ceil(min_symbol_rate_gbd / granularity_ghz - 1e-9));
  const auto last = static_cast<long>(std::floor(max_symbol_rate_gbd / granularity_ghz + 1e-9));
  for (long k = first; k <= last; ++k) out.push_back(static_cast<double>(k) * granularity_ghz);
  return out;
}

std::size_t GridPolicy::slot_count() const {
  return static_cast<std::size_t>(std::floor(band_width_ghz() / slot_width_ghz + 1e-9));
}

double GridPolicy::slot_center_thz(std::size_t slot) const {
  return band_start_thz + (static_cast<double>(slot) + 0.5) * slot_width_ghz * 1e-3;
}

GridPolicy experimental_policy(double psd_anchor_dbm) {
  GridPolicy p;
  p.fixed_slots = true;
  p.slot_width_ghz = 50.0;
  p.interferer_bandwidth_ghz = 50.0;
  p.psd_anchor_dbm = psd_anchor_dbm;
  return p;
}

GridPolicy policy_from_config(const KeyValueConfig& cfg, GridPolicy base) {
  base.band_start_thz = cfg.get_double_or("band_start_thz", base.band_start_thz);
  base.band_end_thz = cfg.get_double_or("band_end_thz", base.band_end_thz);
  base.granularity_ghz = cfg.get_double_or("granularity_ghz", base.granularity_ghz);
  base.min_symbol_rate_gbd = cfg.get_double_or("min_symbol_rate_gbd", base.min_symbol_rate_gbd);
  base.max_symbol_rate_gbd = cfg.get_double_or("max_symbol_rate_gbd", base.max_symbol_rate_gbd);
  base.psd_anchor_dbm = cfg.get_double_or("psd_anchor_dbm", base.psd_anchor_dbm);
  base.constant_psd = cfg.get_int_or("constant_psd", base.constant_psd ? 1 : 0) != 0;
  base.fixed_slots = cfg.get_int_or("fixed_slots", base.fixed_slots ? 1 : 0) != 0;
  base.slot_width_ghz = cfg.get_double_or("slot_width_ghz", base.slot_width_ghz);
  base.interferer_bandwidth_ghz = cfg.get_double_or("interferer_bandwidth_ghz", base.interferer_bandwidth_ghz);
  base.validate();
  return base;
}

SpectrumRealization build_full_plan(const GridPolicy& policy, const ChannelSpec& cut_in, std::uint64_t seed) {
  policy.validate();
  ChannelSpec cut = cut_in;
  cut.is_cut = true;
  if (policy.constant_psd) cut.launch_power_dbm = policy.constant_psd_power_dbm(cut.symbol_rate_gbd);
  if (!(cut.symbol_rate_gbd > 0.0) || cut.lower_thz() < policy.band_start_thz - 1e-9 ||
      cut.upper_thz() > policy.band_end_thz + 1e-9) {
    throw CutOutOfBand("CUT at " + std::to_string(cut.center_freq_thz) + " THz does not fit in the band");
  }

  Rng rng(seed);
  std::vector<ChannelSpec> channels;
  if (policy.fixed_slots) {
    const double pos_ghz = (cut.center_freq_thz - policy.band_start_thz) * 1e3;
    const double slot_f = pos_ghz / policy.slot_width_ghz - 0.5;
    const auto cut_slot = static_cast<long>(std::lround(slot_f));
    if (std::abs(slot_f - static_cast<double>(cut_slot)) > 1e-6 || cut_slot < 0 ||
        static_cast<std::size_t>(cut_slot) >= policy.slot_count()) {
      throw CutOutOfBand("CUT center is not a slot center of the fixed grid");
    }
    if (cut.symbol_rate_gbd > policy.slot_width_ghz + kFitToleranceGhz) {
      throw CutOutOfBand("CUT is wider than a grid slot");
    }
    for (std::size_t slot = 0; slot < policy.slot_count(); ++slot) {
      if (static_cast<long>(slot) == cut_slot) {
        channels.push_back(cut);
        continue;
      }
      ChannelSpec ch;
      ch.center_freq_thz = policy.slot_center_thz(slot);
      ch.symbol_rate_gbd = policy.interferer_bandwidth_ghz;
      ch.launch_power_dbm = policy.constant_psd_power_dbm(ch.symbol_rate_gbd);
      ch.modulation = random_modulation(rng);
      channels.push_back(ch);
    }
  } else {
    const auto rates = policy.allowed_symbol_rates();
    const double cut_lo = (cut.lower_thz() - policy.band_start_thz) * 1e3;
    const double cut_hi = (cut.upper_thz() - policy.band_start_thz) * 1e3;
    pack_segment(policy, rates, 0.0, cut_lo, rng, channels);
    channels.push_back(cut);
    pack_segment(policy, rates, cut_hi, policy.band_width_ghz(), rng, channels);
  }

  SpectrumRealization s;
  s.band_start_thz = policy.band_start_thz;
  s.band_end_thz = policy.band_end_thz;
  s.channels = std::move(channels);
  s.active.assign(s.channels.size(), 1);
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    if (s.channels[i].is_cut) s.cut_index = i;
  }
  s.validate();
  return s;
}

SpectrumRealization sample_partial(const SpectrumRealization& full, double fill_target, std::uint64_t seed) {
  if (!(fill_target > 0.0 && fill_target <= 1.0)) throw InvalidArgument("fill_target must lie in (0, 1]");
  SpectrumRealization s = full.cut_only();
  std::vector<std::size_t> order;
  order.reserve(s.channels.size());
  for (std::size_t i = 0; i < s.channels.size(); ++i) {
    if (i != s.cut_index) order.push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(order);
  const double budget_ghz = fill_target * s.band_width_thz() * 1e3;
  double used_ghz = s.cut().symbol_rate_gbd;
  for (const auto i : order) {
    const double bw = s.channels[i].symbol_rate_gbd;
    if (used_ghz + bw <= budget_ghz + kFitToleranceGhz) {
      s.active[i] = 1;
      used_ghz += bw;
    }
  }
  return s;
}

}  // namespace margin_probe::spectrum
