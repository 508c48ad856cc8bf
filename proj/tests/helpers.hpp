#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "margin_probe/channel_plan.hpp"

namespace test_support {

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

/// Active channels at (center THz, GBd), all at `dbm`; channel `cut` is the CUT.
inline margin_probe::SpectrumRealization plan(const std::vector<std::pair<double, double>>& channels,
                                              std::size_t cut, double dbm = 0.0) {
  margin_probe::SpectrumRealization s;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    margin_probe::ChannelSpec c;
    c.center_freq_thz = channels[i].first;
    c.symbol_rate_gbd = channels[i].second;
    c.launch_power_dbm = dbm;
    c.is_cut = i == cut;
    s.channels.push_back(c);
    s.active.push_back(1);
  }
  s.cut_index = cut;
  return s;
}

}  // namespace test_support
