#pragma once

#include <cmath>

namespace margin_probe {

inline constexpr double kPlanck = 6.62607015e-34;  // J*s
inline constexpr double kPi = 3.14159265358979323846;

// 10*log10(e); converts dB/km power attenuation to the nepers used by the GN formulas.
inline constexpr double kDbPerNeper = 4.342944819032518;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return 1e-3 * db_to_linear(dbm); }
inline double watt_to_dbm(double w) { return linear_to_db(w / 1e-3); }

inline constexpr double thz_to_hz(double thz) { return thz * 1e12; }
inline constexpr double ghz_to_hz(double ghz) { return ghz * 1e9; }

}  // namespace margin_probe
