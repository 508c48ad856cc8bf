#pragma once

#include <string>

#include "margin_probe/config.hpp"
#include "margin_probe/units.hpp"

namespace margin_probe {

/// Fiber and amplifier constants. Defaults are standard SSMF values with an
/// EDFA noise figure of 5 dB.
struct FiberParams {
  double attenuation_db_per_km = 0.2;
  double beta2_ps2_per_km = -21.3;
  double gamma_per_w_km = 1.3;
  double nf_db = 5.0;

  /// Throws InvalidArgument on non-physical values (NF below 3 dB included).
  void validate() const;

  /// Field attenuation alpha [1/km]; 2*alpha is the power attenuation in nepers.
  double alpha_field_per_km() const { return attenuation_db_per_km / kDbPerNeper / 2.0; }
  double beta2_s2_per_km() const { return beta2_ps2_per_km * 1e-24; }
};

/// A chain of identical spans, each followed by an amplifier whose gain
/// exactly compensates the span loss.
struct LinkTopology {
  int n_spans = 1;
  double span_length_km = 80.0;
  FiberParams fiber{};

  void validate() const;
  double span_loss_db() const { return fiber.attenuation_db_per_km * span_length_km; }
};

/// Reads fiber/topology overrides from a key = value config; keys absent from
/// the config keep the values of `base`.
FiberParams fiber_from_config(const KeyValueConfig& cfg, FiberParams base = {});
LinkTopology topology_from_config(const KeyValueConfig& cfg, LinkTopology base = {});

}  // namespace margin_probe
