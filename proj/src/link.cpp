#include "margin_probe/link.hpp"

#include <cmath>

#include "margin_probe/errors.hpp"

namespace margin_probe {

void FiberParams::validate() const {
  if (!(attenuation_db_per_km > 0.0)) throw InvalidArgument("attenuation_db_per_km must be > 0");
  if (!(gamma_per_w_km > 0.0)) throw InvalidArgument("gamma_per_w_km must be > 0");
  if (beta2_ps2_per_km == 0.0 || !std::isfinite(beta2_ps2_per_km)) {
    throw InvalidArgument("beta2_ps2_per_km must be finite and nonzero");
  }
  if (!(nf_db >= 3.0)) throw InvalidArgument("nf_db below the 3 dB quantum limit");
}

void LinkTopology::validate() const {
  if (n_spans < 1) throw InvalidArgument("n_spans must be >= 1");
  if (!(span_length_km > 0.0)) throw InvalidArgument("span_length_km must be > 0");
  fiber.validate();
}

FiberParams fiber_from_config(const KeyValueConfig& cfg, FiberParams base) {
  base.attenuation_db_per_km = cfg.get_double_or("attenuation_db_per_km", base.attenuation_db_per_km);
  base.beta2_ps2_per_km = cfg.get_double_or("beta2_ps2_per_km", base.beta2_ps2_per_km);
  base.gamma_per_w_km = cfg.get_double_or("gamma_per_w_km", base.gamma_per_w_km);
  base.nf_db = cfg.get_double_or("nf_db", base.nf_db);
  base.validate();
  return base;
}

LinkTopology topology_from_config(const KeyValueConfig& cfg, LinkTopology base) {
  base.n_spans = static_cast<int>(cfg.get_int_or("n_spans", base.n_spans));
  base.span_length_km = cfg.get_double_or("span_length_km", base.span_length_km);
  base.fiber = fiber_from_config(cfg, base.fiber);
  base.validate();
  return base;
}

}  // namespace margin_probe
