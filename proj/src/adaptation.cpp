#include "margin_probe/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "margin_probe/errors.hpp"
#include "margin_probe/parallel.hpp"
#include "margin_probe/rng.hpp"
#include "margin_probe/spectrum.hpp"

namespace margin_probe::adapt {
namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
    } catch (const std::exception&) {
      throw ConfigError("bad list entry '" + item + "'");
    }
  }
  return out;
}

ErrorStats error_stats(const std::vector<double>& errors) {
  ErrorStats s;
  s.n = errors.size();
  if (errors.empty()) return s;
  double sum = 0.0, ss = 0.0;
  for (double e : errors) {
    sum += e;
    ss += e * e;
  }
  s.mean = sum / static_cast<double>(s.n);
  s.rmse = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

}  // namespace

SurrogateLinkProfile SurrogateLinkProfile::identity(const LinkTopology& topology) {
  SurrogateLinkProfile p;
  p.topology = topology;
  p.extra_loss_db_per_node = 0.0;
  p.nf_tilt_start_db = 0.0;
  p.nf_tilt_end_db = 0.0;
  p.implementation_penalty_db = 0.0;
  p.jitter_std_db = 0.0;
  return p;
}

gn::LinkImpairments SurrogateLinkProfile::impairments() const {
  gn::LinkImpairments imp;
  imp.extra_loss_db_per_span = extra_loss_db_per_node;
  imp.nf_tilt_start_db = nf_tilt_start_db;
  imp.nf_tilt_end_db = nf_tilt_end_db;
  return imp;
}

void SurrogateLinkProfile::validate() const {
  topology.validate();
  if (!(extra_loss_db_per_node >= 0.0)) throw InvalidArgument("extra_loss_db_per_node must be >= 0");
  if (!(jitter_std_db >= 0.0)) throw InvalidArgument("jitter_std_db must be >= 0");
  if (!std::isfinite(implementation_penalty_db)) throw InvalidArgument("implementation penalty must be finite");
  if (center_freqs_thz.empty() || fill_levels.empty() || powers_dbm.empty() || repetitions < 1) {
    throw InvalidArgument("measurement grid is empty");
  }
  for (double f : fill_levels) {
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("fill levels must lie in (0, 1]");
  }
}

SurrogateLinkProfile profile_from_config(const KeyValueConfig& cfg, SurrogateLinkProfile base) {
  base.topology = topology_from_config(cfg, base.topology);
  base.extra_loss_db_per_node = cfg.get_double_or("extra_loss_db_per_node", base.extra_loss_db_per_node);
  base.nf_tilt_start_db = cfg.get_double_or("nf_tilt_start_db", base.nf_tilt_start_db);
  base.nf_tilt_end_db = cfg.get_double_or("nf_tilt_end_db", base.nf_tilt_end_db);
  base.implementation_penalty_db = cfg.get_double_or("implementation_penalty_db", base.implementation_penalty_db);
  base.jitter_std_db = cfg.get_double_or("jitter_std_db", base.jitter_std_db);
  base.seed = static_cast<std::uint64_t>(cfg.get_int_or("seed", static_cast<long long>(base.seed)));
  base.cut_gbd = cfg.get_double_or("cut_gbd", base.cut_gbd);
  base.repetitions = static_cast<int>(cfg.get_int_or("repetitions", base.repetitions));
  if (auto s = cfg.get_string("center_freqs_thz")) base.center_freqs_thz = parse_list(*s);
  if (auto s = cfg.get_string("fill_levels")) base.fill_levels = parse_list(*s);
  if (auto s = cfg.get_string("powers_dbm")) base.powers_dbm = parse_list(*s);
  base.validate();
  return base;
}

std::vector<MeasurementScenario> measurement_grid(const SurrogateLinkProfile& profile) {
  profile.validate();
  std::vector<MeasurementScenario> out;
  out.reserve(profile.center_freqs_thz.size() * profile.fill_levels.size() * profile.powers_dbm.size() *
              static_cast<std::size_t>(profile.repetitions));
  for (double f : profile.center_freqs_thz) {
    for (double fill : profile.fill_levels) {
      for (double p : profile.powers_dbm) {
        for (int rep = 0; rep < profile.repetitions; ++rep) {
          MeasurementScenario sc;
          sc.index = out.size();
          sc.center_freq_thz = f;
          sc.fill_target = fill;
          sc.p_ch_dbm = p;
          sc.repetition = rep;
          sc.seed = derive_seed(profile.seed, sc.index);
          out.push_back(sc);
        }
      }
    }
  }
  return out;
}

dataset::ProbeRecord surrogate_measure(const SurrogateLinkProfile& profile, const MeasurementScenario& sc) {
  auto policy = spectrum::experimental_policy();
  policy.psd_anchor_dbm = sc.p_ch_dbm - linear_to_db(profile.cut_gbd / spectrum::GridPolicy::kAnchorSymbolRateGbd);

  ChannelSpec cut;
  cut.center_freq_thz = sc.center_freq_thz;
  cut.symbol_rate_gbd = profile.cut_gbd;
  cut.is_cut = true;
  cut.modulation = ModulationFormat::k16Qam;

  const auto full = spectrum::build_full_plan(policy, cut, derive_seed(sc.seed, 1));
  const auto partial = spectrum::sample_partial(full, sc.fill_target, derive_seed(sc.seed, 2));

  gn::SnrOptions opts;
  opts.impairments = profile.impairments();
  const double snr_current = gn::snr_db(partial, profile.topology, opts);
  const double snr_full = gn::snr_db(full, profile.topology, opts);

  Rng jitter(derive_seed(sc.seed, 3));
  dataset::ProbeRecord r;
  r.seed = sc.seed;
  r.n_spans = profile.topology.n_spans;
  r.span_length_km = profile.topology.span_length_km;
  r.cut_gbd = profile.cut_gbd;
  r.modulation = cut.modulation;
  r.center_freq_thz = sc.center_freq_thz;
  r.p_ch_dbm = full.cut().launch_power_dbm;
  r.fill_fraction = partial.fill_fraction();
  r.snr_current_db = snr_current - profile.implementation_penalty_db;
  if (profile.jitter_std_db > 0.0) r.snr_current_db += profile.jitter_std_db * jitter.normal();
  r.snr_full_db = snr_full - profile.implementation_penalty_db;
  r.margin_db = snr_current - snr_full;
  if (r.margin_db == 0.0) r.margin_db = 0.0;
  return r;
}

std::vector<dataset::ProbeRecord> surrogate_measure_all(const SurrogateLinkProfile& profile, unsigned workers) {
  const auto grid = measurement_grid(profile);
  std::vector<dataset::ProbeRecord> out(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t i) { out[i] = surrogate_measure(profile, grid[i]); });
  return out;
}

Recalibration fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("prediction/label count mismatch");
  if (x.size() < 2) throw InvalidArgument("recalibration needs at least 2 points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * n)) {
    throw DegeneratePoints("all calibration predictions are equal");
  }
  Recalibration r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.n_points = x.size();
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = r.apply(x[i]) - y[i];
    ss += e * e;
  }
  r.residual_rms = std::sqrt(ss / n);
  if (!std::isfinite(r.slope)) throw DegeneratePoints("recalibration slope is not finite");
  return r;
}

Recalibration fit_recalibration(const bayes::BayesRidgeModel& model,
                                const std::vector<dataset::ProbeRecord>& calibration) {
  std::vector<double> pred, lab;
  for (const auto& r : calibration) {
    pred.push_back(model.predict_mean(features::raw_features(r)));
    lab.push_back(r.margin_db);
  }
  return fit_line(pred, lab);
}

std::string to_json(const Recalibration& r) {
  nlohmann::ordered_json j;
  j["schema"] = "margin-probe/recalibration";
  j["version"] = 1;
  j["slope"] = r.slope;
  j["intercept_db"] = r.intercept;
  j["n_points"] = r.n_points;
  j["residual_rms_db"] = r.residual_rms;
  return j.dump(1) + "\n";
}

Recalibration recalibration_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("schema") != "margin-probe/recalibration" || j.at("version") != 1) {
      throw FormatError("not a recalibration file");
    }
    Recalibration r;
    r.slope = j.at("slope").get<double>();
    r.intercept = j.at("intercept_db").get<double>();
    r.n_points = j.at("n_points").get<std::size_t>();
    r.residual_rms = j.at("residual_rms_db").get<double>();
    if (!std::isfinite(r.slope) || !std::isfinite(r.intercept)) throw FormatError("non-finite recalibration");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad recalibration JSON: ") + e.what());
  }
}

void save_recalibration(const Recalibration& recal, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << to_json(recal);
}

Recalibration load_recalibration(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return recalibration_from_json(ss.str());
}

double predict_adapted(const bayes::BayesRidgeModel& model, const Recalibration& recal,
                       const features::RawFeatures& raw) {
  return recal.apply(model.predict_mean(raw));
}

std::vector<std::size_t> select_calibration_points(const std::vector<dataset::ProbeRecord>& records, std::size_t k,
                                                   std::uint64_t seed) {
  if (k < 2) throw InvalidArgument("need at least 2 calibration points");
  if (records.size() < k) throw InvalidArgument("fewer records than calibration points");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].fill_fraction < records[b].fill_fraction;
  });
  std::vector<std::size_t> picked;
  picked.reserve(k);
  const double last = static_cast<double>(records.size() - 1);
  for (std::size_t i = 0; i < k; ++i) {
    const auto pos = static_cast<std::size_t>(std::lround(last * static_cast<double>(i) / static_cast<double>(k - 1)));
    picked.push_back(order[pos]);
  }
  return picked;
}

AdaptationReport evaluate_adaptation(const bayes::BayesRidgeModel& model,
                                     const std::vector<dataset::ProbeRecord>& records, std::size_t k,
                                     std::uint64_t seed) {
  AdaptationReport rep;
  rep.calibration_indices = select_calibration_points(records, k, seed);
  std::vector<dataset::ProbeRecord> calib;
  std::vector<char> is_calib(records.size(), 0);
  for (auto i : rep.calibration_indices) {
    calib.push_back(records[i]);
    is_calib[i] = 1;
  }
  rep.recalibration = fit_recalibration(model, calib);
  std::vector<double> raw_err, adapted_err;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (is_calib[i]) continue;
    const double pred = model.predict_mean(features::raw_features(records[i]));
    raw_err.push_back(pred - records[i].margin_db);
    adapted_err.push_back(rep.recalibration.apply(pred) - records[i].margin_db);
  }
  rep.unadapted = error_stats(raw_err);
  rep.adapted = error_stats(adapted_err);
  return rep;
}

}  // namespace margin_probe::adapt
