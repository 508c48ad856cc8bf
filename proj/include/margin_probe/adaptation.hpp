#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "margin_probe/bayes_ridge.hpp"
#include "margin_probe/config.hpp"
#include "margin_probe/dataset.hpp"
#include "margin_probe/features.hpp"
#include "margin_probe/gn_engine.hpp"
#include "margin_probe/link.hpp"

namespace margin_probe::adapt {

/// Stand-in for a measured lab link: the base GN engine with lumped node
/// losses, a tilted amplifier NF, a fixed transceiver penalty on every
/// reported SNR and Gaussian read-out jitter on the probed SNR. Measurements
/// follow the lab campaign grid on the fixed 50 GHz plan.
struct SurrogateLinkProfile {
  LinkTopology topology{2, 50.0, {}};
  double extra_loss_db_per_node = 1.5;
  double nf_tilt_start_db = 1.0;  // at the low band edge
  double nf_tilt_end_db = 0.0;    // at the high band edge
  double implementation_penalty_db = 1.0;
  double jitter_std_db = 0.05;
  std::uint64_t seed = 1;

  double cut_gbd = 35.0;
  std::vector<double> center_freqs_thz{191.625, 192.275, 192.925, 193.625, 194.175, 194.775, 195.375, 195.875};
  std::vector<double> fill_levels{0.01, 0.15, 0.30, 0.45, 0.60, 0.75, 0.90, 1.00};
  std::vector<double> powers_dbm{0.0, -0.6, -1.2, -1.8, -2.4, -3.0};
  int repetitions = 10;

  /// Default perturbations removed, jitter off: reproduces the base engine.
  static SurrogateLinkProfile identity(const LinkTopology& topology);

  gn::LinkImpairments impairments() const;
  void validate() const;
};

/// Overrides from a key = value config. Keys: n_spans, span_length_km, fiber
/// keys, extra_loss_db_per_node, nf_tilt_start_db, nf_tilt_end_db,
/// implementation_penalty_db, jitter_std_db, seed, cut_gbd, repetitions and
/// comma-separated center_freqs_thz / fill_levels / powers_dbm.
SurrogateLinkProfile profile_from_config(const KeyValueConfig& cfg, SurrogateLinkProfile base = {});

struct MeasurementScenario {
  std::size_t index = 0;
  double center_freq_thz = 0.0;
  double fill_target = 0.0;
  double p_ch_dbm = 0.0;
  int repetition = 0;
  std::uint64_t seed = 0;
};

/// Full campaign grid: frequencies x fill levels x powers x repetitions.
std::vector<MeasurementScenario> measurement_grid(const SurrogateLinkProfile& profile);

/// One emulated measurement. The label is the noiseless surrogate margin; the
/// jitter only affects the probed SNR feature.
dataset::ProbeRecord surrogate_measure(const SurrogateLinkProfile& profile, const MeasurementScenario& scenario);

/// Every scenario of the grid, in grid order; worker-count invariant.
std::vector<dataset::ProbeRecord> surrogate_measure_all(const SurrogateLinkProfile& profile, unsigned workers = 1);

/// Affine map from raw model output to the adapted link: slope * pred + intercept.
struct Recalibration {
  double slope = 1.0;
  double intercept = 0.0;
  std::size_t n_points = 0;
  double residual_rms = 0.0;

  double apply(double prediction) const { return slope * prediction + intercept; }
};

/// Least-squares line through (prediction, label) pairs. Throws
/// InvalidArgument for fewer than 2 points and DegeneratePoints when all
/// predictions coincide.
Recalibration fit_line(const std::vector<double>& predictions, const std::vector<double>& labels);

Recalibration fit_recalibration(const bayes::BayesRidgeModel& model,
                                const std::vector<dataset::ProbeRecord>& calibration);

std::string to_json(const Recalibration& recal);
Recalibration recalibration_from_json(const std::string& text);
void save_recalibration(const Recalibration& recal, const std::string& path);
Recalibration load_recalibration(const std::string& path);

double predict_adapted(const bayes::BayesRidgeModel& model, const Recalibration& recal,
                       const features::RawFeatures& raw);

/// Indices of `k` calibration records spread over the fill range: after a
/// seeded shuffle the records are stably sorted by fill fraction and picked at
/// evenly spaced quantiles (minimum, maximum and k - 2 interior ones).
std::vector<std::size_t> select_calibration_points(const std::vector<dataset::ProbeRecord>& records, std::size_t k,
                                                   std::uint64_t seed);

struct ErrorStats {
  double rmse = 0.0;
  double mean = 0.0;
  std::size_t n = 0;
};

struct AdaptationReport {
  Recalibration recalibration;
  std::vector<std::size_t> calibration_indices;
  ErrorStats unadapted;  // held-out records only
  ErrorStats adapted;
};

/// Picks k calibration points, fits the recalibration, and scores both the raw
/// and the adapted model on the remaining records.
AdaptationReport evaluate_adaptation(const bayes::BayesRidgeModel& model,
                                     const std::vector<dataset::ProbeRecord>& records, std::size_t k,
                                     std::uint64_t seed);

}  // namespace margin_probe::adapt
