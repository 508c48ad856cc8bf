#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "margin_probe/adaptation.hpp"
#include "margin_probe/bayes_ridge.hpp"
#include "margin_probe/dataset.hpp"

namespace margin_probe::analysis {

/// Mean and population std from a pairwise sum; the result depends only on the
/// order of `values`, which callers keep fixed by index.
struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};
MeanStd mean_std(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

struct HistogramBin {
  double lower = 0.0;  // inclusive
  double upper = 0.0;  // exclusive
  std::size_t count = 0;
};

struct ErrorHistogram {
  double bin_width = 0.0;
  std::vector<HistogramBin> bins;  // contiguous, ascending
  double mean = 0.0;
  double stddev = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
};

/// Histogram of prediction - label. Bin k covers [(k - 1/2) w, (k + 1/2) w).
ErrorHistogram error_histogram(std::span<const double> predictions, std::span<const double> labels,
                               double bin_width);
ErrorHistogram error_histogram(const bayes::BayesRidgeModel& model, const std::vector<dataset::ProbeRecord>& rows,
                               double bin_width, const adapt::Recalibration* recal = nullptr);

struct SweepPoint {
  double value = 0.0;
  std::size_t n = 0;
  double gn_mean = 0.0;
  double gn_std = 0.0;
  double ml_mean = 0.0;
  double ml_std = 0.0;
};

struct SweepResult {
  std::string variable;
  std::vector<SweepPoint> points;
  std::map<std::string, double> metrics;
};

struct FrequencySweepOptions {
  double fill = 0.30;
  std::vector<double> freqs_thz{191.9, 192.2, 192.5, 192.8, 193.1, 193.4, 193.7,
                                194.0, 194.3, 194.6, 194.9, 195.2, 195.5};
  double anchor_thz = 193.7;
  std::size_t n_samples = 20000;  // topologies x realizations
  std::uint64_t seed = 7;
  /// Divide each sample by its own GN margin at the anchor instead of by the
  /// sample mean of those margins. The mean of ratios is pinned to 1 at the
  /// anchor but biased upward elsewhere, which carves a notch into the curve.
  bool per_sample_normalization = false;
};

/// Margins vs CUT center at a fixed fill. Each sample draws a topology, CUT
/// rate, power and spectrum seeds once and reuses them at every frequency.
/// Both curves are divided by the GN margin at the anchor frequency. Metric
/// `ml_unimodal` is the strict shape check; `ml_unimodal_2se` forgives steps
/// within two standard errors of the paired per-sample step.
SweepResult frequency_sweep(const bayes::BayesRidgeModel& model, const dataset::GenerationConfig& config,
                            const FrequencySweepOptions& options, unsigned workers = 1);

struct FillSweepOptions {
  std::vector<double> fills{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t n_samples = 2000;
  std::uint64_t seed = 11;
};

/// Margins vs fill target over random topologies, frequencies and
/// realizations. Metric `pearson_ml` / `pearson_gn` correlate the mean curves
/// with the fill grid.
SweepResult fill_sweep(const bayes::BayesRidgeModel& model, const dataset::GenerationConfig& config,
                       const FillSweepOptions& options, unsigned workers = 1);

enum class Rounding { kNearest, kFloor, kCeil };
Rounding rounding_from_string(const std::string& s);
std::string to_string(Rounding r);

/// Fill fraction snapped to a multiple of `granularity`; 0 leaves it unchanged.
double quantize_fill(double fill, double granularity, Rounding rounding);

struct GranularityRow {
  double granularity = 0.0;
  double rmse_original = 0.0;
  double rmse_retrained = 0.0;
};

/// For each granularity: the base model on quantized evaluation rows, and a
/// model retrained on quantized training rows scored on the same rows.
std::vector<GranularityRow> granularity_sweep(const bayes::BayesRidgeModel& model,
                                              const std::vector<dataset::ProbeRecord>& train_rows,
                                              const std::vector<dataset::ProbeRecord>& eval_rows,
                                              const std::vector<double>& granularities, Rounding rounding,
                                              std::uint64_t seed, const bayes::FitOptions& fit = {});

struct PowerSweepOptions {
  std::optional<double> center_freq_thz;
  std::optional<double> fill_target;
  double fill_tolerance = 0.02;
};

/// Measured and adapted-model margin vs launch power on surrogate records.
/// Here `gn_*` holds the measured labels.
SweepResult power_sweep(const bayes::BayesRidgeModel& model, const adapt::Recalibration& recal,
                        const std::vector<dataset::ProbeRecord>& records, const PowerSweepOptions& options = {});

/// True when the sequence rises (weakly) to its maximum and falls (weakly) after.
/// A step against that shape is tolerated when it is no larger than
/// `step_tolerance[i]` (the step from i - 1 to i); pass an empty span for a
/// strict check.
bool is_unimodal(std::span<const double> values, std::span<const double> step_tolerance = {});

void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_histogram_csv(std::ostream& out, const ErrorHistogram& hist);
void write_granularity_csv(std::ostream& out, const std::vector<GranularityRow>& rows);

std::string sweep_summary_json(const SweepResult& sweep);
std::string histogram_summary_json(const ErrorHistogram& hist);
std::string granularity_summary_json(const std::vector<GranularityRow>& rows);

}  // namespace margin_probe::analysis
