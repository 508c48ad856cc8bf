#include "margin_probe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "margin_probe/errors.hpp"
#include "margin_probe/features.hpp"
#include "margin_probe/parallel.hpp"
#include "margin_probe/rng.hpp"

namespace margin_probe::analysis {
namespace {

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Rounded so the JSON text does not depend on last-bit noise in the printer.
double json_num(double v) { return std::isfinite(v) ? std::round(v * 1e9) / 1e9 : 0.0; }

void fill_point(SweepPoint& p, const std::vector<double>& gn, const std::vector<double>& ml) {
  const auto g = mean_std(gn);
  const auto m = mean_std(ml);
  p.n = g.n;
  p.gn_mean = g.mean;
  p.gn_std = g.stddev;
  p.ml_mean = m.mean;
  p.ml_std = m.stddev;
}

void add_curve_metrics(SweepResult& r) {
  double max_gap = 0.0;
  for (const auto& p : r.points) max_gap = std::max(max_gap, std::abs(p.ml_mean - p.gn_mean));
  r.metrics["max_abs_mean_gap"] = max_gap;
}

}  // namespace

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  const auto n = static_cast<double>(values.size());
  out.mean = pairwise_sum(values.data(), values.size()) / n;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - out.mean) * (values[i] - out.mean);
  out.stddev = std::sqrt(pairwise_sum(sq.data(), sq.size()) / n);
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson needs two equal series of length >= 2");
  const auto mx = mean_std(x), my = mean_std(y);
  if (mx.stddev == 0.0 || my.stddev == 0.0) return 0.0;
  std::vector<double> prod(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) prod[i] = (x[i] - mx.mean) * (y[i] - my.mean);
  return pairwise_sum(prod.data(), prod.size()) / static_cast<double>(x.size()) / (mx.stddev * my.stddev);
}

ErrorHistogram error_histogram(std::span<const double> predictions, std::span<const double> labels,
                               double bin_width) {
  if (predictions.size() != labels.size()) throw InvalidArgument("prediction/label count mismatch");
  if (predictions.empty()) throw InvalidArgument("histogram needs at least one row");
  if (!(bin_width > 0.0)) throw InvalidArgument("bin width must be > 0");
  std::vector<double> err(predictions.size()), sq(predictions.size());
  for (std::size_t i = 0; i < err.size(); ++i) {
    err[i] = predictions[i] - labels[i];
    sq[i] = err[i] * err[i];
  }
  ErrorHistogram h;
  h.bin_width = bin_width;
  const auto ms = mean_std(err);
  h.mean = ms.mean;
  h.stddev = ms.stddev;
  h.n = err.size();
  h.rmse = std::sqrt(pairwise_sum(sq.data(), sq.size()) / static_cast<double>(h.n));

  auto bin_of = [&](double e) { return static_cast<long long>(std::floor(e / bin_width + 0.5)); };
  long long lo = bin_of(err[0]), hi = lo;
  for (double e : err) {
    lo = std::min(lo, bin_of(e));
    hi = std::max(hi, bin_of(e));
  }
  for (long long k = lo; k <= hi; ++k) {
    h.bins.push_back({(static_cast<double>(k) - 0.5) * bin_width, (static_cast<double>(k) + 0.5) * bin_width, 0});
  }
  for (double e : err) ++h.bins[static_cast<std::size_t>(bin_of(e) - lo)].count;
  return h;
}

ErrorHistogram error_histogram(const bayes::BayesRidgeModel& model, const std::vector<dataset::ProbeRecord>& rows,
                               double bin_width, const adapt::Recalibration* recal) {
  std::vector<double> pred, lab;
  for (const auto& r : rows) {
    const double p = model.predict_mean(features::raw_features(r));
    pred.push_back(recal ? recal->apply(p) : p);
    lab.push_back(r.margin_db);
  }
  return error_histogram(pred, lab, bin_width);
}

SweepResult frequency_sweep(const bayes::BayesRidgeModel& model, const dataset::GenerationConfig& config,
                            const FrequencySweepOptions& opt, unsigned workers) {
  if (opt.freqs_thz.empty() || opt.n_samples == 0) throw InvalidArgument("empty frequency sweep");
  const auto anchor_it = std::find(opt.freqs_thz.begin(), opt.freqs_thz.end(), opt.anchor_thz);
  const bool anchor_on_grid = anchor_it != opt.freqs_thz.end();
  const std::size_t nf = opt.freqs_thz.size();
  std::vector<std::vector<double>> gn(nf, std::vector<double>(opt.n_samples));
  std::vector<std::vector<double>> ml = gn;

  std::vector<double> anchor(opt.n_samples);

  parallel_for(opt.n_samples, workers, [&](std::size_t s) {
    auto sc = dataset::sample_scenario(derive_seed(opt.seed, s), config);
    sc.fill_target = opt.fill;
    auto at = [&](double f) {
      auto c = sc;
      c.center_freq_thz = f;
      return dataset::generate_row(c, config);
    };
    anchor[s] = at(opt.anchor_thz).margin_db;
    for (std::size_t j = 0; j < nf; ++j) {
      const auto r = at(opt.freqs_thz[j]);
      gn[j][s] = r.margin_db;
      ml[j][s] = model.predict_mean(features::raw_features(r));
    }
  });

  const double pooled = mean_std(anchor).mean;
  for (std::size_t s = 0; s < opt.n_samples; ++s) {
    const double norm = opt.per_sample_normalization ? anchor[s] : pooled;
    if (!(norm > 0.0)) throw InvalidArgument("zero GN margin at the normalization anchor");
    for (std::size_t j = 0; j < nf; ++j) {
      gn[j][s] /= norm;
      ml[j][s] /= norm;
    }
  }

  SweepResult out;
  out.variable = "center_freq_thz";
  std::vector<double> ml_curve;
  for (std::size_t j = 0; j < nf; ++j) {
    SweepPoint p;
    p.value = opt.freqs_thz[j];
    fill_point(p, gn[j], ml[j]);
    out.points.push_back(p);
    ml_curve.push_back(p.ml_mean);
  }
  add_curve_metrics(out);
  const auto peak = std::max_element(ml_curve.begin(), ml_curve.end()) - ml_curve.begin();
  out.metrics["ml_peak_thz"] = opt.freqs_thz[static_cast<std::size_t>(peak)];
  out.metrics["ml_unimodal"] = is_unimodal(ml_curve) ? 1.0 : 0.0;
  std::vector<double> step_tol(nf, 0.0), step(opt.n_samples);
  for (std::size_t j = 1; j < nf; ++j) {
    for (std::size_t s = 0; s < opt.n_samples; ++s) step[s] = ml[j][s] - ml[j - 1][s];
    step_tol[j] = 2.0 * mean_std(step).stddev / std::sqrt(static_cast<double>(opt.n_samples));
  }
  out.metrics["ml_unimodal_2se"] = is_unimodal(ml_curve, step_tol) ? 1.0 : 0.0;
  out.metrics["anchor_thz"] = opt.anchor_thz;
  if (anchor_on_grid) {
    out.metrics["gn_at_anchor"] = out.points[static_cast<std::size_t>(anchor_it - opt.freqs_thz.begin())].gn_mean;
  }
  return out;
}

SweepResult fill_sweep(const bayes::BayesRidgeModel& model, const dataset::GenerationConfig& config,
                       const FillSweepOptions& opt, unsigned workers) {
  if (opt.fills.size() < 2 || opt.n_samples == 0) throw InvalidArgument("fill sweep needs >= 2 levels");
  const std::size_t nl = opt.fills.size();
  std::vector<std::vector<double>> gn(nl, std::vector<double>(opt.n_samples));
  std::vector<std::vector<double>> ml = gn;

  parallel_for(opt.n_samples, workers, [&](std::size_t s) {
    auto sc = dataset::sample_scenario(derive_seed(opt.seed, s), config);
    for (std::size_t j = 0; j < nl; ++j) {
      sc.fill_target = opt.fills[j];
      const auto r = dataset::generate_row(sc, config);
      gn[j][s] = r.margin_db;
      ml[j][s] = model.predict_mean(features::raw_features(r));
    }
  });

  SweepResult out;
  out.variable = "fill_target";
  std::vector<double> gn_curve, ml_curve;
  for (std::size_t j = 0; j < nl; ++j) {
    SweepPoint p;
    p.value = opt.fills[j];
    fill_point(p, gn[j], ml[j]);
    out.points.push_back(p);
    gn_curve.push_back(p.gn_mean);
    ml_curve.push_back(p.ml_mean);
  }
  add_curve_metrics(out);
  out.metrics["pearson_ml"] = pearson(opt.fills, ml_curve);
  out.metrics["pearson_gn"] = pearson(opt.fills, gn_curve);
  return out;
}

Rounding rounding_from_string(const std::string& s) {
  if (s == "nearest") return Rounding::kNearest;
  if (s == "floor") return Rounding::kFloor;
  if (s == "ceil") return Rounding::kCeil;
  throw InvalidArgument("unknown rounding '" + s + "' (nearest|floor|ceil)");
}

std::string to_string(Rounding r) {
  switch (r) {
    case Rounding::kNearest: return "nearest";
    case Rounding::kFloor: return "floor";
    case Rounding::kCeil: return "ceil";
  }
  return "nearest";
}

double quantize_fill(double fill, double g, Rounding rounding) {
  if (g < 0.0) throw InvalidArgument("granularity must be >= 0");
  if (g == 0.0) return fill;
  const double q = fill / g;
  // Tolerance keeps exact multiples (0.6 / 0.2 = 2.9999...) on their own step.
  double k;
  switch (rounding) {
    case Rounding::kFloor: k = std::floor(q + 1e-9); break;
    case Rounding::kCeil: k = std::ceil(q - 1e-9); break;
    default: k = std::round(q); break;
  }
  return k * g;
}

std::vector<GranularityRow> granularity_sweep(const bayes::BayesRidgeModel& model,
                                              const std::vector<dataset::ProbeRecord>& train_rows,
                                              const std::vector<dataset::ProbeRecord>& eval_rows,
                                              const std::vector<double>& granularities, Rounding rounding,
                                              std::uint64_t seed, const bayes::FitOptions& fit) {
  if (eval_rows.empty()) throw InvalidArgument("no evaluation rows");
  auto quantized = [&](std::vector<dataset::ProbeRecord> rows, double g) {
    for (auto& r : rows) r.fill_fraction = quantize_fill(r.fill_fraction, g, rounding);
    return rows;
  };
  std::vector<GranularityRow> out;
  for (double g : granularities) {
    const auto eval_q = quantized(eval_rows, g);
    GranularityRow row;
    row.granularity = g;
    row.rmse_original = bayes::rmse(model, eval_q);
    if (g == 0.0) {
      row.rmse_retrained = row.rmse_original;
    } else {
      const auto retrained = bayes::train(quantized(train_rows, g), seed, fit, model.monomials.max_degree());
      row.rmse_retrained = bayes::rmse(retrained, eval_q);
    }
    out.push_back(row);
  }
  return out;
}

SweepResult power_sweep(const bayes::BayesRidgeModel& model, const adapt::Recalibration& recal,
                        const std::vector<dataset::ProbeRecord>& records, const PowerSweepOptions& opt) {
  std::map<double, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& r : records) {
    if (opt.center_freq_thz && std::abs(r.center_freq_thz - *opt.center_freq_thz) > 1e-9) continue;
    if (opt.fill_target && std::abs(r.fill_fraction - *opt.fill_target) > opt.fill_tolerance) continue;
    auto& g = groups[r.p_ch_dbm];
    g.first.push_back(r.margin_db);
    g.second.push_back(adapt::predict_adapted(model, recal, features::raw_features(r)));
  }
  if (groups.empty()) throw InvalidArgument("no records match the power sweep filter");
  SweepResult out;
  out.variable = "p_ch_dbm";
  bool monotone = true;
  std::size_t min_count = records.size();
  for (const auto& [p, g] : groups) {
    SweepPoint pt;
    pt.value = p;
    fill_point(pt, g.first, g.second);
    if (!out.points.empty() && pt.ml_mean < out.points.back().ml_mean) monotone = false;
    min_count = std::min(min_count, pt.n);
    out.points.push_back(pt);
  }
  add_curve_metrics(out);
  out.metrics["ml_non_decreasing"] = monotone ? 1.0 : 0.0;
  out.metrics["min_count"] = static_cast<double>(min_count);
  return out;
}

bool is_unimodal(std::span<const double> v, std::span<const double> tol) {
  if (v.empty()) return false;
  if (!tol.empty() && tol.size() != v.size()) throw InvalidArgument("tolerance size mismatch");
  auto t = [&](std::size_t i) { return tol.empty() ? 0.0 : tol[i]; };
  const auto peak = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  for (std::size_t i = 1; i <= peak; ++i) {
    if (v[i] < v[i - 1] - t(i)) return false;
  }
  for (std::size_t i = peak + 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] + t(i)) return false;
  }
  return true;
}

void write_sweep_csv(std::ostream& out, const SweepResult& s) {
  out << s.variable << ",n,gn_mean,gn_std,ml_mean,ml_std\n";
  for (const auto& p : s.points) {
    out << fmt(p.value) << ',' << p.n << ',' << fmt(p.gn_mean) << ',' << fmt(p.gn_std) << ',' << fmt(p.ml_mean)
        << ',' << fmt(p.ml_std) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const ErrorHistogram& h) {
  out << "lower_db,upper_db,count\n";
  for (const auto& b : h.bins) out << fmt(b.lower) << ',' << fmt(b.upper) << ',' << b.count << '\n';
}

void write_granularity_csv(std::ostream& out, const std::vector<GranularityRow>& rows) {
  out << "granularity,rmse_original_db,rmse_retrained_db\n";
  for (const auto& r : rows) out << fmt(r.granularity) << ',' << fmt(r.rmse_original) << ',' << fmt(r.rmse_retrained) << '\n';
}

std::string sweep_summary_json(const SweepResult& s) {
  nlohmann::ordered_json j;
  j["variable"] = s.variable;
  for (const auto& [k, v] : s.metrics) j["metrics"][k] = json_num(v);
  return j.dump(1) + "\n";
}

std::string histogram_summary_json(const ErrorHistogram& h) {
  nlohmann::ordered_json j;
  j["n"] = h.n;
  j["bin_width_db"] = json_num(h.bin_width);
  j["mean_db"] = json_num(h.mean);
  j["std_db"] = json_num(h.stddev);
  j["rmse_db"] = json_num(h.rmse);
  return j.dump(1) + "\n";
}

std::string granularity_summary_json(const std::vector<GranularityRow>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j.push_back({{"granularity", json_num(r.granularity)},
                 {"rmse_original_db", json_num(r.rmse_original)},
                 {"rmse_retrained_db", json_num(r.rmse_retrained)}});
  }
  return j.dump(1) + "\n";
}

}  // namespace margin_probe::analysis
