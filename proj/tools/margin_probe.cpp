// margin-probe: dataset generation, training, evaluation and adaptation of the
// fully loaded margin estimator.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "margin_probe/adaptation.hpp"
#include "margin_probe/analysis.hpp"
#include "margin_probe/bayes_ridge.hpp"
#include "margin_probe/config.hpp"
#include "margin_probe/dataset.hpp"
#include "margin_probe/errors.hpp"
#include "margin_probe/manifest.hpp"

namespace mp = margin_probe;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string config_path;

  mp::KeyValueConfig config() const {
    return config_path.empty() ? mp::KeyValueConfig{} : mp::KeyValueConfig::load(config_path);
  }
};

mp::dataset::GenerationConfig generation_config(const mp::KeyValueConfig& cfg, bool experimental, unsigned workers) {
  mp::dataset::GenerationConfig gc;
  gc.fiber = mp::fiber_from_config(cfg);
  gc.policy = mp::spectrum::policy_from_config(cfg, experimental ? mp::spectrum::experimental_policy()
                                                                 : mp::spectrum::GridPolicy{});
  auto& sp = gc.space;
  sp.min_spans = static_cast<int>(cfg.get_int_or("min_spans", sp.min_spans));
  sp.max_spans = static_cast<int>(cfg.get_int_or("max_spans", sp.max_spans));
  sp.min_span_length_km = cfg.get_double_or("min_span_length_km", sp.min_span_length_km);
  sp.max_span_length_km = cfg.get_double_or("max_span_length_km", sp.max_span_length_km);
  sp.min_cut_gbd = cfg.get_double_or("min_cut_gbd", sp.min_cut_gbd);
  sp.max_cut_gbd = cfg.get_double_or("max_cut_gbd", sp.max_cut_gbd);
  sp.min_psd_anchor_dbm = cfg.get_double_or("min_psd_anchor_dbm", sp.min_psd_anchor_dbm);
  sp.max_psd_anchor_dbm = cfg.get_double_or("max_psd_anchor_dbm", sp.max_psd_anchor_dbm);
  gc.workers = workers;
  return gc;
}

std::vector<mp::dataset::ProbeRecord> pick_split(const std::vector<mp::dataset::ProbeRecord>& rows,
                                                 const std::string& which, std::uint64_t seed) {
  if (which == "all") return rows;
  auto s = mp::dataset::split(rows, seed);
  if (which == "train") return s.train;
  if (which == "validation") return s.validation;
  if (which == "test") return s.test;
  throw mp::InvalidArgument("unknown split '" + which + "' (all|train|validation|test)");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mp::FormatError("cannot write '" + path + "'");
  out << text;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw mp::InvalidArgument("bad list entry '" + item + "'");
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fully loaded system margin estimator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--workers", g.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "key = value config file")->check(CLI::ExistingFile);

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate a GN-model dataset CSV");
  std::size_t rows = 100000;
  std::string gen_out;
  bool experimental = false, resume = false;
  gen->add_option("--rows", rows, "Number of rows")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output CSV")->required();
  gen->add_flag("--experimental-grid", experimental, "Fixed 50 GHz slot plan");
  gen->add_flag("--resume", resume, "Continue a partially written file");

  // train
  auto* train = app.add_subcommand("train", "Fit the Bayesian ridge model on the training split");
  std::string train_data, train_out;
  train->add_option("--data", train_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Model JSON")->required();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "RMSE of a model on a dataset");
  std::string eval_model, eval_data, eval_split = "all";
  eval->add_option("--model", eval_model, "Model JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", eval_split, "all|train|validation|test (split by --seed)")->capture_default_str();

  // predict
  auto* pred = app.add_subcommand("predict", "Predict margins from probe features");
  std::string pred_model, pred_data, pred_out, pred_recal;
  std::optional<double> p_snr, p_pch, p_freq, p_spans, p_fill;
  pred->add_option("--model", pred_model, "Model JSON")->required()->check(CLI::ExistingFile);
  pred->add_option("--recal", pred_recal, "Recalibration JSON")->check(CLI::ExistingFile);
  pred->add_option("--data", pred_data, "Dataset CSV to predict row by row")->check(CLI::ExistingFile);
  pred->add_option("--out", pred_out, "Output CSV (with --data)");
  pred->add_option("--snr", p_snr, "SNR current [dB]");
  pred->add_option("--pch", p_pch, "Launch power [dBm]");
  pred->add_option("--freq", p_freq, "Center frequency [THz]");
  pred->add_option("--spans", p_spans, "Number of spans");
  pred->add_option("--fill", p_fill, "Fill fraction");

  // sweep-granularity
  auto* gran = app.add_subcommand("sweep-granularity", "RMSE vs fill-feature granularity");
  std::string gran_model, gran_data, gran_out, gran_list = "0,0.05,0.1,0.2,0.25,0.5", gran_round = "nearest",
                                              gran_eval = "test";
  gran->add_option("--model", gran_model, "Model JSON")->required()->check(CLI::ExistingFile);
  gran->add_option("--data", gran_data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  gran->add_option("--granularities", gran_list, "Comma-separated fill steps")->capture_default_str();
  gran->add_option("--rounding", gran_round, "nearest|floor|ceil")->capture_default_str();
  gran->add_option("--eval", gran_eval, "Split scored: validation|test")->capture_default_str();
  gran->add_option("--out", gran_out, "Output CSV")->required();

  // surrogate-measure
  auto* sur = app.add_subcommand("surrogate-measure", "Emulated lab measurements on the surrogate link");
  std::string sur_profile, sur_out;
  sur->add_option("--profile", sur_profile, "Profile config")->check(CLI::ExistingFile);
  sur->add_option("--out", sur_out, "Output CSV")->required();

  // adapt
  auto* adp = app.add_subcommand("adapt", "Few-shot affine recalibration");
  std::string adp_model, adp_meas, adp_out;
  std::size_t adp_k = 5;
  adp->add_option("--model", adp_model, "Model JSON")->required()->check(CLI::ExistingFile);
  adp->add_option("--measurements", adp_meas, "Surrogate CSV")->required()->check(CLI::ExistingFile);
  adp->add_option("--k", adp_k, "Calibration points")->capture_default_str()->check(CLI::Range(2, 1000000));
  adp->add_option("--out", adp_out, "Recalibration JSON")->required();

  // report
  auto* rep = app.add_subcommand("report", "Analysis tables (CSV + JSON summary)");
  std::string rep_kind, rep_model, rep_data, rep_recal, rep_out, rep_split = "test", rep_round = "nearest";
  double rep_bin = 0.05;
  std::optional<std::size_t> rep_samples;
  bool rep_per_sample = false;
  std::optional<double> rep_center, rep_fill;
  rep->add_option("--kind", rep_kind, "hist|freq|fill|granularity|power")
      ->required()
      ->check(CLI::IsMember({"hist", "freq", "fill", "granularity", "power"}));
  rep->add_option("--model", rep_model, "Model JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--data", rep_data, "Dataset or surrogate CSV")->check(CLI::ExistingFile);
  rep->add_option("--recal", rep_recal, "Recalibration JSON")->check(CLI::ExistingFile);
  rep->add_option("--split", rep_split, "Split for hist/granularity")->capture_default_str();
  rep->add_option("--bin-width", rep_bin, "Histogram bin width [dB]")->capture_default_str();
  rep->add_option("--samples", rep_samples, "Samples per sweep point (freq 20000, fill 2000)");
  rep->add_flag("--per-sample-normalization", rep_per_sample, "freq: normalize each sample by its own anchor margin");
  rep->add_option("--rounding", rep_round, "Granularity rounding")->capture_default_str();
  rep->add_option("--center", rep_center, "Power sweep: CUT center [THz]");
  rep->add_option("--fill", rep_fill, "Power sweep: fill fraction");
  rep->add_option("--out", rep_out, "Output prefix (writes PREFIX.csv, PREFIX.json)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    const auto cfg = g.config();

    if (*gen) {
      const auto gc = generation_config(cfg, experimental, g.workers);
      const auto summary = mp::dataset::generate_to_file(gen_out, rows, g.seed, gc, resume);
      mp::Manifest m("gen-dataset");
      m.param("rows", static_cast<long long>(rows)).param("experimental_grid", experimental);
      for (const auto& [k, v] : cfg.entries()) m.param("config." + k, v);
      m.seed("master", g.seed).output(gen_out).output(gen_out + ".errors.csv");
      m.write(mp::Manifest::path_for(gen_out));
      std::cout << json{{"rows_written", summary.rows_written},
                        {"rows_resumed", summary.rows_resumed},
                        {"rows_failed", summary.rows_failed}}
                       .dump()
                << "\n";
    } else if (*train) {
      const auto data = mp::dataset::read_csv_file(train_data);
      const auto s = mp::dataset::split(data, g.seed);
      const auto model = mp::bayes::train(s.train, g.seed);
      mp::bayes::save_model(model, train_out);
      mp::Manifest m("train");
      m.param("train_rows", static_cast<long long>(s.train.size())).seed("split", g.seed);
      m.input(train_data).output(train_out);
      m.write(mp::Manifest::path_for(train_out));
      std::cout << json{{"train_rows", s.train.size()},
                        {"iterations", model.posterior.iterations},
                        {"converged", model.posterior.converged},
                        {"train_rmse_db", mp::bayes::rmse(model, s.train)},
                        {"validation_rmse_db", mp::bayes::rmse(model, s.validation)},
                        {"test_rmse_db", mp::bayes::rmse(model, s.test)}}
                       .dump()
                << "\n";
    } else if (*eval) {
      const auto model = mp::bayes::load_model(eval_model);
      const auto data = pick_split(mp::dataset::read_csv_file(eval_data), eval_split, g.seed);
      std::cout << json{{"split", eval_split}, {"n", data.size()}, {"rmse_db", mp::bayes::rmse(model, data)}}.dump()
                << "\n";
    } else if (*pred) {
      const auto model = mp::bayes::load_model(pred_model);
      const auto recal = pred_recal.empty() ? mp::adapt::Recalibration{} : mp::adapt::load_recalibration(pred_recal);
      if (!pred_data.empty()) {
        if (pred_out.empty()) throw CLI::RequiredError("--out");
        const auto data = mp::dataset::read_csv_file(pred_data);
        std::ofstream out(pred_out, std::ios::binary | std::ios::trunc);
        if (!out) throw mp::FormatError("cannot write '" + pred_out + "'");
        out << "seed,predicted_margin_db,stddev_db,margin_db\n";
        for (const auto& r : data) {
          const auto p = model.predict(mp::features::raw_features(r));
          out << r.seed << ',' << fmt(recal.apply(p.mean)) << ',' << fmt(std::abs(recal.slope) * p.stddev) << ','
              << fmt(r.margin_db) << '\n';
        }
        out.close();
        mp::Manifest m("predict");
        m.input(pred_model).input(pred_data).output(pred_out);
        if (!pred_recal.empty()) m.input(pred_recal);
        m.write(mp::Manifest::path_for(pred_out));
      } else {
        if (!p_snr || !p_pch || !p_freq || !p_spans || !p_fill) {
          throw CLI::RequiredError("--snr, --pch, --freq, --spans and --fill (or --data)");
        }
        const auto p = model.predict({*p_snr, *p_pch, *p_freq, *p_spans, *p_fill});
        std::cout << json{{"margin_db", recal.apply(p.mean)}, {"stddev_db", std::abs(recal.slope) * p.stddev}}.dump()
                  << "\n";
      }
    } else if (*gran) {
      const auto model = mp::bayes::load_model(gran_model);
      const auto s = mp::dataset::split(mp::dataset::read_csv_file(gran_data), g.seed);
      if (gran_eval != "validation" && gran_eval != "test") throw mp::InvalidArgument("--eval must be validation|test");
      const auto rows_g = mp::analysis::granularity_sweep(model, s.train, gran_eval == "test" ? s.test : s.validation,
                                                          parse_list(gran_list),
                                                          mp::analysis::rounding_from_string(gran_round), g.seed);
      std::ostringstream csv;
      mp::analysis::write_granularity_csv(csv, rows_g);
      write_text(gran_out, csv.str());
      mp::Manifest m("sweep-granularity");
      m.param("granularities", gran_list).param("rounding", gran_round).param("eval", gran_eval);
      m.seed("split", g.seed).input(gran_model).input(gran_data).output(gran_out);
      m.write(mp::Manifest::path_for(gran_out));
      std::cout << mp::analysis::granularity_summary_json(rows_g);
    } else if (*sur) {
      auto base = mp::adapt::SurrogateLinkProfile{};
      base.seed = g.seed;
      const auto profile =
          sur_profile.empty() ? base : mp::adapt::profile_from_config(mp::KeyValueConfig::load(sur_profile), base);
      const auto records = mp::adapt::surrogate_measure_all(profile, g.workers);
      mp::dataset::write_csv_file(sur_out, records);
      mp::Manifest m("surrogate-measure");
      m.param("records", static_cast<long long>(records.size())).seed("profile", profile.seed);
      if (!sur_profile.empty()) m.input(sur_profile);
      m.output(sur_out).write(mp::Manifest::path_for(sur_out));
      std::cout << json{{"records", records.size()}}.dump() << "\n";
    } else if (*adp) {
      const auto model = mp::bayes::load_model(adp_model);
      const auto meas = mp::dataset::read_csv_file(adp_meas);
      const auto r = mp::adapt::evaluate_adaptation(model, meas, adp_k, g.seed);
      mp::adapt::save_recalibration(r.recalibration, adp_out);
      mp::Manifest m("adapt");
      m.param("k", static_cast<long long>(adp_k)).seed("calibration", g.seed);
      m.input(adp_model).input(adp_meas).output(adp_out).write(mp::Manifest::path_for(adp_out));
      std::cout << json{{"slope", r.recalibration.slope},
                        {"intercept_db", r.recalibration.intercept},
                        {"holdout_n", r.adapted.n},
                        {"unadapted_rmse_db", r.unadapted.rmse},
                        {"adapted_rmse_db", r.adapted.rmse},
                        {"adapted_mean_error_db", r.adapted.mean}}
                       .dump()
                << "\n";
    } else if (*rep) {
      const auto model = mp::bayes::load_model(rep_model);
      const auto need_data = [&] {
        if (rep_data.empty()) throw CLI::RequiredError("--data");
        return mp::dataset::read_csv_file(rep_data);
      };
      std::ostringstream csv;
      std::string summary;
      mp::Manifest m("report");
      m.param("kind", rep_kind).seed("master", g.seed).input(rep_model);
      for (const auto& [k, v] : cfg.entries()) m.param("config." + k, v);
      if (rep_kind == "hist") {
        const auto data = pick_split(need_data(), rep_split, g.seed);
        std::optional<mp::adapt::Recalibration> recal;
        if (!rep_recal.empty()) recal = mp::adapt::load_recalibration(rep_recal);
        const auto h = mp::analysis::error_histogram(model, data, rep_bin, recal ? &*recal : nullptr);
        mp::analysis::write_histogram_csv(csv, h);
        summary = mp::analysis::histogram_summary_json(h);
        m.param("split", rep_split).param("bin_width_db", rep_bin);
      } else if (rep_kind == "freq" || rep_kind == "fill") {
        const auto gc = generation_config(cfg, false, g.workers);
        mp::analysis::SweepResult sw;
        if (rep_kind == "freq") {
          mp::analysis::FrequencySweepOptions o;
          if (rep_samples) o.n_samples = *rep_samples;
          o.seed = g.seed;
          o.per_sample_normalization = rep_per_sample;
          m.param("samples", static_cast<long long>(o.n_samples)).param("per_sample_normalization", rep_per_sample);
          sw = mp::analysis::frequency_sweep(model, gc, o, g.workers);
        } else {
          mp::analysis::FillSweepOptions o;
          if (rep_samples) o.n_samples = *rep_samples;
          o.seed = g.seed;
          m.param("samples", static_cast<long long>(o.n_samples));
          sw = mp::analysis::fill_sweep(model, gc, o, g.workers);
        }
        mp::analysis::write_sweep_csv(csv, sw);
        summary = mp::analysis::sweep_summary_json(sw);
      } else if (rep_kind == "granularity") {
        const auto s = mp::dataset::split(need_data(), g.seed);
        const auto rows_g = mp::analysis::granularity_sweep(
            model, s.train, rep_split == "test" ? s.test : s.validation, {0.0, 0.05, 0.1, 0.2, 0.25, 0.5},
            mp::analysis::rounding_from_string(rep_round), g.seed);
        mp::analysis::write_granularity_csv(csv, rows_g);
        summary = mp::analysis::granularity_summary_json(rows_g);
        m.param("rounding", rep_round).param("split", rep_split == "test" ? "test" : "validation");
      } else {
        if (rep_recal.empty()) throw CLI::RequiredError("--recal");
        const auto recal = mp::adapt::load_recalibration(rep_recal);
        mp::analysis::PowerSweepOptions o;
        o.center_freq_thz = rep_center;
        o.fill_target = rep_fill;
        const auto sw = mp::analysis::power_sweep(model, recal, need_data(), o);
        mp::analysis::write_sweep_csv(csv, sw);
        summary = mp::analysis::sweep_summary_json(sw);
        m.input(rep_recal);
        if (rep_center) m.param("center_thz", *rep_center);
        if (rep_fill) m.param("fill", *rep_fill);
      }
      if (!rep_data.empty()) m.input(rep_data);
      write_text(rep_out + ".csv", csv.str());
      write_text(rep_out + ".json", summary);
      m.output(rep_out + ".csv").output(rep_out + ".json").write(mp::Manifest::path_for(rep_out));
      std::cout << summary;
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", {{"kind", "UsageError"}, {"message", std::string(e.what()) + " required"}}}}.dump()
              << "\n";
    return 2;
  } catch (const mp::Error& e) {
    std::cerr << json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"kind", "Error"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
