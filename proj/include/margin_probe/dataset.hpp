#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "margin_probe/channel_plan.hpp"
#include "margin_probe/link.hpp"
#include "margin_probe/spectrum.hpp"

namespace margin_probe::dataset {

/// One dataset row: the five probe features, the margin label and enough
/// metadata to replay the row from its seed.
struct ProbeRecord {
  std::uint64_t seed = 0;
  int n_spans = 0;
  double span_length_km = 0.0;
  double cut_gbd = 0.0;
  ModulationFormat modulation = ModulationFormat::k16Qam;
  double center_freq_thz = 0.0;
  double p_ch_dbm = 0.0;
  double fill_fraction = 0.0;
  double snr_current_db = 0.0;
  double snr_full_db = 0.0;
  double margin_db = 0.0;
};

/// One draw from the simulation parameter space.
struct Scenario {
  std::uint64_t seed = 0;
  int n_spans = 2;
  double span_length_km = 80.0;
  double cut_gbd = 35.0;
  double psd_anchor_dbm = 0.0;
  double center_freq_thz = 193.7;
  double fill_target = 1.0;
  ModulationFormat modulation = ModulationFormat::k16Qam;
};

/// Parameter-space bounds. Defaults are the long-haul training ranges.
struct ParameterSpace {
  int min_spans = 2;
  int max_spans = 30;
  double min_span_length_km = 60.0;
  double max_span_length_km = 120.0;
  double min_cut_gbd = 35.0;
  double max_cut_gbd = 69.0;
  double min_psd_anchor_dbm = -3.0;
  double max_psd_anchor_dbm = 0.0;
};

struct GenerationConfig {
  ParameterSpace space{};
  spectrum::GridPolicy policy{};  // psd_anchor_dbm is overridden per scenario
  FiberParams fiber{};
  unsigned workers = 1;
};

/// Seed of row `index` under `master_seed`; the row is a pure function of it.
std::uint64_t row_seed(std::uint64_t master_seed, std::uint64_t index);

/// Scenario drawn from a per-row seed. CUT centers lie on the policy's
/// granularity grid (slot centers in fixed-slot mode); fill targets are uniform
/// on (cut-only fraction, 1].
Scenario sample_scenario(std::uint64_t seed, const GenerationConfig& config);

std::vector<Scenario> sample_parameter_space(std::size_t n_rows, std::uint64_t master_seed,
                                             const GenerationConfig& config);

/// Runs the GN engine on one scenario: full plan, partial load, both SNRs.
ProbeRecord generate_row(const Scenario& scenario, const GenerationConfig& config);

/// Replays a row from its recorded seed.
ProbeRecord replay_row(std::uint64_t seed, const GenerationConfig& config);

struct RowError {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string kind;
  std::string message;
};

struct GenerationResult {
  std::vector<ProbeRecord> records;  // in row-index order, failed rows omitted
  std::vector<RowError> errors;
};

/// Generates rows [first_index, first_index + n_rows) in parallel; output is
/// independent of the worker count.
GenerationResult generate(std::size_t n_rows, std::uint64_t master_seed, const GenerationConfig& config,
                          std::size_t first_index = 0);

struct FileGenerationSummary {
  std::size_t rows_written = 0;
  std::size_t rows_resumed = 0;
  std::size_t rows_failed = 0;
};

/// Writes the dataset CSV to `path` in blocks, flushing after each. With
/// `resume`, rows already present in a previous partial file are kept and
/// generation continues after the last complete row. Failed rows go to
/// `<path>.errors.csv`.
FileGenerationSummary generate_to_file(const std::string& path, std::size_t n_rows, std::uint64_t master_seed,
                                       const GenerationConfig& config, bool resume,
                                       const std::function<void(std::size_t, std::size_t)>& progress = {});

inline constexpr const char* kCsvHeader =
    "seed,n_spans,span_length_km,cut_gbd,modulation,center_freq_thz,p_ch_dbm,fill_fraction,"
    "snr_current_db,snr_full_db,margin_db";

std::string format_csv_row(const ProbeRecord& r);
void write_csv(std::ostream& out, const std::vector<ProbeRecord>& records);
void write_csv_file(const std::string& path, const std::vector<ProbeRecord>& records);
std::vector<ProbeRecord> read_csv(std::istream& in);
std::vector<ProbeRecord> read_csv_file(const std::string& path);

struct DatasetSplit {
  std::vector<ProbeRecord> train;
  std::vector<ProbeRecord> validation;
  std::vector<ProbeRecord> test;
};

/// Partition sizes for 70/10/20 by the largest-remainder rule (ties go to the
/// earlier partition).
std::array<std::size_t, 3> split_sizes(std::size_t n);

/// Seeded shuffle followed by a 70/10/20 partition.
DatasetSplit split(const std::vector<ProbeRecord>& records, std::uint64_t seed);

}  // namespace margin_probe::dataset
