#include "margin_probe/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "margin_probe/errors.hpp"
#include "margin_probe/gn_engine.hpp"
#include "margin_probe/rng.hpp"

namespace margin_probe::dataset {
namespace {

constexpr std::size_t kBlockRows = 1024;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ls(line);
  while (std::getline(ls, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw FormatError("line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno != 0 || s[0] == '-') {
    throw FormatError("line " + std::to_string(line_no) + ": bad integer '" + s + "'");
  }
  return v;
}

ProbeRecord parse_row(const std::string& line, std::size_t line_no) {
  const auto f = split_fields(line);
  if (f.size() != 11) {
    throw FormatError("line " + std::to_string(line_no) + ": expected 11 fields, got " + std::to_string(f.size()));
  }
  ProbeRecord r;
  r.seed = parse_u64(f[0], line_no);
  r.n_spans = static_cast<int>(parse_u64(f[1], line_no));
  r.span_length_km = parse_double(f[2], line_no);
  r.cut_gbd = parse_double(f[3], line_no);
  r.modulation = modulation_from_string(f[4]);
  r.center_freq_thz = parse_double(f[5], line_no);
  r.p_ch_dbm = parse_double(f[6], line_no);
  r.fill_fraction = parse_double(f[7], line_no);
  r.snr_current_db = parse_double(f[8], line_no);
  r.snr_full_db = parse_double(f[9], line_no);
  r.margin_db = parse_double(f[10], line_no);
  return r;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void write_errors_file(const std::string& path, const std::vector<RowError>& errors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << "index,seed,kind,message\n";
  for (const auto& e : errors) {
    std::string msg = e.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << e.index << ',' << e.seed << ',' << e.kind << ',' << msg << '\n';
  }
}

std::vector<RowError> read_errors_file(const std::string& path) {
  std::vector<RowError> out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_fields(strip_cr(line));
    if (f.size() < 4) continue;
    out.push_back({parse_u64(f[0], line_no), parse_u64(f[1], line_no), f[2], f[3]});
  }
  return out;
}

}  // namespace

std::uint64_t row_seed(std::uint64_t master_seed, std::uint64_t index) { return derive_seed(master_seed, index); }

Scenario sample_scenario(std::uint64_t seed, const GenerationConfig& config) {
  const auto& sp = config.space;
  const auto& policy = config.policy;
  Rng rng(seed);
  Scenario sc;
  sc.seed = seed;
  sc.n_spans = static_cast<int>(rng.uniform_int(sp.min_spans, sp.max_spans));
  sc.span_length_km = rng.uniform(sp.min_span_length_km, sp.max_span_length_km);
  const double max_gbd = policy.fixed_slots ? std::min(sp.max_cut_gbd, policy.slot_width_ghz) : sp.max_cut_gbd;
  sc.cut_gbd = rng.uniform(sp.min_cut_gbd, max_gbd);
  sc.psd_anchor_dbm = rng.uniform(sp.min_psd_anchor_dbm, sp.max_psd_anchor_dbm);
  if (policy.fixed_slots) {
    const auto slot = rng.uniform_int(0, static_cast<std::int64_t>(policy.slot_count()) - 1);
    sc.center_freq_thz = policy.slot_center_thz(static_cast<std::size_t>(slot));
  } else {
    const double g = policy.granularity_ghz;
    const double half = 0.5 * sc.cut_gbd;
    const auto k_min = static_cast<std::int64_t>(std::ceil(half / g - 1e-9));
    const auto k_max = static_cast<std::int64_t>(std::floor((policy.band_width_ghz() - half) / g + 1e-9));
    if (k_max < k_min) throw CutOutOfBand("CUT wider than the band");
    sc.center_freq_thz = policy.band_start_thz + static_cast<double>(rng.uniform_int(k_min, k_max)) * g * 1e-3;
  }
  const double cut_only = sc.cut_gbd / policy.band_width_ghz();
  sc.fill_target = 1.0 - (1.0 - cut_only) * rng.uniform01();
  sc.modulation = static_cast<ModulationFormat>(rng.uniform_int(0, 3));
  return sc;
}

std::vector<Scenario> sample_parameter_space(std::size_t n_rows, std::uint64_t master_seed,
                                             const GenerationConfig& config) {
  if (n_rows == 0) throw InvalidArgument("n_rows must be >= 1");
  std::vector<Scenario> out;
  out.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) out.push_back(sample_scenario(row_seed(master_seed, i), config));
  return out;
}

ProbeRecord generate_row(const Scenario& sc, const GenerationConfig& config) {
  LinkTopology topo;
  topo.n_spans = sc.n_spans;
  topo.span_length_km = sc.span_length_km;
  topo.fiber = config.fiber;

  auto policy = config.policy;
  policy.psd_anchor_dbm = sc.psd_anchor_dbm;

  ChannelSpec cut;
  cut.center_freq_thz = sc.center_freq_thz;
  cut.symbol_rate_gbd = sc.cut_gbd;
  cut.is_cut = true;
  cut.modulation = sc.modulation;

  const auto full = spectrum::build_full_plan(policy, cut, derive_seed(sc.seed, 1));
  const auto partial = spectrum::sample_partial(full, sc.fill_target, derive_seed(sc.seed, 2));

  ProbeRecord r;
  r.seed = sc.seed;
  r.n_spans = sc.n_spans;
  r.span_length_km = sc.span_length_km;
  r.cut_gbd = sc.cut_gbd;
  r.modulation = sc.modulation;
  r.center_freq_thz = sc.center_freq_thz;
  r.p_ch_dbm = full.cut().launch_power_dbm;
  r.fill_fraction = partial.fill_fraction();
  r.snr_current_db = gn::snr_db(partial, topo);
  r.snr_full_db = gn::snr_db(full, topo);
  r.margin_db = r.snr_current_db - r.snr_full_db;
  if (r.margin_db == 0.0) r.margin_db = 0.0;  // no negative zero
  return r;
}

ProbeRecord replay_row(std::uint64_t seed, const GenerationConfig& config) {
  return generate_row(sample_scenario(seed, config), config);
}

GenerationResult generate(std::size_t n_rows, std::uint64_t master_seed, const GenerationConfig& config,
                          std::size_t first_index) {
  std::vector<std::optional<ProbeRecord>> rows(n_rows);
  std::vector<std::optional<RowError>> failures(n_rows);
  std::atomic<std::size_t> next{0};
  constexpr std::size_t kChunk = 64;

  auto work = [&] {
    while (true) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n_rows) break;
      const std::size_t end = std::min(n_rows, begin + kChunk);
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t index = first_index + i;
        const auto seed = row_seed(master_seed, index);
        try {
          rows[i] = replay_row(seed, config);
        } catch (const Error& e) {
          failures[i] = RowError{index, seed, e.kind(), e.what()};
        } catch (const std::exception& e) {
          failures[i] = RowError{index, seed, "std::exception", e.what()};
        }
      }
    }
  };

  const unsigned workers = std::max(1u, config.workers);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  GenerationResult result;
  result.records.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    if (rows[i]) result.records.push_back(*rows[i]);
    if (failures[i]) result.errors.push_back(*failures[i]);
  }
  return result;
}

FileGenerationSummary generate_to_file(const std::string& path, std::size_t n_rows, std::uint64_t master_seed,
                                       const GenerationConfig& config, bool resume,
                                       const std::function<void(std::size_t, std::size_t)>& progress) {
  FileGenerationSummary summary;
  const std::string errors_path = path + ".errors.csv";
  std::string kept;  // complete, valid rows of a previous partial run
  std::size_t start_index = 0;
  std::vector<RowError> errors;

  if (resume && std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::uint64_t last_seed = 0;
    bool have_last = false;
    while (true) {
      const auto nl = content.find('\n', pos);
      if (nl == std::string::npos) break;  // trailing partial line is dropped
      const std::string line = strip_cr(content.substr(pos, nl - pos));
      ++line_no;
      if (line_no == 1) {
        if (line != kCsvHeader) throw FormatError("cannot resume '" + path + "': header mismatch");
      } else {
        try {
          last_seed = parse_row(line, line_no).seed;
          have_last = true;
        } catch (const Error&) {
          break;
        }
        ++summary.rows_resumed;
        kept.append(content, pos, nl - pos + 1);
      }
      pos = nl + 1;
    }
    if (have_last) {
      std::size_t i = 0;
      while (i < n_rows && row_seed(master_seed, i) != last_seed) ++i;
      if (i == n_rows) throw FormatError("cannot resume '" + path + "': rows do not belong to this seed");
      start_index = i + 1;
    }
    for (auto& e : read_errors_file(errors_path)) {
      if (e.index < start_index) errors.push_back(std::move(e));
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << kCsvHeader << '\n' << kept;
  out.flush();
  summary.rows_written = summary.rows_resumed;

  for (std::size_t begin = start_index; begin < n_rows; begin += kBlockRows) {
    const std::size_t count = std::min(kBlockRows, n_rows - begin);
    auto block = generate(count, master_seed, config, begin);
    for (const auto& r : block.records) out << format_csv_row(r) << '\n';
    out.flush();
    summary.rows_written += block.records.size();
    errors.insert(errors.end(), block.errors.begin(), block.errors.end());
    if (progress) progress(begin + count, n_rows);
  }
  if (!out) throw FormatError("write failed for '" + path + "'");
  summary.rows_failed = errors.size();
  write_errors_file(errors_path, errors);
  return summary;
}

std::string format_csv_row(const ProbeRecord& r) {
  std::string s = std::to_string(r.seed);
  s += ',' + std::to_string(r.n_spans);
  s += ',' + fmt6(r.span_length_km);
  s += ',' + fmt6(r.cut_gbd);
  s += ',' + to_string(r.modulation);
  s += ',' + fmt6(r.center_freq_thz);
  s += ',' + fmt6(r.p_ch_dbm);
  s += ',' + fmt6(r.fill_fraction);
  s += ',' + fmt6(r.snr_current_db);
  s += ',' + fmt6(r.snr_full_db);
  s += ',' + fmt6(r.margin_db);
  return s;
}

void write_csv(std::ostream& out, const std::vector<ProbeRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) out << format_csv_row(r) << '\n';
}

void write_csv_file(const std::string& path, const std::vector<ProbeRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_csv(out, records);
  if (!out) throw FormatError("write failed for '" + path + "'");
}

std::vector<ProbeRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kCsvHeader) {
    throw FormatError("dataset header mismatch; expected '" + std::string(kCsvHeader) + "'");
  }
  std::vector<ProbeRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    out.push_back(parse_row(line, line_no));
  }
  return out;
}

std::vector<ProbeRecord> read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset '" + path + "'");
  return read_csv(in);
}

std::array<std::size_t, 3> split_sizes(std::size_t n) {
  constexpr std::array<double, 3> kShares{0.7, 0.1, 0.2};
  std::array<std::size_t, 3> sizes{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    // Shares as integer percent so 0.7 * 100 lands exactly on 70.
    const std::size_t whole = n * static_cast<std::size_t>(std::lround(kShares[i] * 100)) / 100;
    sizes[i] = whole;
    remainder[i] = kShares[i] * static_cast<double>(n) - static_cast<double>(whole);
    assigned += whole;
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < 3; ++i) {
      if (remainder[i] > remainder[best] + 1e-12) best = i;
    }
    ++sizes[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  return sizes;
}

DatasetSplit split(const std::vector<ProbeRecord>& records, std::uint64_t seed) {
  if (records.empty()) throw InvalidArgument("cannot split an empty dataset");
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto sizes = split_sizes(records.size());
  DatasetSplit s;
  s.train.reserve(sizes[0]);
  s.validation.reserve(sizes[1]);
  s.test.reserve(sizes[2]);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& r = records[order[i]];
    if (i < sizes[0]) {
      s.train.push_back(r);
    } else if (i < sizes[0] + sizes[1]) {
      s.validation.push_back(r);
    } else {
      s.test.push_back(r);
    }
  }
  return s;
}

}  // namespace margin_probe::dataset
