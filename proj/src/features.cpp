#include "margin_probe/features.hpp"

#include <cmath>

#include "margin_probe/errors.hpp"

namespace margin_probe::features {
namespace {

void append_multisets(int degree, std::size_t first, MonomialTable::Exponents& current,
                      std::vector<MonomialTable::Exponents>& out) {
  if (degree == 0) {
    out.push_back(current);
    return;
  }
  for (std::size_t i = first; i < kRawFeatureCount; ++i) {
    ++current[i];
    append_multisets(degree - 1, i, current, out);
    --current[i];
  }
}

}  // namespace

RawFeatures raw_features(const dataset::ProbeRecord& r) {
  return {r.snr_current_db, r.p_ch_dbm, r.center_freq_thz, static_cast<double>(r.n_spans), r.fill_fraction};
}

RawFeatures ScalerStats::transform(const RawFeatures& x) const {
  RawFeatures out{};
  for (std::size_t i = 0; i < kRawFeatureCount; ++i) out[i] = (x[i] - mean[i]) / stddev[i];
  return out;
}

ScalerStats fit_scaler(std::span<const RawFeatures> rows) {
  if (rows.size() < 2) throw InvalidArgument("scaler needs at least 2 rows");
  const auto n = static_cast<double>(rows.size());
  ScalerStats s;
  for (std::size_t i = 0; i < kRawFeatureCount; ++i) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r[i];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) ss += (r[i] - mean) * (r[i] - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0)) throw DegenerateFeature("feature " + std::to_string(i) + " is constant in the training set");
    s.mean[i] = mean;
    s.stddev[i] = sd;
  }
  return s;
}

MonomialTable::MonomialTable(int max_degree) : max_degree_(max_degree) {
  if (max_degree < 1) throw InvalidArgument("monomial degree must be >= 1");
  Exponents current{};
  for (int d = 1; d <= max_degree; ++d) append_multisets(d, 0, current, exponents_);
}

void MonomialTable::expand(const RawFeatures& x, std::span<double> out) const {
  if (out.size() != exponents_.size()) throw InvalidArgument("expansion buffer has the wrong size");
  // powers[i][p] = x_i^p
  std::array<std::array<double, 16>, kRawFeatureCount> powers{};
  const int top = std::min(max_degree_, 15);
  for (std::size_t i = 0; i < kRawFeatureCount; ++i) {
    powers[i][0] = 1.0;
    for (int p = 1; p <= top; ++p) powers[i][p] = powers[i][p - 1] * x[i];
  }
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    double v = 1.0;
    for (std::size_t i = 0; i < kRawFeatureCount; ++i) v *= powers[i][exponents_[j][i]];
    out[j] = v;
  }
}

Eigen::VectorXd MonomialTable::expand(const RawFeatures& scaled) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
  expand(scaled, std::span<double>(v.data(), size()));
  return v;
}

Eigen::MatrixXd design_matrix(std::span<const RawFeatures> rows, const ScalerStats& scaler,
                              const MonomialTable& table) {
  // Filled row by row; converted to column-major on return.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi(
      static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    table.expand(scaler.transform(rows[r]),
                 std::span<double>(phi.row(static_cast<Eigen::Index>(r)).data(), table.size()));
  }
  return phi;
}

}  // namespace margin_probe::features
