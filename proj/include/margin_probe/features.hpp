#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "margin_probe/dataset.hpp"

namespace margin_probe::features {

inline constexpr std::size_t kRawFeatureCount = 5;

/// snr_current_db, p_ch_dbm, center_freq_thz, n_spans, fill_fraction, in that order.
using RawFeatures = std::array<double, kRawFeatureCount>;

enum FeatureIndex : std::size_t { kSnrCurrent = 0, kLaunchPower, kCenterFreq, kSpans, kFill };

RawFeatures raw_features(const dataset::ProbeRecord& r);

/// Per-feature mean and population standard deviation of the training split.
struct ScalerStats {
  RawFeatures mean{};
  RawFeatures stddev{};

  RawFeatures transform(const RawFeatures& x) const;
};

/// Throws DegenerateFeature if any column is constant, InvalidArgument for < 2 rows.
ScalerStats fit_scaler(std::span<const RawFeatures> rows);

/// Exponent vectors of all non-constant monomials up to `max_degree`, graded
/// by degree and, within a degree, in the order of multisets of feature
/// indices i1 <= i2 <= ... (x0^2, x0 x1, ..., x4^2 for degree two).
class MonomialTable {
 public:
  using Exponents = std::array<std::uint8_t, kRawFeatureCount>;

  explicit MonomialTable(int max_degree = 4);

  int max_degree() const { return max_degree_; }
  std::size_t size() const { return exponents_.size(); }
  const std::vector<Exponents>& exponents() const { return exponents_; }

  /// phi_j = prod_i x_i^e_ji; `out` must hold size() entries.
  void expand(const RawFeatures& scaled, std::span<double> out) const;
  Eigen::VectorXd expand(const RawFeatures& scaled) const;

 private:
  int max_degree_;
  std::vector<Exponents> exponents_;
};

/// Scaled-and-expanded design matrix, one row per record.
Eigen::MatrixXd design_matrix(std::span<const RawFeatures> rows, const ScalerStats& scaler,
                              const MonomialTable& table);

}  // namespace margin_probe::features
