#include <doctest.h>

#include <set>

#include "margin_probe/errors.hpp"
#include "margin_probe/features.hpp"
#include "margin_probe/rng.hpp"

using namespace margin_probe;
using features::MonomialTable;
using features::RawFeatures;

TEST_CASE("monomial table layout") {
  const MonomialTable t(4);
  REQUIRE(t.size() == 125);  // C(9, 4) - 1
  std::set<MonomialTable::Exponents> unique(t.exponents().begin(), t.exponents().end());
  CHECK(unique.size() == 125);
  int prev_degree = 1;
  for (const auto& e : t.exponents()) {
    int d = 0;
    for (auto x : e) d += x;
    CHECK(d >= prev_degree);
    CHECK(d <= 4);
    prev_degree = d;
  }
  CHECK(t.exponents()[0] == MonomialTable::Exponents{1, 0, 0, 0, 0});
  CHECK(t.exponents()[4] == MonomialTable::Exponents{0, 0, 0, 0, 1});
  CHECK(t.exponents()[5] == MonomialTable::Exponents{2, 0, 0, 0, 0});
  CHECK(t.exponents()[6] == MonomialTable::Exponents{1, 1, 0, 0, 0});
  CHECK(t.exponents()[19] == MonomialTable::Exponents{0, 0, 0, 0, 2});
  CHECK(t.exponents().back() == MonomialTable::Exponents{0, 0, 0, 0, 4});
  CHECK(MonomialTable(2).size() == 20);
}

TEST_CASE("expansion values") {
  const MonomialTable t(4);
  const auto zero = t.expand(RawFeatures{0, 0, 0, 0, 0});
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
  const auto ones = t.expand(RawFeatures{1, 1, 1, 1, 1});
  CHECK(ones.minCoeff() == 1.0);
  CHECK(ones.maxCoeff() == 1.0);
  const RawFeatures x{0.3, -1.2, 2.0, 0.7, -0.5};
  const auto phi = t.expand(x);
  for (std::size_t j = 0; j < t.size(); ++j) {
    double p = 1.0;
    for (std::size_t i = 0; i < 5; ++i) p *= std::pow(x[i], t.exponents()[j][i]);
    CHECK(phi[static_cast<Eigen::Index>(j)] == doctest::Approx(p).epsilon(1e-14));
  }
  const auto again = t.expand(x);
  CHECK((phi.array() == again.array()).all());
}

TEST_CASE("scaler standardizes the training rows") {
  Rng rng(4);
  std::vector<RawFeatures> rows(500);
  for (auto& r : rows) r = {rng.uniform(10, 30), rng.uniform(-3, 3), rng.uniform(191, 196), rng.uniform(2, 30), rng.uniform01()};
  const auto sc = features::fit_scaler(rows);
  for (std::size_t i = 0; i < 5; ++i) {
    double m = 0.0, v = 0.0;
    for (const auto& r : rows) m += sc.transform(r)[i];
    m /= 500.0;
    for (const auto& r : rows) v += (sc.transform(r)[i] - m) * (sc.transform(r)[i] - m);
    v /= 500.0;
    CHECK(std::abs(m) < 1e-9);
    CHECK(std::abs(v - 1.0) < 1e-9);
  }
  for (auto& r : rows) r[3] = 10.0;
  CHECK_THROWS_AS(features::fit_scaler(rows), DegenerateFeature);
  CHECK_THROWS_AS(features::fit_scaler(std::vector<RawFeatures>(1)), InvalidArgument);
}

TEST_CASE("design matrix rows match the expansion") {
  std::vector<RawFeatures> rows{{20, -1, 193, 5, 0.2}, {25, 0, 194, 10, 0.8}, {22, -2, 192, 20, 0.5}};
  const auto sc = features::fit_scaler(rows);
  const MonomialTable t(4);
  const auto phi = features::design_matrix(rows, sc, t);
  REQUIRE(phi.rows() == 3);
  REQUIRE(phi.cols() == 125);
  for (int i = 0; i < 3; ++i) CHECK((phi.row(i).transpose().array() == t.expand(sc.transform(rows[static_cast<std::size_t>(i)])).array()).all());
}
