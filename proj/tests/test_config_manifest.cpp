#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "margin_probe/config.hpp"
#include "margin_probe/errors.hpp"
#include "margin_probe/link.hpp"
#include "margin_probe/manifest.hpp"
#include "margin_probe/rng.hpp"
#include "margin_probe/spectrum.hpp"

using namespace margin_probe;

TEST_CASE("key = value parsing") {
  const auto cfg = KeyValueConfig::parse(
      "# fiber\n"
      "attenuation_db_per_km = 0.18   # low loss\n"
      "\n"
      "n_spans=12\n"
      "n_spans = 14\n");
  CHECK(cfg.get_double("attenuation_db_per_km") == 0.18);
  CHECK(cfg.get_int("n_spans") == 14);
  CHECK_FALSE(cfg.get_string("missing").has_value());
  CHECK(cfg.get_double_or("missing", 2.5) == 2.5);
  CHECK(fiber_from_config(cfg).attenuation_db_per_km == 0.18);
  CHECK(topology_from_config(cfg).n_spans == 14);

  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = 1.5\n").get_int("x"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("x = abc\n").get_double("x"), ConfigError);
  CHECK_THROWS_AS(fiber_from_config(KeyValueConfig::parse("nf_db = 2\n")), InvalidArgument);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/file.cfg"), ConfigError);
  CHECK(spectrum::policy_from_config(KeyValueConfig::parse("fixed_slots = 1\n")).fixed_slots);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 42) == derive_seed(7, 42));
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const auto k = r.uniform_int(-2, 3);
    CHECK(k >= -2);
    CHECK(k <= 3);
  }
}

TEST_CASE("manifest is deterministic and digests files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "margin_probe_manifest_test";
  fs::create_directories(dir);
  const auto f = (dir / "abc.txt").string();
  {
    std::ofstream out(f, std::ios::binary);
    out << "abc";
  }
  CHECK(file_digest(f) == "e71fa2190541574b");  // FNV-1a 64 of "abc"

  Manifest m("train");
  m.param("rows", 10LL).param("rounding", std::string("nearest")).param("flag", true).seed("master", 42).input(f);
  const auto text = m.dump();
  CHECK(text == m.dump());
  CHECK(text.find("\"master\": 42") != std::string::npos);
  CHECK(text.find("e71fa2190541574b") != std::string::npos);
  CHECK(text.find("time") == std::string::npos);
  CHECK(Manifest::path_for("out.csv") == "out.csv.manifest.json");
  CHECK_THROWS_AS(file_digest((dir / "missing").string()), FormatError);
  fs::remove_all(dir);
}
