#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "orthofield/experiments.hpp"

using namespace orthofield;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("orthofield_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing accepts a full document") {
  json j = {
      {"kind", "orthogonality"},
      {"d", 2},
      {"theta0", {{"sigma2", 1.0}, {"alpha", 1.0}}},
      {"thetas", json::array({{{"sigma2", 2.0}, {"alpha", 1.0}}})},
      {"design", {{"type", "grid"}, {"extent", 2.0}, {"spacing", 0.5}}},
      {"replicates", 3},
      {"seed", 17},
      {"prefixes", {5, 10, 20}},
      {"mode", "joint"},
      {"box", {{"sigma2", {0.1, 10.0}}, {"alpha", {0.1, 10.0}}}},
      {"thresholds", {{"log_phi_pass", -8.0}}},
      {"out", "/tmp/somewhere"},
  };
  auto cfg = experiments::parse_config(j);
  CHECK(cfg.kind == experiments::Kind::orthogonality);
  CHECK(cfg.dim == 2);
  CHECK(cfg.theta0.sigma2 == 1.0);
  CHECK(cfg.thetas.size() == 1);
  CHECK(cfg.design.type == "grid");
  CHECK(cfg.design.spacing == 0.5);
  CHECK(cfg.replicates == 3);
  CHECK(cfg.seed == 17);
  CHECK(cfg.prefixes == std::vector<Eigen::Index>{5, 10, 20});
  CHECK(cfg.mode == gaussml::MlMode::joint);
  CHECK(cfg.box.sigma2_hi == 10.0);
  CHECK(cfg.thresholds.log_phi_pass == -8.0);
  CHECK(cfg.thresholds.rmse_ratio_max == 0.625);  // untouched default
  CHECK(cfg.out_dir == "/tmp/somewhere");
}

TEST_CASE("config parsing rejects malformed documents") {
  using experiments::ConfigError;
  auto base = json{{"kind", "orthogonality"}};
  CHECK_THROWS_AS(experiments::parse_config(json{{"kind", "nope"}}), ConfigError);
  CHECK_THROWS_AS(experiments::parse_config(json{}), ConfigError);
  {
    auto j = base;
    j["d"] = 0;
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["theta0"] = {{"sigma2", -1.0}, {"alpha", 1.0}};
    CHECK_THROWS(experiments::parse_config(j));
  }
  {
    auto j = base;
    j["theta0"] = {{"sigma2", 1.0}};
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["prefixes"] = {10, 10};
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["prefixes"] = {10, 5};
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["replicates"] = 0;
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["mode"] = "both";
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["box"] = {{"sigma2", {1.0}}, {"alpha", {0.1, 10.0}}};
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["design"] = {{"type", "poisson"}};
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  {
    auto j = base;
    j["brownian_arm"] = {{"type", "grid"}, {"extent", 1.0}, {"spacing", 0.5}};
    CHECK_THROWS_AS(experiments::parse_config(j), ConfigError);
  }
  CHECK_THROWS_AS(experiments::load_config("/nonexistent/path.json"),
                  ConfigError);
}

TEST_CASE("seed protocol and config hash") {
  CHECK(experiments::replicate_seed(1, 0) != experiments::replicate_seed(1, 1));
  CHECK(experiments::replicate_seed(1, 0) != experiments::replicate_seed(2, 0));
  CHECK(experiments::replicate_seed(7, 3) == experiments::replicate_seed(7, 3));
  CHECK(experiments::config_hash("abc") != experiments::config_hash("abd"));
  CHECK(experiments::config_hash("") == 0xCBF29CE484222325ULL);
  CHECK(experiments::hex64(0x1ULL) == "0000000000000001");
}

TEST_CASE("quantile helpers") {
  std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(experiments::detail::median(v) == Catch::Approx(2.5));
  CHECK(experiments::detail::quantile(v, 0.0) == 1.0);
  CHECK(experiments::detail::quantile(v, 1.0) == 4.0);
  CHECK(experiments::detail::iqr(v) == Catch::Approx(1.5));
  CHECK_THROWS_AS(experiments::detail::quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("orthogonality runs are reproducible byte for byte") {
  json j = {
      {"kind", "orthogonality"},
      {"d", 1},
      {"theta0", {{"sigma2", 1.0}, {"alpha", 1.0}}},
      {"design", {{"type", "grid"}, {"extent", 4.0}, {"spacing", 0.4}}},
      {"replicates", 8},
      {"seed", 3},
      {"prefixes", {4, 10, 20}},
  };
  j["thetas"] = json::array({json{{"sigma2", 2.0}, {"alpha", 1.0}},
                             json{{"sigma2", 1.0}, {"alpha", 1.0}}});
  const auto d1 = fresh_dir("orth_a"), d2 = fresh_dir("orth_b");
  auto cfg = experiments::parse_config(j);

  cfg.out_dir = d1.string();
  auto s1 = experiments::run(cfg);
  cfg.out_dir = d2.string();
  auto s2 = experiments::run(cfg);

  CHECK(slurp(d1 / "log_phi_replicates.csv") == slurp(d2 / "log_phi_replicates.csv"));
  CHECK(slurp(d1 / "log_phi_quantiles.csv") == slurp(d2 / "log_phi_quantiles.csv"));

  // control arm (theta == theta0) is exactly zero and reported as such
  const json sum = json::parse(slurp(d1 / "summary.json"));
  REQUIRE(sum.at("stats").at("arms").size() == 2);
  CHECK(sum.at("stats").at("arms")[1].at("control").get<bool>());
  CHECK(sum.at("stats").at("arms")[1].at("final_median_log_phi").get<double>() == 0.0);
  CHECK(sum.at("stats").at("arms")[1].at("pass").get<bool>());
  CHECK(sum.at("config_hash").get<std::string>() ==
        experiments::hex64(experiments::config_hash(cfg.raw)));
}

TEST_CASE("consistency runner aggregates shrinkage") {
  json j = {
      {"kind", "consistency"},
      {"d", 1},
      {"theta0", {{"sigma2", 1.5}, {"alpha", 1.0}}},
      {"design", {{"type", "brownian"}, {"step", 0.5}, {"horizon", 120.0}}},
      {"replicates", 24},
      {"seed", 5},
      {"prefixes", {10, 120}},
      {"mode", "sigma2_only"},
  };
  const auto d1 = fresh_dir("cons_a");
  auto cfg = experiments::parse_config(j);
  cfg.out_dir = d1.string();
  auto s = experiments::run(cfg);
  const json sum = json::parse(slurp(d1 / "summary.json"));
  CHECK(sum.at("stats").at("rmse_first").get<double>() > 0.0);
  CHECK(sum.at("stats").at("rmse_last").get<double>() <
        sum.at("stats").at("rmse_first").get<double>());

  SECTION("rerun is identical") {
    const auto d2 = fresh_dir("cons_b");
    cfg.out_dir = d2.string();
    experiments::run(cfg);
    CHECK(slurp(d1 / "estimates.csv") == slurp(d2 / "estimates.csv"));
    CHECK(slurp(d1 / "rmse.csv") == slurp(d2 / "rmse.csv"));
  }
  SECTION("joint mode is rejected for this protocol") {
    cfg.mode = gaussml::MlMode::joint;
    CHECK_THROWS_AS(experiments::run(cfg), experiments::ConfigError);
  }
}

TEST_CASE("bounded contrast with one replicate reports no spread") {
  json j = {
      {"kind", "bounded_contrast"},
      {"d", 1},
      {"theta0", {{"sigma2", 1.0}, {"alpha", 1.0}}},
      {"design", {{"type", "bounded"}, {"radius", 1.0}, {"count", 30}}},
      {"brownian_arm", {{"type", "brownian"}, {"step", 0.5}, {"horizon", 30.0}}},
      {"replicates", 1},
      {"seed", 9},
      {"prefixes", {10, 30}},
  };
  const auto d1 = fresh_dir("contrast");
  auto cfg = experiments::parse_config(j);
  cfg.out_dir = d1.string();
  auto s = experiments::run(cfg);
  CHECK(s.pass);
  const json sum = json::parse(slurp(d1 / "summary.json"));
  CHECK(sum.at("stats").at("iqr").get<std::string>() == "not_computable");
}

TEST_CASE("hankel check honors the case filter") {
  json j = {{"kind", "hankel_check"}, {"cases", {"gauss_nu0"}}};
  const auto d1 = fresh_dir("hankel");
  auto cfg = experiments::parse_config(j);
  cfg.out_dir = d1.string();
  auto s = experiments::run(cfg);
  CHECK(s.pass);
  const json sum = json::parse(slurp(d1 / "summary.json"));
  REQUIRE(sum.at("stats").at("cases").size() == 1);
  CHECK(sum.at("stats").at("cases")[0].at("case").get<std::string>() == "gauss_nu0");

  SECTION("an empty case list runs nothing and passes") {
    json j2 = {{"kind", "hankel_check"}, {"cases", json::array()}};
    const auto d2 = fresh_dir("hankel_empty");
    auto cfg2 = experiments::parse_config(j2);
    cfg2.out_dir = d2.string();
    CHECK(experiments::run(cfg2).pass);
  }
  SECTION("an unknown case name is a config error") {
    json j3 = {{"kind", "hankel_check"}, {"cases", {"no_such_case"}}};
    auto cfg3 = experiments::parse_config(j3);
    cfg3.out_dir = d1.string();
    CHECK_THROWS_AS(experiments::run(cfg3), experiments::ConfigError);
  }
}

TEST_CASE("design dump is deterministic and complete") {
  json j = {
      {"kind", "dump_design"},
      {"d", 2},
      {"design", {{"type", "grid"}, {"extent", 1.0}, {"spacing", 1.0}}},
  };
  const auto d1 = fresh_dir("dump_a"), d2 = fresh_dir("dump_b");
  auto cfg = experiments::parse_config(j);
  cfg.out_dir = d1.string();
  experiments::run(cfg);
  cfg.out_dir = d2.string();
  experiments::run(cfg);
  CHECK(slurp(d1 / "points.csv") == slurp(d2 / "points.csv"));
  const json sum = json::parse(slurp(d1 / "summary.json"));
  CHECK(sum.at("stats").at("n").get<long>() == 8);
  CHECK(sum.at("stats").at("provenance").get<std::string>() == "grid");
  const auto ps = io::read_point_set((d1 / "points.csv").string(),
                                     sampling::Provenance::grid);
  CHECK(ps.size() == 8);
  CHECK(ps.dim == 2);
}
