#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "orthofield/gaussml.hpp"
#include "orthofield/io.hpp"
#include "orthofield/kernels.hpp"
#include "orthofield/sampling.hpp"
#include "orthofield/specfun.hpp"
#include "orthofield/spectral.hpp"

namespace orthofield::experiments {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Kind {
  orthogonality,
  consistency,
  bounded_contrast,
  expansion_check,
  hankel_check,
  dump_design
};

inline Kind kind_from_string(const std::string& s) {
  if (s == "orthogonality") return Kind::orthogonality;
  if (s == "consistency") return Kind::consistency;
  if (s == "bounded_contrast") return Kind::bounded_contrast;
  if (s == "expansion_check") return Kind::expansion_check;
  if (s == "hankel_check") return Kind::hankel_check;
  if (s == "dump_design") return Kind::dump_design;
  throw ConfigError("unknown experiment kind: " + s);
}

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::orthogonality: return "orthogonality";
    case Kind::consistency: return "consistency";
    case Kind::bounded_contrast: return "bounded_contrast";
    case Kind::expansion_check: return "expansion_check";
    case Kind::hankel_check: return "hankel_check";
    case Kind::dump_design: return "dump_design";
  }
  return "unknown";
}

/// Pass thresholds; artifact defaults, all overridable per config key.
struct Thresholds {
  double log_phi_pass = -10.0;
  double rmse_ratio_max = 0.625;
  double iqr_floor_ratio = 0.5;
  double expansion_max_err = 1e-3;
  double hankel_recip_rel = 1e-3;
  double hankel_parseval = 1e-4;
};

struct DesignSpec {
  std::string type;  // grid | brownian | bounded
  double extent = 0.0;
  double spacing = 0.0;
  double step = 0.0;
  double horizon = 0.0;
  double radius = 0.0;
  Eigen::Index count = 0;
};

struct ExperimentConfig {
  Kind kind = Kind::orthogonality;
  int dim = 1;
  kernels::Theta theta0{1.0, 1.0};
  std::vector<kernels::Theta> thetas;
  DesignSpec design;
  DesignSpec brownian_arm;  // bounded_contrast reference arm
  int replicates = 1;
  unsigned long long seed = 1;
  std::vector<Eigen::Index> prefixes;
  std::string out_dir = ".";
  Thresholds thresholds;
  gaussml::MlMode mode = gaussml::MlMode::sigma2_only;
  gaussml::ThetaBox box{0.05, 20.0, 0.05, 20.0};
  // expansion_check knobs
  int max_degree = 40;
  double kappa_max = 0.0;  // 0 -> 40 * alpha
  int kappa_panels = 64;
  int expansion_pairs = 20;
  // hankel_check case list; nullopt-like: {"*"} means the full default set
  std::vector<std::string> hankel_cases{"*"};
  std::string raw;  // canonical config text, hashed into the summary
};

// --- seed protocol ---------------------------------------------------------

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-replicate seed stream: independent of execution order.
inline std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t k) {
  return mix64(master + (k + 1) * 0x9E3779B97F4A7C15ULL);
}

/// FNV-1a over the canonical config text.
inline std::uint64_t config_hash(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// --- config parsing --------------------------------------------------------

namespace detail {

inline kernels::Theta parse_theta(const json& j) {
  if (!j.is_object() || !j.contains("sigma2") || !j.contains("alpha"))
    throw ConfigError("theta must be an object with sigma2 and alpha");
  return kernels::Theta(j.at("sigma2").get<double>(), j.at("alpha").get<double>());
}

inline DesignSpec parse_design(const json& j) {
  DesignSpec d;
  d.type = j.at("type").get<std::string>();
  if (d.type == "grid") {
    d.extent = j.at("extent").get<double>();
    d.spacing = j.at("spacing").get<double>();
  } else if (d.type == "brownian") {
    d.step = j.at("step").get<double>();
    d.horizon = j.at("horizon").get<double>();
  } else if (d.type == "bounded") {
    d.radius = j.at("radius").get<double>();
    d.count = j.at("count").get<Eigen::Index>();
  } else {
    throw ConfigError("design.type must be grid, brownian, or bounded");
  }
  return d;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  try {
    cfg.kind = kind_from_string(j.at("kind").get<std::string>());
    cfg.dim = j.value("d", 1);
    if (cfg.dim < 1) throw ConfigError("d must be >= 1");
    if (j.contains("theta0")) cfg.theta0 = detail::parse_theta(j.at("theta0"));
    if (j.contains("thetas"))
      for (const auto& t : j.at("thetas")) cfg.thetas.push_back(detail::parse_theta(t));
    if (j.contains("design")) cfg.design = detail::parse_design(j.at("design"));
    if (j.contains("brownian_arm")) {
      cfg.brownian_arm = detail::parse_design(j.at("brownian_arm"));
      if (cfg.brownian_arm.type != "brownian")
        throw ConfigError("brownian_arm must have type brownian");
    }
    cfg.replicates = j.value("replicates", 1);
    if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
    cfg.seed = j.value("seed", 1ULL);
    if (j.contains("prefixes")) {
      for (const auto& p : j.at("prefixes"))
        cfg.prefixes.push_back(p.get<Eigen::Index>());
      for (std::size_t i = 0; i < cfg.prefixes.size(); ++i) {
        if (cfg.prefixes[i] < 1) throw ConfigError("prefixes must be >= 1");
        if (i > 0 && cfg.prefixes[i] <= cfg.prefixes[i - 1])
          throw ConfigError("prefixes must be strictly increasing");
      }
    }
    if (j.contains("mode")) {
      const std::string m = j.at("mode").get<std::string>();
      if (m == "sigma2_only") cfg.mode = gaussml::MlMode::sigma2_only;
      else if (m == "joint") cfg.mode = gaussml::MlMode::joint;
      else throw ConfigError("mode must be sigma2_only or joint");
    }
    if (j.contains("box")) {
      const auto& b = j.at("box");
      const auto s2 = b.at("sigma2").get<std::vector<double>>();
      const auto a = b.at("alpha").get<std::vector<double>>();
      if (s2.size() != 2 || a.size() != 2)
        throw ConfigError("box axes must be [lo, hi] pairs");
      cfg.box = gaussml::ThetaBox(s2[0], s2[1], a[0], a[1]);
    }
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      cfg.thresholds.log_phi_pass = t.value("log_phi_pass", cfg.thresholds.log_phi_pass);
      cfg.thresholds.rmse_ratio_max =
          t.value("rmse_ratio_max", cfg.thresholds.rmse_ratio_max);
      cfg.thresholds.iqr_floor_ratio =
          t.value("iqr_floor_ratio", cfg.thresholds.iqr_floor_ratio);
      cfg.thresholds.expansion_max_err =
          t.value("expansion_max_err", cfg.thresholds.expansion_max_err);
      cfg.thresholds.hankel_recip_rel =
          t.value("hankel_recip_rel", cfg.thresholds.hankel_recip_rel);
      cfg.thresholds.hankel_parseval =
          t.value("hankel_parseval", cfg.thresholds.hankel_parseval);
    }
    if (j.contains("expansion")) {
      const auto& e = j.at("expansion");
      cfg.max_degree = e.value("max_degree", cfg.max_degree);
      cfg.kappa_max = e.value("kappa_max", cfg.kappa_max);
      cfg.kappa_panels = e.value("panels", cfg.kappa_panels);
      cfg.expansion_pairs = e.value("pairs", cfg.expansion_pairs);
    }
    if (j.contains("cases"))
      cfg.hankel_cases = j.at("cases").get<std::vector<std::string>>();
    cfg.out_dir = j.value("out", std::string("."));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  cfg.raw = j.dump();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid json: ") + e.what());
  }
  return parse_config(j);
}

// --- run summary -----------------------------------------------------------

struct RunSummary {
  std::string kind;
  std::string config_hash_hex;
  bool pass = true;
  json stats;
  double wall_seconds = 0.0;
  std::vector<std::string> artifacts;
};

inline void write_summary(const ExperimentConfig& cfg, const RunSummary& summary) {
  json j;
  j["kind"] = summary.kind;
  j["config_hash"] = summary.config_hash_hex;
  j["pass"] = summary.pass;
  j["stats"] = summary.stats;
  j["wall_seconds"] = summary.wall_seconds;
  j["artifacts"] = summary.artifacts;
  j["seed"] = cfg.seed;
  j["seed_protocol"] =
      "replicate k draws seed splitmix64(master + (k+1)*0x9E3779B97F4A7C15); "
      "design and field streams use replicate_seed(rep, 1) and replicate_seed(rep, 2)";
  std::ofstream out(cfg.out_dir + "/summary.json");
  if (!out) throw io::IoError("cannot write summary.json in " + cfg.out_dir);
  out << j.dump(2) << "\n";
}

// --- small statistics helpers ---------------------------------------------

namespace detail {

inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = pos - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

inline double median(const std::vector<double>& v) { return quantile(v, 0.5); }

inline double iqr(const std::vector<double>& v) {
  return quantile(v, 0.75) - quantile(v, 0.25);
}

/// Run f(k) for k = 0..count-1, possibly concurrently; results land in index
/// order so aggregation is independent of scheduling.
template <class F>
auto parallel_map(int count, F&& f) {
  using R = decltype(f(0));
  std::vector<R> out(count);
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(count));
  if (workers <= 1) {
    for (int k = 0; k < count; ++k) out[k] = f(k);
    return out;
  }
  std::vector<std::future<void>> futs;
  std::atomic<int> next{0};
  for (unsigned w = 0; w < workers; ++w)
    futs.push_back(std::async(std::launch::async, [&]() {
      for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) out[k] = f(k);
    }));
  for (auto& fut : futs) fut.get();
  return out;
}

/// Materialize the design for one replicate. Grid designs are deterministic;
/// random designs draw from the replicate's design stream. The point list is
/// truncated to n_max points in generation order.
inline sampling::PointSet make_design(const DesignSpec& spec, int dim,
                                      std::uint64_t design_seed,
                                      Eigen::Index n_max) {
  sampling::PointSet ps;
  if (spec.type == "grid") {
    ps = sampling::make_grid(dim, spec.extent, spec.spacing);
  } else if (spec.type == "brownian") {
    ps = sampling::sample_brownian(dim, spec.step, spec.horizon, design_seed)
             .to_point_set();
  } else if (spec.type == "bounded") {
    ps = sampling::make_bounded_cloud(dim, spec.radius,
                                      n_max > 0 ? std::max(n_max, spec.count)
                                                : spec.count,
                                      design_seed);
  } else {
    throw ConfigError("design.type must be grid, brownian, or bounded");
  }
  if (n_max > 0) {
    if (ps.size() < n_max)
      throw ConfigError("design yields " + std::to_string(ps.size()) +
                        " points, fewer than the largest prefix " +
                        std::to_string(n_max));
    ps.points.conservativeResize(n_max, ps.dim);
  }
  return ps;
}

inline bool design_is_random(const DesignSpec& spec) { return spec.type != "grid"; }

}  // namespace detail

// --- runners ---------------------------------------------------------------

/// Orthogonality decay: simulate under theta0, trace log phi_n(theta) on the
/// prefix schedule, flag pass when every off-true median drops below the
/// threshold by the final prefix while the control arm stays at exactly zero.
inline RunSummary run_orthogonality(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.thetas.empty()) throw ConfigError("orthogonality: thetas must be nonempty");
  if (cfg.prefixes.empty()) throw ConfigError("orthogonality: prefixes required");
  if (cfg.design.type.empty()) throw ConfigError("orthogonality: design required");
  const Eigen::Index n_max = cfg.prefixes.back();

  // fixed designs are built once, random ones per replicate
  sampling::PointSet fixed;
  if (!detail::design_is_random(cfg.design))
    fixed = detail::make_design(cfg.design, cfg.dim, 0, n_max);

  auto one = [&](int k) -> Eigen::MatrixXd {
    const std::uint64_t rep = replicate_seed(cfg.seed, k);
    const sampling::PointSet ps =
        detail::design_is_random(cfg.design)
            ? detail::make_design(cfg.design, cfg.dim, replicate_seed(rep, 1), n_max)
            : fixed;
    const auto design0 = gaussml::build_design(ps, cfg.theta0);
    const Eigen::VectorXd y = gaussml::simulate_field(design0, replicate_seed(rep, 2));
    return gaussml::likelihood_ratio_trace(ps, cfg.theta0, cfg.thetas, y, cfg.prefixes)
        .log_phi;
  };
  const auto traces = detail::parallel_map(cfg.replicates, one);

  io::CsvTable raw;
  raw.header = {"replicate", "theta_sigma2", "theta_alpha", "n", "log_phi"};
  for (int k = 0; k < cfg.replicates; ++k)
    for (std::size_t t = 0; t < cfg.thetas.size(); ++t)
      for (std::size_t p = 0; p < cfg.prefixes.size(); ++p)
        raw.add_row({static_cast<double>(k), cfg.thetas[t].sigma2,
                     cfg.thetas[t].alpha, static_cast<double>(cfg.prefixes[p]),
                     traces[k](static_cast<Eigen::Index>(t),
                               static_cast<Eigen::Index>(p))});
  io::write_csv(cfg.out_dir + "/log_phi_replicates.csv", raw);

  io::CsvTable agg;
  agg.header = {"theta_sigma2", "theta_alpha", "n", "q25", "median", "q75"};
  RunSummary summary;
  summary.kind = kind_name(cfg.kind);
  summary.config_hash_hex = hex64(config_hash(cfg.raw));
  json arms = json::array();
  for (std::size_t t = 0; t < cfg.thetas.size(); ++t) {
    const bool control = cfg.thetas[t] == cfg.theta0;
    json arm;
    arm["theta"] = {{"sigma2", cfg.thetas[t].sigma2}, {"alpha", cfg.thetas[t].alpha}};
    arm["control"] = control;
    double final_median = 0.0;
    for (std::size_t p = 0; p < cfg.prefixes.size(); ++p) {
      std::vector<double> vals(cfg.replicates);
      for (int k = 0; k < cfg.replicates; ++k)
        vals[k] = traces[k](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p));
      const double med = detail::median(vals);
      agg.add_row({cfg.thetas[t].sigma2, cfg.thetas[t].alpha,
                   static_cast<double>(cfg.prefixes[p]), detail::quantile(vals, 0.25),
                   med, detail::quantile(vals, 0.75)});
      if (p + 1 == cfg.prefixes.size()) final_median = med;
    }
    const bool arm_pass =
        control ? final_median == 0.0 : final_median < cfg.thresholds.log_phi_pass;
    arm["final_median_log_phi"] = final_median;
    arm["pass"] = arm_pass;
    summary.pass = summary.pass && arm_pass;
    arms.push_back(arm);
  }
  io::write_csv(cfg.out_dir + "/log_phi_quantiles.csv", agg);
  summary.stats["arms"] = arms;
  summary.stats["threshold_log_phi"] = cfg.thresholds.log_phi_pass;
  summary.artifacts = {"log_phi_replicates.csv", "log_phi_quantiles.csv"};
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(cfg, summary);
  return summary;
}

namespace detail {

struct EstimateBatch {
  // estimates[p][k]: sigma2-hat (and alpha-hat) of replicate k at prefix p
  std::vector<std::vector<double>> sigma2;
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<char>> clamped;
};

/// Per-replicate designs + simulation under theta0 + ML fits on the schedule.
inline EstimateBatch estimate_batch(const ExperimentConfig& cfg,
                                    const DesignSpec& spec, gaussml::MlMode mode,
                                    std::uint64_t stream_tag) {
  const Eigen::Index n_max = cfg.prefixes.back();
  sampling::PointSet fixed;
  if (!design_is_random(spec)) fixed = make_design(spec, cfg.dim, 0, n_max);

  struct Rep {
    std::vector<double> s2, a;
    std::vector<char> cl;
  };
  auto one = [&](int k) -> Rep {
    const std::uint64_t rep = replicate_seed(cfg.seed ^ stream_tag, k);
    const sampling::PointSet ps =
        design_is_random(spec)
            ? make_design(spec, cfg.dim, replicate_seed(rep, 1), n_max)
            : fixed;
    const auto design0 = gaussml::build_design(ps, cfg.theta0);
    const Eigen::VectorXd y = gaussml::simulate_field(design0, replicate_seed(rep, 2));
    const auto fit = gaussml::ml_estimate(ps, y, cfg.box, mode, cfg.prefixes,
                                          cfg.theta0.alpha);
    Rep r;
    for (std::size_t p = 0; p < cfg.prefixes.size(); ++p) {
      r.s2.push_back(fit.estimates[p].sigma2);
      r.a.push_back(fit.estimates[p].alpha);
      r.cl.push_back(fit.clamped[p] ? 1 : 0);
    }
    return r;
  };
  const auto reps = parallel_map(cfg.replicates, one);

  EstimateBatch batch;
  batch.sigma2.resize(cfg.prefixes.size());
  batch.alpha.resize(cfg.prefixes.size());
  batch.clamped.resize(cfg.prefixes.size());
  for (std::size_t p = 0; p < cfg.prefixes.size(); ++p)
    for (int k = 0; k < cfg.replicates; ++k) {
      batch.sigma2[p].push_back(reps[k].s2[p]);
      batch.alpha[p].push_back(reps[k].a[p]);
      batch.clamped[p].push_back(reps[k].cl[p]);
    }
  return batch;
}

inline void write_estimates_csv(const ExperimentConfig& cfg, const std::string& name,
                                const std::string& arm, const EstimateBatch& batch,
                                io::CsvTable& table) {
  for (std::size_t p = 0; p < cfg.prefixes.size(); ++p)
    for (int k = 0; k < cfg.replicates; ++k)
      table.add_row({static_cast<double>(k), static_cast<double>(cfg.prefixes[p]),
                     batch.sigma2[p][k], batch.alpha[p][k],
                     static_cast<double>(batch.clamped[p][k])});
  (void)name;
  (void)arm;
}

}  // namespace detail

/// Consistency on growing dense designs: RMSE of sigma2-hat must shrink by the
/// configured factor from the first to the last prefix.
inline RunSummary run_consistency(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.prefixes.size() < 2)
    throw ConfigError("consistency: need at least two prefixes");
  if (cfg.design.type.empty()) throw ConfigError("consistency: design required");
  if (cfg.mode != gaussml::MlMode::sigma2_only)
    throw ConfigError("consistency: protocol fixes mode = sigma2_only (known alpha0)");

  const auto batch = detail::estimate_batch(cfg, cfg.design, cfg.mode, 0);

  io::CsvTable raw;
  raw.header = {"replicate", "n", "sigma2_hat", "alpha_hat", "clamped"};
  detail::write_estimates_csv(cfg, "estimates", "main", batch, raw);
  io::write_csv(cfg.out_dir + "/estimates.csv", raw);

  io::CsvTable agg;
  agg.header = {"n", "rmse", "median", "iqr", "clamp_fraction"};
  std::vector<double> rmse(cfg.prefixes.size());
  RunSummary summary;
  summary.kind = kind_name(cfg.kind);
  summary.config_hash_hex = hex64(config_hash(cfg.raw));
  for (std::size_t p = 0; p < cfg.prefixes.size(); ++p) {
    double sq = 0.0, clamps = 0.0;
    for (int k = 0; k < cfg.replicates; ++k) {
      const double e = batch.sigma2[p][k] - cfg.theta0.sigma2;
      sq += e * e;
      clamps += batch.clamped[p][k];
    }
    rmse[p] = std::sqrt(sq / cfg.replicates);
    agg.add_row({static_cast<double>(cfg.prefixes[p]), rmse[p],
                 detail::median(batch.sigma2[p]),
                 cfg.replicates > 1 ? detail::iqr(batch.sigma2[p]) : 0.0,
                 clamps / cfg.replicates});
  }
  io::write_csv(cfg.out_dir + "/rmse.csv", agg);

  const double ratio = rmse.front() > 0.0 ? rmse.back() / rmse.front()
                                          : (rmse.back() > 0.0 ? 1e300 : 0.0);
  summary.pass = ratio <= cfg.thresholds.rmse_ratio_max;
  summary.stats["rmse_first"] = rmse.front();
  summary.stats["rmse_last"] = rmse.back();
  summary.stats["rmse_ratio"] = ratio;
  summary.stats["rmse_ratio_max"] = cfg.thresholds.rmse_ratio_max;
  summary.artifacts = {"estimates.csv", "rmse.csv"};
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(cfg, summary);
  return summary;
}

/// Fixed-domain contrast: on bounded clouds in a fixed ball the spread of the
/// jointly estimated sigma2-hat must not collapse, while the dense-path
/// reference arm (sigma2_only protocol, as in run_consistency) must shrink.
inline RunSummary run_bounded_contrast(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.prefixes.size() < 2)
    throw ConfigError("bounded_contrast: need at least two prefixes");
  if (cfg.design.type != "bounded")
    throw ConfigError("bounded_contrast: design.type must be bounded");
  if (cfg.brownian_arm.type != "brownian")
    throw ConfigError("bounded_contrast: brownian_arm required");

  // Bounded arm: joint estimation. With alpha known, the sigma2-only MLE is
  // exactly chi-square scaled and contracts on any design, so it cannot
  // witness the fixed-domain effect.
  const auto bounded =
      detail::estimate_batch(cfg, cfg.design, gaussml::MlMode::joint, 0xB0B0ULL);
  const auto brownian = detail::estimate_batch(cfg, cfg.brownian_arm,
                                               gaussml::MlMode::sigma2_only,
                                               0xBEEFULL);

  io::CsvTable raw;
  raw.header = {"arm", "replicate", "n", "sigma2_hat", "alpha_hat", "clamped"};
  auto dump = [&](const std::string& arm, const detail::EstimateBatch& b) {
    for (std::size_t p = 0; p < cfg.prefixes.size(); ++p)
      for (int k = 0; k < cfg.replicates; ++k)
        raw.add_row({arm, std::to_string(k),
                     std::to_string(cfg.prefixes[p]),
                     io::format_double(b.sigma2[p][k]),
                     io::format_double(b.alpha[p][k]),
                     std::to_string(static_cast<int>(b.clamped[p][k]))});
  };
  dump("bounded", bounded);
  dump("brownian", brownian);
  io::write_csv(cfg.out_dir + "/contrast_estimates.csv", raw);

  RunSummary summary;
  summary.kind = kind_name(cfg.kind);
  summary.config_hash_hex = hex64(config_hash(cfg.raw));

  io::CsvTable agg;
  agg.header = {"arm", "n", "iqr", "median"};
  const bool iqr_ok = cfg.replicates > 1;
  double b_first = 0.0, b_last = 0.0, w_first = 0.0, w_last = 0.0;
  auto aggregate = [&](const std::string& arm, const detail::EstimateBatch& b,
                       double& first, double& last) {
    for (std::size_t p = 0; p < cfg.prefixes.size(); ++p) {
      const double q = iqr_ok ? detail::iqr(b.sigma2[p]) : 0.0;
      agg.add_row({arm, std::to_string(cfg.prefixes[p]), io::format_double(q),
                   io::format_double(detail::median(b.sigma2[p]))});
      if (p == 0) first = q;
      if (p + 1 == cfg.prefixes.size()) last = q;
    }
  };
  aggregate("bounded", bounded, b_first, b_last);
  aggregate("brownian", brownian, w_first, w_last);
  io::write_csv(cfg.out_dir + "/contrast_iqr.csv", agg);

  if (!iqr_ok) {
    summary.stats["iqr"] = "not_computable";
    summary.pass = true;
  } else {
    const bool bounded_pass = b_last > cfg.thresholds.iqr_floor_ratio * b_first;
    const bool brownian_pass = w_last < cfg.thresholds.iqr_floor_ratio * w_first;
    summary.pass = bounded_pass && brownian_pass;
    summary.stats["bounded_iqr_first"] = b_first;
    summary.stats["bounded_iqr_last"] = b_last;
    summary.stats["bounded_pass"] = bounded_pass;
    summary.stats["brownian_iqr_first"] = w_first;
    summary.stats["brownian_iqr_last"] = w_last;
    summary.stats["brownian_pass"] = brownian_pass;
  }
  summary.stats["iqr_floor_ratio"] = cfg.thresholds.iqr_floor_ratio;
  summary.artifacts = {"contrast_estimates.csv", "contrast_iqr.csv"};
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(cfg, summary);
  return summary;
}

// --- validation suites -----------------------------------------------------

namespace detail {

struct HankelCase {
  std::string name;
  double order;
  double r_max, kappa_max;
  int nodes_r, nodes_k;
  std::function<double(double)> f;
  std::function<double(double)> closed_form;  // transform, if known
  bool reciprocity;   // smooth rapid decay: double transform is testable
  double parseval_tail;  // analytic |g|^2 mass beyond kappa_max
};

inline std::vector<HankelCase> hankel_suite() {
  std::vector<HankelCase> cases;
  // exp_sine: nu = 1/2 reduces to the sine transform of e^{-r}. Spectral
  // content decays only like 1/kappa, so the double transform converges too
  // slowly near the origin to test; the closed form and the tail-corrected
  // Parseval identity stand in for it.
  {
    HankelCase c;
    c.name = "exp_sine";
    c.order = 0.5;
    c.r_max = 40.0;
    c.kappa_max = 50.0;
    c.nodes_r = 4096;
    c.nodes_k = 2048;
    c.f = [](double r) { return std::exp(-r); };
    c.closed_form = [](double k) {
      return std::sqrt(2.0 / M_PI) * k / (1.0 + k * k);
    };
    c.reciprocity = false;
    // int_K^inf (2/pi) k^2/(1+k^2)^2 dk in closed form
    const double K = c.kappa_max;
    c.parseval_tail =
        (2.0 / M_PI) * 0.5 * ((M_PI / 2.0 - std::atan(K)) + K / (1.0 + K * K));
    cases.push_back(std::move(c));
  }
  // gaussian profiles r^{nu+1/2} e^{-r^2/2}: fixed points of the transform
  for (const auto& [name, nu] : std::vector<std::pair<std::string, double>>{
           {"gauss_nu0", 0.0}, {"gauss_nu1", 1.0}, {"gauss_nu32", 1.5}}) {
    HankelCase c;
    c.name = name;
    c.order = nu;
    c.r_max = 12.0;
    c.kappa_max = 12.0;
    c.nodes_r = 512;
    c.nodes_k = 512;
    c.f = [nu](double r) { return std::pow(r, nu + 0.5) * std::exp(-0.5 * r * r); };
    c.closed_form = c.f;
    c.reciprocity = true;
    c.parseval_tail = 0.0;
    cases.push_back(std::move(c));
  }
  // smooth compactly supported bump on (1, 5), nu = 0; no closed form
  {
    HankelCase c;
    c.name = "bump";
    c.order = 0.0;
    c.r_max = 5.5;
    c.kappa_max = 200.0;
    c.nodes_r = 1536;
    c.nodes_k = 1536;
    c.f = [](double r) {
      const double u = (r - 3.0) / 2.0;
      if (std::abs(u) >= 1.0) return 0.0;
      return std::sqrt(r) * std::exp(-1.0 / (1.0 - u * u));
    };
    c.closed_form = nullptr;
    c.reciprocity = true;
    c.parseval_tail = 0.0;
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace detail

/// Expansion-convergence and Hankel validation suites; per-case error tables.
inline RunSummary run_validation_suites(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunSummary summary;
  summary.kind = kind_name(cfg.kind);
  summary.config_hash_hex = hex64(config_hash(cfg.raw));

  if (cfg.kind == Kind::expansion_check) {
    const int d = cfg.dim == 1 ? 2 : cfg.dim;  // expansion needs d in {2, 3}
    const double kmax =
        cfg.kappa_max > 0.0 ? cfg.kappa_max : 40.0 * cfg.theta0.alpha;
    const kernels::CovarianceModel model(cfg.theta0, d);
    const spectral::ExpansionConfig ecfg(cfg.max_degree, kmax, cfg.kappa_panels, d);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> rad(0.2, 3.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    io::CsvTable table;
    table.header = {"pair", "r1", "r2", "cos_angle", "value", "oracle", "abs_err"};
    double max_err = 0.0;
    for (int p = 0; p < cfg.expansion_pairs; ++p) {
      Eigen::VectorXd u(d), v(d);
      for (int k = 0; k < d; ++k) {
        u[k] = gauss(rng);
        v[k] = gauss(rng);
      }
      u.normalize();
      v.normalize();
      const double r1 = rad(rng), r2 = rad(rng);
      const Eigen::VectorXd x = r1 * u, y = r2 * v;
      const double value = spectral::isotropic_expansion(model, ecfg, x, y);
      const double oracle = kernels::kernel_eval(model, (x - y).norm());
      const double err = std::abs(value - oracle);
      max_err = std::max(max_err, err);
      table.add_row({static_cast<double>(p), r1, r2, u.dot(v), value, oracle, err});
    }
    io::write_csv(cfg.out_dir + "/expansion_errors.csv", table);
    summary.pass = max_err < cfg.thresholds.expansion_max_err;
    summary.stats["max_abs_err"] = max_err;
    summary.stats["threshold"] = cfg.thresholds.expansion_max_err;
    summary.stats["max_degree"] = cfg.max_degree;
    summary.artifacts = {"expansion_errors.csv"};
  } else if (cfg.kind == Kind::hankel_check) {
    auto suite = detail::hankel_suite();
    if (!(cfg.hankel_cases.size() == 1 && cfg.hankel_cases[0] == "*")) {
      std::vector<detail::HankelCase> picked;
      for (const auto& want : cfg.hankel_cases) {
        bool found = false;
        for (auto& c : suite)
          if (c.name == want) {
            picked.push_back(c);
            found = true;
          }
        if (!found) throw ConfigError("unknown hankel case: " + want);
      }
      suite = std::move(picked);
    }
    io::CsvTable table;
    table.header = {"case", "metric", "value", "threshold"};
    summary.pass = true;
    json per_case = json::array();
    for (const auto& c : suite) {
      const auto plan = spectral::make_plan(c.order, c.r_max, c.nodes_r, c.kappa_max,
                                            c.nodes_k);
      const auto f = spectral::sample(plan.radial, c.f);
      const auto g = spectral::hankel_1d(plan, f);
      json rec;
      rec["case"] = c.name;
      bool case_pass = true;

      const double mass_f = spectral::square_mass(f);
      const double mass_g = spectral::square_mass(g) + c.parseval_tail;
      const double parseval = std::abs(mass_f - mass_g);
      table.add_row(
          {std::string(c.name), std::string("parseval_mismatch"),
           io::format_double(parseval), io::format_double(cfg.thresholds.hankel_parseval)});
      rec["parseval_mismatch"] = parseval;
      case_pass = case_pass && parseval < cfg.thresholds.hankel_parseval;

      if (c.closed_form) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < g.grid.size(); ++i) {
          const double ref = c.closed_form(g.grid.nodes[i]);
          num += g.grid.weights[i] * (g.values[i] - ref) * (g.values[i] - ref);
          den += g.grid.weights[i] * ref * ref;
        }
        const double rel = std::sqrt(num / den);
        table.add_row({std::string(c.name), std::string("closed_form_rel_err"),
                       io::format_double(rel),
                       io::format_double(cfg.thresholds.hankel_recip_rel)});
        rec["closed_form_rel_err"] = rel;
        case_pass = case_pass && rel < cfg.thresholds.hankel_recip_rel;
      }
      if (c.reciprocity) {
        const auto back = spectral::hankel_1d(plan.swapped(), g);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < f.grid.size(); ++i) {
          num += f.grid.weights[i] * (back.values[i] - f.values[i]) *
                 (back.values[i] - f.values[i]);
          den += f.grid.weights[i] * f.values[i] * f.values[i];
        }
        const double rel = std::sqrt(num / den);
        table.add_row({std::string(c.name), std::string("reciprocity_rel_err"),
                       io::format_double(rel),
                       io::format_double(cfg.thresholds.hankel_recip_rel)});
        rec["reciprocity_rel_err"] = rel;
        case_pass = case_pass && rel < cfg.thresholds.hankel_recip_rel;
      }
      rec["pass"] = case_pass;
      summary.pass = summary.pass && case_pass;
      per_case.push_back(rec);
    }
    io::write_csv(cfg.out_dir + "/hankel_errors.csv", table);
    summary.stats["cases"] = per_case;
    summary.artifacts = {"hankel_errors.csv"};
  } else {
    throw ConfigError("run_validation_suites: kind must be expansion_check or "
                      "hankel_check");
  }
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(cfg, summary);
  return summary;
}

/// Materialize the configured design and dump it with coverage diagnostics.
inline RunSummary dump_design(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.design.type.empty()) throw ConfigError("dump_design: design required");
  const sampling::PointSet ps =
      detail::make_design(cfg.design, cfg.dim, replicate_seed(cfg.seed, 0), 0);
  io::write_point_set(cfg.out_dir + "/points.csv", ps);
  double r_max = 0.0;
  for (Eigen::Index i = 0; i < ps.size(); ++i)
    r_max = std::max(r_max, ps.points.row(i).norm());
  const auto radii = sampling::radii_coverage(ps, std::max(r_max, 1e-12));
  RunSummary summary;
  summary.kind = kind_name(cfg.kind);
  summary.config_hash_hex = hex64(config_hash(cfg.raw));
  summary.stats["n"] = ps.size();
  summary.stats["dim"] = ps.dim;
  summary.stats["provenance"] = sampling::provenance_name(ps.provenance);
  summary.stats["r_max"] = r_max;
  summary.stats["max_radial_gap"] = radii.max_gap;
  summary.artifacts = {"points.csv"};
  summary.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_summary(cfg, summary);
  return summary;
}

/// Dispatch on the configured experiment kind.
inline RunSummary run(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  switch (cfg.kind) {
    case Kind::orthogonality: return run_orthogonality(cfg);
    case Kind::consistency: return run_consistency(cfg);
    case Kind::bounded_contrast: return run_bounded_contrast(cfg);
    case Kind::expansion_check:
    case Kind::hankel_check: return run_validation_suites(cfg);
    case Kind::dump_design: return dump_design(cfg);
  }
  throw ConfigError("unhandled experiment kind");
}

}  // namespace orthofield::experiments
