#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlcs/greedy.hpp"
#include "qlcs/operators.hpp"
#include "qlcs/thresholding.hpp"

namespace qlcs {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EnsembleKind {
  gaussian_matrix,
  lipschitz_perturbed,
  rank1_phase,
  rankm_projector_phase,
  nearly_isometric,
  asteroseismology
};

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::gaussian_matrix;
  Eigen::Index n = 1;
  Eigen::Index d = 1;
  Eigen::Index m = 1;           // projector rank
  double epsilon = 1.0;         // perturbation strength
  std::uint64_t seed = 0;       // construction seed (combined with per-trial seeds)
  std::string a1_normalize = "by_sqrt_n";
  double a1_scale = 1.0;        // extra scale on A1 (Fig. 6 leaves the variance open)
  std::string a2 = "identity";  // identity | gaussian
  std::string profile = "inverse_quadratic";
  std::string field = "real";       // rank1: real | complex (complex used via the library API)
  std::string vectors = "gaussian"; // rank1: gaussian | unit_sphere
  double theta = 0.3;               // asteroseismology inclination
  double window_lo = -2.5;
  double window_hi = 2.5;
};

// Alpha selection for the soft-thresholding experiments:
// alpha_0 = factor * ||F(0)^T b||_inf, then `stages` continuation stages
// shrinking alpha by stage_shrink each time.
struct AlphaRule {
  double factor = 0.1;
  int stages = 1;
  double stage_shrink = 0.5;
};

struct GridSpec {
  int k_min = 1;
  int k_max = 10;
  double norm_min = 0.01;
  double norm_max = 1.0;
  int norm_count = 10;
  std::string norm_spacing = "log";
};

struct Fig1ConfigSpec {
  Eigen::Index k = 2;
  std::vector<double> thresholds = {0.5, 2.0, 8.0};  // low/mid/high sweep
  int angular_points = 180;
  int polar_points = 40;
  int draws = 50;
  double xhat_angle_deg = 33.7;
  double xhat_polar_deg = 61.3;
  double p = 1.0;
};

struct Fig4Spec {
  int k_min = 1;
  int k_max = 6;
  double success_rel_tol = 1e-3;
};

struct Fig6Spec {
  double success_rel_tol = 1e-2;
  double success_floor = 0.01;
};

struct AsteroExperimentSpec {
  int seeds = 10;
  Eigen::Index freq_max = 10;  // low-frequency band the sparse supports are drawn from
  int contour_points = 400;
  double decay_ratio = 0.5;
  double amp_min = 0.5;
  double amp_span = 1.0;
};

struct ProbeSpec {
  int trials = 2000;
  Eigen::Index k = 2;
};

struct SingleRunSpec {
  Eigen::Index k = 1;
  double norm = 1.0;
  std::string signal = "sparse_gaussian";  // sparse_gaussian | sparse_decaying
  double decay_ratio = 0.5;
};

struct ExperimentConfig {
  std::string experiment;  // fig1_ratemap | fig4_phase_greedy | fig6_threshold_grid | astero_demo | probe_suite
  std::string rng = "mt19937_64";
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 0;  // 0 = hardware concurrency
  int trials = 50;
  EnsembleSpec ensemble;
  GreedyConfig greedy;
  IHTConfig iht;
  ISTConfig ist;
  AlphaRule alpha_rule;
  GridSpec grid;
  Fig1ConfigSpec fig1;
  Fig4Spec fig4;
  Fig6Spec fig6;
  AsteroExperimentSpec astero;
  ProbeSpec probe;
  SingleRunSpec single;
};

namespace detail {

inline void require_known_keys(const nlohmann::json& j, const std::string& section,
                               const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    if (allowed.find(item.key()) == allowed.end())
      throw ConfigError("unknown config key '" + (section.empty() ? item.key() : section + "." + item.key()) + "'");
  }
}

template <class T>
T fetch(const nlohmann::json& j, const std::string& section, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + section + "." + key + "': " + e.what());
  }
}

}  // namespace detail

inline EnsembleKind parse_ensemble_kind(const std::string& s) {
  if (s == "gaussian_matrix") return EnsembleKind::gaussian_matrix;
  if (s == "lipschitz_perturbed") return EnsembleKind::lipschitz_perturbed;
  if (s == "rank1_phase") return EnsembleKind::rank1_phase;
  if (s == "rankm_projector_phase") return EnsembleKind::rankm_projector_phase;
  if (s == "nearly_isometric") return EnsembleKind::nearly_isometric;
  if (s == "asteroseismology") return EnsembleKind::asteroseismology;
  throw ConfigError("unknown ensemble kind '" + s + "'");
}

inline std::string ensemble_kind_name(EnsembleKind k) {
  switch (k) {
    case EnsembleKind::gaussian_matrix: return "gaussian_matrix";
    case EnsembleKind::lipschitz_perturbed: return "lipschitz_perturbed";
    case EnsembleKind::rank1_phase: return "rank1_phase";
    case EnsembleKind::rankm_projector_phase: return "rankm_projector_phase";
    case EnsembleKind::nearly_isometric: return "nearly_isometric";
    case EnsembleKind::asteroseismology: return "asteroseismology";
  }
  return "?";
}

inline EnsembleSpec parse_ensemble(const nlohmann::json& j) {
  using detail::fetch;
  detail::require_known_keys(j, "ensemble",
                             {"kind", "n", "d", "m", "epsilon", "seed", "a1_normalize", "a1_scale",
                              "a2", "profile", "field", "vectors", "theta", "window_lo", "window_hi"});
  EnsembleSpec e;
  if (!j.contains("kind")) throw ConfigError("ensemble.kind is required");
  e.kind = parse_ensemble_kind(j.at("kind").get<std::string>());
  e.n = fetch<Eigen::Index>(j, "ensemble", "n", e.n);
  e.d = fetch<Eigen::Index>(j, "ensemble", "d", e.d);
  e.m = fetch<Eigen::Index>(j, "ensemble", "m", e.m);
  e.epsilon = fetch<double>(j, "ensemble", "epsilon", e.epsilon);
  e.seed = fetch<std::uint64_t>(j, "ensemble", "seed", e.seed);
  e.a1_normalize = fetch<std::string>(j, "ensemble", "a1_normalize", e.a1_normalize);
  e.a1_scale = fetch<double>(j, "ensemble", "a1_scale", e.a1_scale);
  e.a2 = fetch<std::string>(j, "ensemble", "a2", e.a2);
  e.profile = fetch<std::string>(j, "ensemble", "profile", e.profile);
  e.field = fetch<std::string>(j, "ensemble", "field", e.field);
  e.vectors = fetch<std::string>(j, "ensemble", "vectors", e.vectors);
  e.theta = fetch<double>(j, "ensemble", "theta", e.theta);
  e.window_lo = fetch<double>(j, "ensemble", "window_lo", e.window_lo);
  e.window_hi = fetch<double>(j, "ensemble", "window_hi", e.window_hi);
  if (e.n < 1 || e.d < 1) throw ConfigError("ensemble dimensions must be >= 1");
  if (e.kind == EnsembleKind::rankm_projector_phase && (e.m < 1 || e.m > e.d))
    throw ConfigError("ensemble.m must satisfy 1 <= m <= d");
  if (e.a1_normalize != "none" && e.a1_normalize != "by_sqrt_n")
    throw ConfigError("ensemble.a1_normalize must be 'none' or 'by_sqrt_n'");
  if (e.a2 != "identity" && e.a2 != "gaussian") throw ConfigError("ensemble.a2 must be 'identity' or 'gaussian'");
  if (e.profile != "inverse_quadratic" && e.profile != "saturating_quadratic")
    throw ConfigError("unknown perturbation profile '" + e.profile + "'");
  return e;
}

// Builds the real-field operator for an ensemble; `seed` augments the spec's
// own seed so grid cells can redraw operators deterministically.
inline std::unique_ptr<QuasiLinearOperator<double>> make_operator(const EnsembleSpec& e,
                                                                  std::uint64_t seed) {
  const std::uint64_t s = derive_seed(e.seed, 0x09e1ab1e, seed);
  const auto normalize =
      e.a1_normalize == "by_sqrt_n" ? GaussianNormalize::by_sqrt_n : GaussianNormalize::none;
  switch (e.kind) {
    case EnsembleKind::gaussian_matrix:
      return std::make_unique<LinearOperator<double>>(e.a1_scale * make_gaussian(e.n, e.d, s, normalize));
    case EnsembleKind::lipschitz_perturbed: {
      Eigen::MatrixXd a1 = e.a1_scale * make_gaussian(e.n, e.d, s, normalize);
      Eigen::MatrixXd a2 = e.a2 == "identity"
                               ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(e.n, e.d))
                               : make_gaussian(e.n, e.d, derive_seed(s, 2), normalize);
      const PerturbationProfile profile = e.profile == "saturating_quadratic"
                                              ? saturating_quadratic_profile()
                                              : inverse_quadratic_profile();
      return std::make_unique<LipschitzPerturbedOperator>(std::move(a1), std::move(a2), e.epsilon,
                                                          Eigen::VectorXd::Zero(e.d), profile);
    }
    case EnsembleKind::rank1_phase:
      return std::make_unique<Rank1PhaseOperator<double>>(
          e.n, e.d, s,
          e.vectors == "unit_sphere" ? PhaseVectorKind::unit_sphere : PhaseVectorKind::gaussian);
    case EnsembleKind::rankm_projector_phase:
      return std::make_unique<RankMProjectorPhaseOperator>(e.n, e.d, e.m, s);
    case EnsembleKind::nearly_isometric:
      return std::make_unique<NearlyIsometricOperator>(e.n, e.d, s);
    case EnsembleKind::asteroseismology: {
      AsteroParams p;
      p.n = e.n;
      p.d = e.d;
      p.theta = e.theta;
      p.window_lo = e.window_lo;
      p.window_hi = e.window_hi;
      p.seed = s;
      return std::make_unique<AsteroseismologyOperator>(p);
    }
  }
  throw ConfigError("unhandled ensemble kind");
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::fetch;
  detail::require_known_keys(j, "",
                             {"experiment", "rng", "seed", "out", "threads", "trials", "ensemble",
                              "greedy", "iht", "ist", "grid", "fig1", "fig4", "fig6", "astero",
                              "probe", "single"});
  ExperimentConfig c;
  c.experiment = fetch<std::string>(j, "", "experiment", "");
  c.rng = fetch<std::string>(j, "", "rng", c.rng);
  if (c.rng != "mt19937_64")
    throw ConfigError("rng must be 'mt19937_64' (the only stream algorithm this build reproduces)");
  c.seed = fetch<std::uint64_t>(j, "", "seed", c.seed);
  c.out = fetch<std::string>(j, "", "out", c.out);
  c.threads = fetch<int>(j, "", "threads", c.threads);
  c.trials = fetch<int>(j, "", "trials", c.trials);
  if (c.trials < 1) throw ConfigError("trials must be >= 1");

  if (j.contains("ensemble")) c.ensemble = parse_ensemble(j.at("ensemble"));

  if (j.contains("greedy")) {
    const auto& g = j.at("greedy");
    detail::require_known_keys(g, "greedy",
                               {"p", "k_max", "residual_tol", "subsolver", "starts", "max_iters",
                                "step_tol", "init_scale", "threads", "warm_refinements", "polish"});
    c.greedy.p = fetch<double>(g, "greedy", "p", c.greedy.p);
    c.greedy.k_max = fetch<Eigen::Index>(g, "greedy", "k_max", c.greedy.k_max);
    c.greedy.residual_tol = fetch<double>(g, "greedy", "residual_tol", c.greedy.residual_tol);
    c.greedy.threads = fetch<int>(g, "greedy", "threads", c.greedy.threads);
    const std::string sub = fetch<std::string>(g, "greedy", "subsolver", "multistart_local");
    if (sub == "linear_least_squares")
      c.greedy.subsolver.kind = SubsolverConfig::Kind::linear_least_squares;
    else if (sub == "multistart_local")
      c.greedy.subsolver.kind = SubsolverConfig::Kind::multistart_local;
    else
      throw ConfigError("greedy.subsolver must be 'linear_least_squares' or 'multistart_local'");
    c.greedy.subsolver.starts = fetch<int>(g, "greedy", "starts", c.greedy.subsolver.starts);
    c.greedy.subsolver.max_iters = fetch<int>(g, "greedy", "max_iters", c.greedy.subsolver.max_iters);
    c.greedy.subsolver.step_tol = fetch<double>(g, "greedy", "step_tol", c.greedy.subsolver.step_tol);
    c.greedy.subsolver.init_scale = fetch<double>(g, "greedy", "init_scale", c.greedy.subsolver.init_scale);
    c.greedy.subsolver.warm_refinements =
        fetch<int>(g, "greedy", "warm_refinements", c.greedy.subsolver.warm_refinements);
    c.greedy.polish = fetch<bool>(g, "greedy", "polish", c.greedy.polish);
  }

  if (j.contains("iht")) {
    const auto& h = j.at("iht");
    detail::require_known_keys(h, "iht", {"k", "mu", "max_iters", "stop_tol", "mu_refresh_every"});
    c.iht.k = fetch<Eigen::Index>(h, "iht", "k", c.iht.k);
    c.iht.mu = fetch<double>(h, "iht", "mu", c.iht.mu);
    c.iht.max_iters = fetch<int>(h, "iht", "max_iters", c.iht.max_iters);
    c.iht.stop_tol = fetch<double>(h, "iht", "stop_tol", c.iht.stop_tol);
    c.iht.mu_refresh_every = fetch<int>(h, "iht", "mu_refresh_every", c.iht.mu_refresh_every);
  }

  if (j.contains("ist")) {
    const auto& s = j.at("ist");
    detail::require_known_keys(s, "ist",
                               {"alpha", "max_iters", "stop_tol", "divergence_factor", "alpha_rule"});
    c.ist.alpha = fetch<double>(s, "ist", "alpha", c.ist.alpha);
    c.ist.max_iters = fetch<int>(s, "ist", "max_iters", c.ist.max_iters);
    c.ist.stop_tol = fetch<double>(s, "ist", "stop_tol", c.ist.stop_tol);
    c.ist.divergence_factor = fetch<double>(s, "ist", "divergence_factor", c.ist.divergence_factor);
    if (s.contains("alpha_rule")) {
      const auto& r = s.at("alpha_rule");
      detail::require_known_keys(r, "ist.alpha_rule", {"factor", "stages", "stage_shrink"});
      c.alpha_rule.factor = fetch<double>(r, "ist.alpha_rule", "factor", c.alpha_rule.factor);
      c.alpha_rule.stages = fetch<int>(r, "ist.alpha_rule", "stages", c.alpha_rule.stages);
      c.alpha_rule.stage_shrink = fetch<double>(r, "ist.alpha_rule", "stage_shrink", c.alpha_rule.stage_shrink);
      if (c.alpha_rule.stages < 1) throw ConfigError("ist.alpha_rule.stages must be >= 1");
      if (!(c.alpha_rule.stage_shrink > 0.0 && c.alpha_rule.stage_shrink < 1.0))
        throw ConfigError("ist.alpha_rule.stage_shrink must lie in (0,1)");
    }
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    detail::require_known_keys(g, "grid",
                               {"k_min", "k_max", "norm_min", "norm_max", "norm_count", "norm_spacing"});
    c.grid.k_min = fetch<int>(g, "grid", "k_min", c.grid.k_min);
    c.grid.k_max = fetch<int>(g, "grid", "k_max", c.grid.k_max);
    c.grid.norm_min = fetch<double>(g, "grid", "norm_min", c.grid.norm_min);
    c.grid.norm_max = fetch<double>(g, "grid", "norm_max", c.grid.norm_max);
    c.grid.norm_count = fetch<int>(g, "grid", "norm_count", c.grid.norm_count);
    c.grid.norm_spacing = fetch<std::string>(g, "grid", "norm_spacing", c.grid.norm_spacing);
    if (c.grid.k_min < 1 || c.grid.k_max < c.grid.k_min) throw ConfigError("grid k range is empty");
    if (c.grid.norm_count < 1) throw ConfigError("grid.norm_count must be >= 1");
    if (c.grid.norm_spacing != "log" && c.grid.norm_spacing != "linear")
      throw ConfigError("grid.norm_spacing must be 'log' or 'linear'");
  }

  if (j.contains("fig1")) {
    const auto& f = j.at("fig1");
    detail::require_known_keys(f, "fig1",
                               {"k", "thresholds", "angular_points", "polar_points", "draws",
                                "xhat_angle_deg", "xhat_polar_deg", "p"});
    c.fig1.k = fetch<Eigen::Index>(f, "fig1", "k", c.fig1.k);
    c.fig1.thresholds = fetch<std::vector<double>>(f, "fig1", "thresholds", c.fig1.thresholds);
    c.fig1.angular_points = fetch<int>(f, "fig1", "angular_points", c.fig1.angular_points);
    c.fig1.polar_points = fetch<int>(f, "fig1", "polar_points", c.fig1.polar_points);
    c.fig1.draws = fetch<int>(f, "fig1", "draws", c.fig1.draws);
    c.fig1.xhat_angle_deg = fetch<double>(f, "fig1", "xhat_angle_deg", c.fig1.xhat_angle_deg);
    c.fig1.xhat_polar_deg = fetch<double>(f, "fig1", "xhat_polar_deg", c.fig1.xhat_polar_deg);
    c.fig1.p = fetch<double>(f, "fig1", "p", c.fig1.p);
    if (c.fig1.thresholds.empty()) throw ConfigError("fig1.thresholds must be nonempty");
  }

  if (j.contains("fig4")) {
    const auto& f = j.at("fig4");
    detail::require_known_keys(f, "fig4", {"k_min", "k_max", "success_rel_tol"});
    c.fig4.k_min = fetch<int>(f, "fig4", "k_min", c.fig4.k_min);
    c.fig4.k_max = fetch<int>(f, "fig4", "k_max", c.fig4.k_max);
    c.fig4.success_rel_tol = fetch<double>(f, "fig4", "success_rel_tol", c.fig4.success_rel_tol);
  }

  if (j.contains("fig6")) {
    const auto& f = j.at("fig6");
    detail::require_known_keys(f, "fig6", {"success_rel_tol", "success_floor"});
    c.fig6.success_rel_tol = fetch<double>(f, "fig6", "success_rel_tol", c.fig6.success_rel_tol);
    c.fig6.success_floor = fetch<double>(f, "fig6", "success_floor", c.fig6.success_floor);
  }

  if (j.contains("astero")) {
    const auto& a = j.at("astero");
    detail::require_known_keys(a, "astero",
                               {"seeds", "freq_max", "contour_points", "decay_ratio", "amp_min", "amp_span"});
    c.astero.seeds = fetch<int>(a, "astero", "seeds", c.astero.seeds);
    c.astero.freq_max = fetch<Eigen::Index>(a, "astero", "freq_max", c.astero.freq_max);
    c.astero.contour_points = fetch<int>(a, "astero", "contour_points", c.astero.contour_points);
    c.astero.decay_ratio = fetch<double>(a, "astero", "decay_ratio", c.astero.decay_ratio);
    c.astero.amp_min = fetch<double>(a, "astero", "amp_min", c.astero.amp_min);
    c.astero.amp_span = fetch<double>(a, "astero", "amp_span", c.astero.amp_span);
  }

  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    detail::require_known_keys(p, "probe", {"trials", "k"});
    c.probe.trials = fetch<int>(p, "probe", "trials", c.probe.trials);
    c.probe.k = fetch<Eigen::Index>(p, "probe", "k", c.probe.k);
  }

  if (j.contains("single")) {
    const auto& s = j.at("single");
    detail::require_known_keys(s, "single", {"k", "norm", "signal", "decay_ratio"});
    c.single.k = fetch<Eigen::Index>(s, "single", "k", c.single.k);
    c.single.norm = fetch<double>(s, "single", "norm", c.single.norm);
    c.single.signal = fetch<std::string>(s, "single", "signal", c.single.signal);
    c.single.decay_ratio = fetch<double>(s, "single", "decay_ratio", c.single.decay_ratio);
    if (c.single.signal != "sparse_gaussian" && c.single.signal != "sparse_decaying")
      throw ConfigError("single.signal must be 'sparse_gaussian' or 'sparse_decaying'");
  }

  return c;
}

inline nlohmann::json load_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  try {
    return nlohmann::json::parse(in, nullptr, true, true);  // allow comments
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
}

// --override key=value with a dotted path; the value is parsed as JSON when
// possible and taken as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must look like key=value: " + assignment);
  const std::string keypath = assignment.substr(0, eq);
  const std::string valtext = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(valtext);
  } catch (const nlohmann::json::exception&) {
    value = valtext;
  }
  nlohmann::json* node = &j;
  std::size_t pos = 0;
  for (;;) {
    const auto dot = keypath.find('.', pos);
    const std::string key = keypath.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw ConfigError("override has an empty path segment: " + assignment);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    pos = dot + 1;
  }
}

}  // namespace qlcs
