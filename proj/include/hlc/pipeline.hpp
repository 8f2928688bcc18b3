#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "hlc/errors.hpp"
#include "hlc/evaluation.hpp"
#include "hlc/geometry.hpp"
#include "hlc/io.hpp"
#include "hlc/projection.hpp"
#include "hlc/rng.hpp"
#include "hlc/sampling.hpp"
#include "hlc/shape.hpp"

namespace hlc {

enum class BodyMode { kKnown, kScatter, kHull };
enum class CenterMode { kKnown, kSampleMean, kZero };

struct FitConfig {
  BodyMode body_mode = BodyMode::kKnown;
  std::optional<ConvexBody> K0;  // required for known, base for scatter
  CenterMode center_mode = CenterMode::kSampleMean;
  Vec mu;                        // for center_mode known
  int k_override = 0;            // hull: 0 = default
  int M_override = 0;            // hull: 0 = default split
  int mc_budget = 100000;        // hull volume estimate
  std::uint64_t seed = 0;
  bool use_sample_split = false;  // scatter: body from first half only
};

namespace detail {

inline std::string body_mode_name(BodyMode m) {
  switch (m) {
    case BodyMode::kKnown: return "known";
    case BodyMode::kScatter: return "scatter";
    case BodyMode::kHull: return "hull";
  }
  return "?";
}

inline Model fit_impl(const FitConfig& cfg, const Mat& data) {
  const int N = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (N < 1 || p < 1) throw InputError("fit: empty data");
  if (!data.allFinite()) throw InputError("fit: non-finite data");
  if (cfg.center_mode == CenterMode::kKnown && cfg.mu.size() != p)
    throw ConfigError("fit: center_mode known requires a p-vector mu");

  Model m;
  m.p = p;

  if (cfg.body_mode == BodyMode::kKnown) {
    if (!cfg.K0) throw ConfigError("fit: known mode requires a body");
    if (cfg.K0->dim() != p)
      throw ConfigError("fit: body dimension does not match the data");
    switch (cfg.center_mode) {
      case CenterMode::kKnown: m.mu = cfg.mu; break;
      case CenterMode::kSampleMean: m.mu = data.colwise().mean(); break;
      case CenterMode::kZero: m.mu = Vec::Zero(p); break;
    }
    m.body = *cfg.K0;
  } else if (cfg.body_mode == BodyMode::kScatter) {
    ConvexBody K0 = cfg.K0 ? *cfg.K0 : ConvexBody::ball(p, 1.0);
    if (K0.dim() != p)
      throw ConfigError("fit: body dimension does not match the data");
    const int h = cfg.use_sample_split ? N / 2 : N;
    if (h < 1) throw InputError("fit: not enough rows for the sample split");
    const Mat scatter_rows = data.topRows(h);
    switch (cfg.center_mode) {
      case CenterMode::kKnown: m.mu = cfg.mu; break;
      case CenterMode::kSampleMean:
        m.mu = scatter_rows.colwise().mean();
        break;
      case CenterMode::kZero: m.mu = Vec::Zero(p); break;
    }
    ScatterEstimate est = scatter_about(scatter_rows, m.mu);
    m.body = ConvexBody::linear_image(est.sqrt_cov, std::move(K0));
  } else {
    // hull: last M rows give directions, first n rows give boundary stats
    // and the projection radii
    switch (cfg.center_mode) {
      case CenterMode::kKnown: m.mu = cfg.mu; break;
      case CenterMode::kSampleMean: m.mu = data.colwise().mean(); break;
      case CenterMode::kZero: m.mu = Vec::Zero(p); break;
    }
    Mat centered = data.rowwise() - m.mu.transpose();
    int n_rows, M;
    if (cfg.M_override > 0) {
      M = cfg.M_override;
      n_rows = N - M;
      if (n_rows < 1)
        throw ConfigError("fit: direction override leaves no data rows");
    } else {
      std::tie(n_rows, M) = hull_split(N, p);
    }
    int k = cfg.k_override > 0 ? cfg.k_override : hull_default_k(n_rows);
    if (k > M) throw ConfigError("fit: k exceeds the direction count");
    m.body = estimate_hull(centered.topRows(n_rows), centered.bottomRows(M),
                           k);
  }

  VolumeEstimate vol = volume(m.body, cfg.mc_budget, cfg.seed);
  m.log_volume = vol.log_value;
  m.volume_is_mc = vol.is_mc;
  m.volume_std_error = vol.std_error;

  const int n_radii = (cfg.body_mode == BodyMode::kScatter &&
                       cfg.use_sample_split)
                          ? N - N / 2
                          : (cfg.body_mode == BodyMode::kHull
                                 ? (cfg.M_override > 0
                                        ? N - cfg.M_override
                                        : hull_split(N, p).first)
                                 : N);
  const int first = (cfg.body_mode == BodyMode::kScatter &&
                     cfg.use_sample_split)
                        ? N / 2
                        : 0;
  Vec radii(n_radii);
  for (int i = 0; i < n_radii; ++i)
    radii(i) =
        minkowski(m.body, (data.row(first + i).transpose() - m.mu).eval());

  RadialSample rs = RadialSample::from_raw(radii);
  ObjectiveContext ctx{p, m.log_volume};
  m.generator = fit_projection(ctx, rs);
  validate_model(m);
  return m;
}

}  // namespace detail

inline Model fit(const FitConfig& cfg, const Mat& data) {
  const std::string tag = "fit[" + detail::body_mode_name(cfg.body_mode) +
                          "]: ";
  try {
    return detail::fit_impl(cfg, data);
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const ParseError& e) {
    throw ParseError(tag + e.what());
  } catch (const InputError& e) {
    throw InputError(tag + e.what());
  } catch (const SamplerError& e) {
    throw SamplerError(tag + e.what());
  } catch (const SolverError& e) {
    throw SolverError(tag + e.what());
  }
}

inline void save_model(const std::string& path, const Model& m,
                       std::uint64_t seed = 0, const std::string& mode = "") {
  validate_model(m);
  write_json_file(path, model_to_json(m, seed, mode));
}

inline Model load_model(const std::string& path) {
  return model_from_json(read_json_file(path));
}

struct SimConfig {
  std::vector<int> ps{2};
  std::vector<int> ns{500};
  std::vector<std::string> families{"gauss"};  // gauss | unif | exp
  std::vector<std::string> modes{"known"};     // known | scatter | hull
  int replicates = 1;
  std::uint64_t seed = 0;
  int n_mc = 100000;        // Hellinger MC draws per replicate
  int n_dirs = 256;         // direction budget for body_error
  int volume_budget = 100000;
  bool record_time = false;  // default keeps output byte-stable
  int threads = 1;
  std::optional<ConvexBody> K0;  // default per-cell unit ball
  double unif_r0 = 0.0;          // 0 = use r0 = p
  CenterMode center_known = CenterMode::kZero;      // known-body cells
  CenterMode center_scatter = CenterMode::kSampleMean;
  CenterMode center_hull = CenterMode::kZero;
};

namespace detail {

struct SimCell {
  int p, n;
  std::string family, mode;
};

inline GeneratorFamily family_from_name(const std::string& name, int p,
                                        double unif_r0) {
  if (name == "gauss") return GeneratorFamily::gauss();
  if (name == "exp") return GeneratorFamily::exponential();
  if (name == "unif")
    return GeneratorFamily::unif(unif_r0 > 0.0 ? unif_r0
                                               : static_cast<double>(p));
  throw ConfigError("simulate: unknown family '" + name + "'");
}

inline std::string sanitize_csv(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

// truth body for a cell: known/hull use K0; scatter cells transform it by
// the diagonal sqrt-covariance with ratios 1.2^{j/2} so the scatter
// estimator has real structure to recover
inline ConvexBody sim_truth_body(const SimConfig& cfg, const SimCell& cell) {
  ConvexBody K0 = cfg.K0 ? *cfg.K0 : ConvexBody::ball(cell.p, 1.0);
  if (K0.dim() != cell.p)
    throw ConfigError("simulate: body dimension does not match grid p");
  if (cell.mode != "scatter") return K0;
  Mat D = Mat::Zero(cell.p, cell.p);
  for (int j = 0; j < cell.p; ++j)
    D(j, j) = std::pow(1.2, 0.5 * (j + 1));
  return ConvexBody::linear_image(D, std::move(K0));
}

inline std::string sim_one(const SimConfig& cfg, const SimCell& cell,
                           int cell_idx, int rep) {
  SplitRng base(cfg.seed);
  SplitRng data_rng = base.substream(
      {0x5e11ULL, static_cast<std::uint64_t>(cell_idx),
       static_cast<std::uint64_t>(rep), 1ULL});
  const std::uint64_t rep_seed =
      base.substream({0x5e11ULL, static_cast<std::uint64_t>(cell_idx),
                      static_cast<std::uint64_t>(rep), 2ULL})
          .next_u64();
  SplitRng mc_rng = base.substream(
      {0x5e11ULL, static_cast<std::uint64_t>(cell_idx),
       static_cast<std::uint64_t>(rep), 3ULL});

  std::string out = std::to_string(cell.p) + "," + std::to_string(cell.n) +
                    "," + cell.family + "," + cell.mode + "," +
                    std::to_string(rep) + "," + std::to_string(rep_seed);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    GeneratorFamily fam =
        family_from_name(cell.family, cell.p, cfg.unif_r0);
    ConvexBody truth_body = sim_truth_body(cfg, cell);
    TruthSpec truth = make_truth(fam, truth_body, Vec::Zero(cell.p),
                                 cfg.volume_budget, rep_seed);

    FitConfig fc;
    fc.mc_budget = cfg.volume_budget;
    fc.seed = rep_seed;
    int n_draw = cell.n;
    if (cell.mode == "known") {
      fc.body_mode = BodyMode::kKnown;
      fc.K0 = truth_body;
      fc.center_mode = cfg.center_known;
    } else if (cell.mode == "scatter") {
      fc.body_mode = BodyMode::kScatter;
      fc.K0 = cfg.K0 ? *cfg.K0 : ConvexBody::ball(cell.p, 1.0);
      fc.center_mode = cfg.center_scatter;
    } else if (cell.mode == "hull") {
      fc.body_mode = BodyMode::kHull;
      fc.center_mode = cfg.center_hull;
      fc.M_override = hull_default_M(cell.n, cell.p);
      n_draw = cell.n + fc.M_override;
    } else {
      throw ConfigError("simulate: unknown mode '" + cell.mode + "'");
    }
    if (fc.center_mode == CenterMode::kKnown) fc.mu = Vec::Zero(cell.p);

    Mat data = sample_density(fam, truth_body, Vec::Zero(cell.p), n_draw,
                              data_rng);
    Model model = fit(fc, data);

    const Mat fit_rows = data.topRows(cell.n);
    Dx2 d = dx2(model, truth, fit_rows);
    HellingerMc h = hellinger_sq_mc(model, truth, cfg.n_mc, mc_rng);

    std::string body_err;
    if (cell.mode != "known") {
      const std::uint64_t dir_seed =
          base.substream({0x5e11ULL, static_cast<std::uint64_t>(cell_idx),
                          static_cast<std::uint64_t>(rep), 4ULL})
              .next_u64();
      body_err = format_float(
          body_error(model.body, truth_body, cfg.n_dirs, dir_seed));
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double ms =
        cfg.record_time
            ? std::chrono::duration<double, std::milli>(t1 - t0).count()
            : 0.0;
    out += "," + format_float(d.value) + "," + format_float(h.estimate) +
           "," + format_float(h.std_error) + "," + body_err + "," +
           format_float(ms) + ",";
  } catch (const std::exception& e) {
    out += ",,,,,0," + sanitize_csv(e.what());
  }
  return out + "\n";
}

}  // namespace detail

inline const char* kSimHeader =
    "p,n,family,mode,rep,seed,dx2,hell2,hell2_se,body_err,time_ms,error";

// full grid run; rows in deterministic (cell, replicate) order regardless of
// the thread count
inline std::string simulate(const SimConfig& cfg) {
  if (cfg.replicates < 1)
    throw ConfigError("simulate: replicates must be >= 1");
  if (cfg.threads < 1) throw ConfigError("simulate: threads must be >= 1");
  if (cfg.n_mc < 2) throw ConfigError("simulate: n_mc must be >= 2");
  if (cfg.n_dirs < 1) throw ConfigError("simulate: n_dirs must be >= 1");
  if (cfg.volume_budget < 1)
    throw ConfigError("simulate: volume_budget must be >= 1");
  std::vector<detail::SimCell> cells;
  for (int p : cfg.ps)
    for (int n : cfg.ns)
      for (const auto& fam : cfg.families)
        for (const auto& mode : cfg.modes)
          cells.push_back({p, n, fam, mode});
  if (cells.empty()) throw ConfigError("simulate: empty grid");

  struct Job {
    int cell_idx, rep;
  };
  std::vector<Job> jobs;
  for (int c = 0; c < static_cast<int>(cells.size()); ++c)
    for (int r = 0; r < cfg.replicates; ++r) jobs.push_back({c, r});

  std::vector<std::string> rows(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      rows[i] = detail::sim_one(cfg, cells[jobs[i].cell_idx],
                                jobs[i].cell_idx, jobs[i].rep);
    }
  };
  if (cfg.threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::string csv = std::string(kSimHeader) + "\n";
  for (const auto& r : rows) csv += r;
  return csv;
}

inline FitConfig fit_config_from_json(const Json& j) {
  FitConfig c;
  const std::string mode_s = [&] {
    const Json& f = detail::require_field(j, "body_mode", "");
    if (!f.is_string()) throw ParseError("expected string at /body_mode");
    return f.get<std::string>();
  }();
  if (mode_s == "known")
    c.body_mode = BodyMode::kKnown;
  else if (mode_s == "scatter")
    c.body_mode = BodyMode::kScatter;
  else if (mode_s == "hull")
    c.body_mode = BodyMode::kHull;
  else
    throw ParseError("unknown body_mode '" + mode_s + "' at /body_mode");

  if (j.contains("body")) c.K0 = body_from_json(j["body"], "/body");
  if (c.body_mode == BodyMode::kKnown && !c.K0)
    throw ParseError("body_mode known requires /body");

  std::string center_s = "sample_mean";
  if (j.contains("center_mode")) {
    if (!j["center_mode"].is_string())
      throw ParseError("expected string at /center_mode");
    center_s = j["center_mode"].get<std::string>();
  }
  if (center_s == "known") {
    c.center_mode = CenterMode::kKnown;
    c.mu = detail::as_vector(detail::require_field(j, "mu", ""), "/mu");
  } else if (center_s == "sample_mean") {
    c.center_mode = CenterMode::kSampleMean;
  } else if (center_s == "zero") {
    c.center_mode = CenterMode::kZero;
  } else {
    throw ParseError("unknown center_mode '" + center_s +
                     "' at /center_mode");
  }

  if (j.contains("k")) c.k_override = detail::as_int(j["k"], "/k");
  if (j.contains("M")) c.M_override = detail::as_int(j["M"], "/M");
  if (j.contains("mc_budget"))
    c.mc_budget = detail::as_int(j["mc_budget"], "/mc_budget");
  if (c.mc_budget < 1) throw ParseError("mc_budget must be >= 1 at /mc_budget");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ParseError("expected integer at /seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("use_sample_split")) {
    if (!j["use_sample_split"].is_boolean())
      throw ParseError("expected boolean at /use_sample_split");
    c.use_sample_split = j["use_sample_split"].get<bool>();
  }
  return c;
}

inline SimConfig sim_config_from_json(const Json& j) {
  SimConfig c;
  auto int_list = [&](const char* key) {
    const Json& f = detail::require_field(j, key, "");
    if (!f.is_array() || f.empty())
      throw ParseError(std::string("expected non-empty array at /") + key);
    std::vector<int> v;
    for (size_t i = 0; i < f.size(); ++i)
      v.push_back(detail::as_int(
          f[i], std::string("/") + key + "/" + std::to_string(i)));
    return v;
  };
  auto str_list = [&](const char* key) {
    const Json& f = detail::require_field(j, key, "");
    if (!f.is_array() || f.empty())
      throw ParseError(std::string("expected non-empty array at /") + key);
    std::vector<std::string> v;
    for (size_t i = 0; i < f.size(); ++i) {
      if (!f[i].is_string())
        throw ParseError(std::string("expected string at /") + key + "/" +
                         std::to_string(i));
      v.push_back(f[i].get<std::string>());
    }
    return v;
  };
  c.ps = int_list("ps");
  c.ns = int_list("ns");
  c.families = str_list("families");
  c.modes = str_list("modes");
  c.replicates = detail::as_int(
      detail::require_field(j, "replicates", ""), "/replicates");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer())
      throw ParseError("expected integer at /seed");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("n_mc")) c.n_mc = detail::as_int(j["n_mc"], "/n_mc");
  if (j.contains("n_dirs")) c.n_dirs = detail::as_int(j["n_dirs"], "/n_dirs");
  if (j.contains("volume_budget"))
    c.volume_budget = detail::as_int(j["volume_budget"], "/volume_budget");
  if (j.contains("record_time")) {
    if (!j["record_time"].is_boolean())
      throw ParseError("expected boolean at /record_time");
    c.record_time = j["record_time"].get<bool>();
  }
  if (j.contains("threads"))
    c.threads = detail::as_int(j["threads"], "/threads");
  if (j.contains("body")) c.K0 = body_from_json(j["body"], "/body");
  if (j.contains("unif_r0"))
    c.unif_r0 = detail::as_number(j["unif_r0"], "/unif_r0");
  return c;
}

}  // namespace hlc
