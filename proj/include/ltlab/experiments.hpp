#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltlab/config.hpp"
#include "ltlab/csv.hpp"
#include "ltlab/errors.hpp"
#include "ltlab/excursion.hpp"
#include "ltlab/gff.hpp"
#include "ltlab/green.hpp"
#include "ltlab/jobs.hpp"
#include "ltlab/stats.hpp"
#include "ltlab/torus.hpp"
#include "ltlab/walker.hpp"

#ifndef LTLAB_VERSION
#define LTLAB_VERSION "0.0.0"
#endif

namespace ltlab {

struct ThickThinQuery {
  double theta = 1.0;
  double eta = 0.5;
  bool thick = true;  // false = thin; thin predictions are vacuous for theta <= 1
};

// Predicted log-log census exponents. The thin-side square root is clamped at
// zero (count predictions vanish beyond that point anyway).
inline double thick_exponent(double theta, double eta) {
  double a = std::sqrt(theta);
  double d = std::sqrt(theta + 2.0 * eta * a) - a;
  return 2.0 - 2.0 * d * d;
}

inline double thin_exponent(double theta, double eta) {
  double a = std::sqrt(theta);
  double arg = theta - 2.0 * eta * a;
  double d = arg > 0 ? a - std::sqrt(arg) : a;
  return 2.0 - 2.0 * d * d;
}

inline double census_threshold_norm(int side, double eta) {
  return eta * 2.0 * std::sqrt(2.0 / M_PI) * std::log(static_cast<double>(side));
}

// Census of a stored field at inverse-local-time horizon t = t_theta:
// thick counts (L - t)/sqrt(2t) >= eta 2 sqrt(2/pi) log N, thin the mirror.
inline long census_count(const LocalTimeField& f, double theta, double eta, bool thick) {
  if (eta <= 0) throw EtaOutOfRange("census_count: need eta > 0");
  double t = t_theta(f.side, theta);
  if (t <= 0) throw GeometryViolation("census_count: need theta > 0");
  double thr = census_threshold_norm(f.side, eta);
  double denom = std::sqrt(2.0 * t);
  long count = 0;
  for (double v : f.occupation) {
    double psi = (v - t) / denom;
    if (thick ? psi >= thr : psi <= -thr) ++count;
  }
  return count;
}

struct CensusRun {
  int side = 0;
  double theta = 0;
  double t = 0;
  double tau = 0;
  std::vector<long> counts;  // one per queried eta
};

inline CensusRun census_run(int side, double theta, const std::vector<double>& etas,
                            bool thick, std::uint64_t seed, std::uint64_t stream = 0) {
  if (theta <= 0) throw GeometryViolation("census_run: need theta > 0");
  WalkConfig wc;
  wc.side = side;
  wc.seed = seed;
  wc.stream = stream;
  double t = t_theta(side, theta);
  LocalTimeField f = run_until(wc, StopRule::inverse_local_time({0, 0}, t));
  CensusRun out;
  out.side = side;
  out.theta = theta;
  out.t = t;
  out.tau = f.elapsed;
  out.counts.reserve(etas.size());
  for (double eta : etas) out.counts.push_back(census_count(f, theta, eta, thick));
  return out;
}

struct CensusResult {
  int side = 0;
  ThickThinQuery query;
  double t = 0;
  double tau = 0;
  long count = 0;
  std::uint64_t seed = 0;
  double elapsed_wall = 0;  // seconds; informational only, never serialized
};

inline CensusResult census_thick_thin(int side, const ThickThinQuery& q, std::uint64_t seed,
                                      std::uint64_t stream = 0) {
  auto t0 = std::chrono::steady_clock::now();
  CensusRun run = census_run(side, q.theta, {q.eta}, q.thick, seed, stream);
  std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  return CensusResult{side, q, run.t, run.tau, run.counts[0], seed, dt.count()};
}

struct LateRun {
  int side = 0;
  double cover_time = 0;
  std::vector<long> counts;  // one per queried eta
};

// Late points: first-visit time >= eta * (4/pi) N^2 (log N)^2. One cover-time
// walk serves every eta threshold.
inline LateRun late_run(int side, const std::vector<double>& etas, std::uint64_t seed,
                        std::uint64_t stream = 0) {
  for (double eta : etas)
    if (eta <= 0) throw EtaOutOfRange("late_run: need eta > 0");
  WalkConfig wc;
  wc.side = side;
  wc.seed = seed;
  wc.stream = stream;
  LocalTimeField f = run_until(wc, StopRule::cover_time());
  LateRun out;
  out.side = side;
  out.cover_time = f.elapsed;
  double scale = theory_cover_time(side);
  for (double eta : etas) {
    double thr = eta * scale;
    long count = 0;
    for (double fv : f.first_visit)
      if (fv >= thr) ++count;
    out.counts.push_back(count);
  }
  return out;
}

inline long late_point_census(int side, double eta, std::uint64_t seed,
                              std::uint64_t stream = 0) {
  return late_run(side, {eta}, seed, stream).counts[0];
}

struct ExtremeResult {
  int side = 0;
  double theta = 0;
  double tau = 0;
  double max_norm = 0;        // max (L-t)/sqrt(2t) / (2 sqrt(2/pi) log N)
  double min_norm = 0;
  double min_local_time = 0;
};

inline ExtremeResult extreme_normalized(int side, double theta, std::uint64_t seed,
                                        std::uint64_t stream = 0) {
  if (theta <= 0) throw GeometryViolation("extreme_normalized: need theta > 0");
  WalkConfig wc;
  wc.side = side;
  wc.seed = seed;
  wc.stream = stream;
  double t = t_theta(side, theta);
  LocalTimeField f = run_until(wc, StopRule::inverse_local_time({0, 0}, t));
  double denom = std::sqrt(2.0 * t) * 2.0 * std::sqrt(2.0 / M_PI) *
                 std::log(static_cast<double>(side));
  ExtremeResult out;
  out.side = side;
  out.theta = theta;
  out.tau = f.elapsed;
  double lmax = f.occupation[0], lmin = f.occupation[0];
  for (double v : f.occupation) {
    lmax = std::max(lmax, v);
    lmin = std::min(lmin, v);
  }
  out.max_norm = (lmax - t) / denom;
  out.min_norm = (lmin - t) / denom;
  out.min_local_time = lmin;
  return out;
}

namespace detail {

// Multi-centre excursion counting against a shared walk. Every site is a
// potential centre; a site entry touching shell k of centre c = site - offset
// advances that centre's level machines exactly as the single-centre tracer
// does. Centres freeze once they complete the top-level cycle budget.
struct CensusFieldObserver {
  int side = 0;
  int depth = 0;
  long nsites = 0;
  long budget = 0;
  std::vector<std::vector<std::pair<int, int>>> shell_offsets;  // per shell k
  std::vector<std::uint8_t> phase;    // depth * nsites
  std::vector<std::uint16_t> counts;  // depth * nsites
  std::vector<std::uint16_t> cycles;  // nsites
  std::vector<std::uint8_t> frozen;   // nsites

  CensusFieldObserver(int side_, const RadiiLadder& lad, long budget_)
      : side(side_),
        depth(lad.depth),
        nsites(static_cast<long>(side_) * side_),
        budget(budget_),
        phase(static_cast<std::size_t>(lad.depth) * side_ * side_,
              static_cast<std::uint8_t>(LevelPhase::Start)),
        counts(static_cast<std::size_t>(lad.depth) * side_ * side_, 0),
        cycles(static_cast<std::size_t>(side_) * side_, 0),
        frozen(static_cast<std::size_t>(side_) * side_, 0) {
    shell_offsets.resize(lad.depth + 1);
    for (int k = 0; k <= lad.depth; ++k) {
      PointSet shell = ball_boundary(side_, TorusPoint{0, 0}, lad.radii[k]);
      for (std::int32_t idx : shell.indices()) {
        TorusPoint p = site_at(side_, idx);
        shell_offsets[k].emplace_back(p.i, p.j);
      }
    }
  }

  void touch(int center, int k) {
    if (frozen[center]) return;
    bool freeze_after = false;  // both roles still advance on the freezing entry
    if (k >= 1) {  // inner shell of level k-1
      std::size_t slot = static_cast<std::size_t>(k - 1) * nsites + center;
      auto ph = static_cast<LevelPhase>(phase[slot]);
      if (ph == LevelPhase::Start || ph == LevelPhase::AwaitInner) {
        bool completes = ph == LevelPhase::AwaitInner;
        phase[slot] = static_cast<std::uint8_t>(LevelPhase::AwaitOuter);
        if (k - 1 == 0 && completes && ++cycles[center] >= budget) freeze_after = true;
      }
    }
    if (k <= depth - 1) {  // outer shell of level k
      std::size_t slot = static_cast<std::size_t>(k) * nsites + center;
      if (static_cast<LevelPhase>(phase[slot]) == LevelPhase::AwaitOuter) {
        ++counts[slot];
        phase[slot] = static_cast<std::uint8_t>(LevelPhase::AwaitInner);
      }
    }
    if (freeze_after) frozen[center] = 1;
  }

  bool on_enter(int site, double /*t*/) {
    TorusPoint p = site_at(side, site);
    for (int k = 0; k <= depth; ++k)
      for (auto [oi, oj] : shell_offsets[k])
        touch(site_index(side, torus_point(side, p.i - oi, p.j - oj)), k);
    return true;
  }

  void on_hold(int /*site*/, double /*dt*/) {}
};

}  // namespace detail

struct SuccessfulCensus {
  int side = 0;
  long count = 0;
  long centers_considered = 0;
  std::vector<std::int32_t> successful_sites;
  LocalTimeField field;
};

// Definition 3.1 census: one walk to tau_{t_theta}, per-centre excursion
// counts frozen at the n_0 top-level budget, eligible centres outside
// D(0, r_0), success = counts within +-n of the target profile at every
// intermediate level.
inline SuccessfulCensus successful_census(int side, const MultiscaleConfig& cfg,
                                          const TargetCounts& targets, std::uint64_t seed,
                                          std::uint64_t stream = 0) {
  RadiiLadder lad = multiscale_radii(cfg, side);
  const int n = cfg.depth;
  if (static_cast<int>(targets.n_ell.size()) < n)
    throw LevelMismatch("successful_census: targets shallower than depth");
  detail::CensusFieldObserver obs(side, lad, targets.n_ell[0]);
  WalkConfig wc;
  wc.side = side;
  wc.seed = seed;
  wc.stream = stream;
  double t = t_theta(side, targets.theta);
  SuccessfulCensus out;
  out.side = side;
  out.field = run_observed(wc, StopRule::inverse_local_time({0, 0}, t), obs);
  const long nsites = static_cast<long>(side) * side;
  double r0sq = lad.radii[0] * lad.radii[0];
  for (long c = 0; c < nsites; ++c) {
    TorusPoint p = site_at(side, static_cast<int>(c));
    if (static_cast<double>(torus_dist2(side, p, TorusPoint{0, 0})) < r0sq) continue;
    ++out.centers_considered;
    bool ok = true;
    for (int l = 1; l <= n - 1 && ok; ++l) {
      long got = obs.counts[static_cast<std::size_t>(l) * nsites + c];
      if (std::labs(got - targets.n_ell[l]) > n) ok = false;
    }
    if (ok) {
      ++out.count;
      out.successful_sites.push_back(static_cast<std::int32_t>(c));
    }
  }
  return out;
}

struct ExponentFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  int points_used = 0;
  int points_dropped = 0;
};

// Least squares of log(count) on log(N). Zero counts carry no log-scale
// information and are dropped (reported); at least three distinct sides must
// survive.
inline ExponentFit exponent_fit(const std::vector<std::pair<double, double>>& side_count) {
  std::vector<double> xs, ys;
  int dropped = 0;
  for (auto [n, c] : side_count) {
    if (c <= 0) {
      ++dropped;
      continue;
    }
    xs.push_back(std::log(n));
    ys.push_back(std::log(c));
  }
  std::vector<double> uniq = xs;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  if (uniq.size() < 3)
    throw InsufficientData("exponent_fit: need counts at >= 3 distinct sides");
  LinearFit f = linear_fit(xs, ys);
  ExponentFit out;
  out.slope = f.slope;
  out.intercept = f.intercept;
  out.slope_se = f.slope_se;
  out.points_used = static_cast<int>(xs.size());
  out.points_dropped = dropped;
  return out;
}

// ---------------------------------------------------------------------------
// Experiment driver: config structs, sweeps, CSV/JSON artifacts.

struct ExperimentConfig {
  std::string mode;
  std::vector<int> sides;
  double theta = 1.0;
  std::vector<double> etas = {0.5};
  std::string sign = "thick";
  int replicas = 1;
  std::uint64_t seed = 0;
  std::string out;         // empty = stdout
  std::string format = "csv";
  int workers = 0;
  double t = 20.0;                            // gff-check
  std::vector<double> radii = {4, 8, 16, 32}; // green-check
  int depth = 2;                              // excursions
  double r0 = 16.0;
  double rho = 2.5;
  long budget = 32;
};

namespace detail {

inline const std::vector<std::string>& mode_keys(const std::string& mode) {
  static const std::vector<std::string> common = {"mode", "n",   "replicas", "seed",
                                                  "out",  "format", "workers"};
  static const std::map<std::string, std::vector<std::string>> extra = {
      {"census", {"theta", "eta", "sign"}},
      {"late", {"eta"}},
      {"extremes", {"theta"}},
      {"exponents", {"theta", "eta", "sign"}},
      {"gff-check", {"t"}},
      {"green-check", {"radii"}},
      {"excursions", {"depth", "r0", "rho", "budget"}},
  };
  auto it = extra.find(mode);
  if (it == extra.end()) throw ConfigParse("unknown mode '" + mode + "'");
  static std::map<std::string, std::vector<std::string>> merged;
  auto mit = merged.find(mode);
  if (mit == merged.end()) {
    std::vector<std::string> all = common;
    all.insert(all.end(), it->second.begin(), it->second.end());
    mit = merged.emplace(mode, std::move(all)).first;
  }
  return mit->second;
}

}  // namespace detail

inline ExperimentConfig experiment_from_map(const ConfigMap& cm) {
  ExperimentConfig cfg;
  cfg.mode = cm.require("mode");
  const auto& allowed = detail::mode_keys(cfg.mode);
  for (const auto& key : cm.order)
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigParse("unknown key '" + key + "' for mode '" + cfg.mode + "'");

  for (long long v : to_int_list(cm.require("n"), "n")) {
    if (v < 2) throw ConfigParse("key 'n': sides must be >= 2");
    cfg.sides.push_back(static_cast<int>(v));
  }
  cfg.replicas = static_cast<int>(to_int(cm.get("replicas", "1"), "replicas"));
  if (cfg.replicas < 1) throw ConfigParse("key 'replicas': must be >= 1");
  long long seed = to_int(cm.get("seed", "0"), "seed");
  if (seed < 0) throw ConfigParse("key 'seed': must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.out = cm.get("out", "");
  cfg.format = cm.get("format", "csv");
  if (cfg.format != "csv" && cfg.format != "json")
    throw ConfigParse("key 'format': expected 'csv' or 'json'");
  cfg.workers = static_cast<int>(to_int(cm.get("workers", "0"), "workers"));
  if (cfg.workers < 0) throw ConfigParse("key 'workers': must be >= 0");

  if (cm.has("theta")) cfg.theta = to_double(cm.kv.at("theta"), "theta");
  if (cfg.theta <= 0) throw ConfigParse("key 'theta': must be positive");
  if (cm.has("eta")) cfg.etas = to_double_list(cm.kv.at("eta"), "eta");
  cfg.sign = cm.get("sign", "thick");
  if (cfg.sign != "thick" && cfg.sign != "thin")
    throw ConfigParse("key 'sign': expected 'thick' or 'thin'");
  if (cm.has("t")) cfg.t = to_double(cm.kv.at("t"), "t");
  if (cm.has("radii")) cfg.radii = to_double_list(cm.kv.at("radii"), "radii");
  if (cm.has("depth")) cfg.depth = static_cast<int>(to_int(cm.kv.at("depth"), "depth"));
  if (cm.has("r0")) cfg.r0 = to_double(cm.kv.at("r0"), "r0");
  if (cm.has("rho")) cfg.rho = to_double(cm.kv.at("rho"), "rho");
  if (cm.has("budget")) cfg.budget = to_int(cm.kv.at("budget"), "budget");
  return cfg;
}

struct Artifact {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  nlohmann::ordered_json analysis;
  int exit_code = 0;

  std::string csv_text() const {
    std::ostringstream os;
    CsvWriter w(os, columns);
    for (const auto& r : rows) w.row(r);
    return os.str();
  }
};

namespace detail {

inline nlohmann::ordered_json artifact_json(const Artifact& art, const ExperimentConfig& cfg,
                                            const ConfigMap* echo) {
  nlohmann::ordered_json j;
  j["version"] = LTLAB_VERSION;
  j["mode"] = cfg.mode;
  nlohmann::ordered_json conf;
  if (echo) {
    for (const auto& key : echo->order) conf[key] = echo->kv.at(key);
  } else {
    conf["seed"] = cfg.seed;
    conf["replicas"] = cfg.replicas;
  }
  j["config"] = conf;
  j["columns"] = art.columns;
  j["rows"] = art.rows;
  j["analysis"] = art.analysis;
  return j;
}

}  // namespace detail

inline Artifact run_census_mode(const ExperimentConfig& cfg, bool fit_exponents) {
  Artifact art;
  art.columns = {"side", "theta", "eta", "sign", "replica", "stream", "t_theta", "tau",
                 "count"};
  const long cells = static_cast<long>(cfg.sides.size()) * cfg.replicas;
  std::vector<CensusRun> runs(cells);
  parallel_for(cells, cfg.workers, [&](long i) {
    int si = static_cast<int>(i / cfg.replicas);
    runs[i] = census_run(cfg.sides[si], cfg.theta, cfg.etas, cfg.sign == "thick", cfg.seed,
                         static_cast<std::uint64_t>(i));
  });
  for (long i = 0; i < cells; ++i) {
    int si = static_cast<int>(i / cfg.replicas);
    int r = static_cast<int>(i % cfg.replicas);
    for (std::size_t e = 0; e < cfg.etas.size(); ++e)
      art.rows.push_back({format_int(cfg.sides[si]), format_double(cfg.theta),
                          format_double(cfg.etas[e]), cfg.sign, format_int(r),
                          format_uint(static_cast<std::uint64_t>(i)),
                          format_double(runs[i].t), format_double(runs[i].tau),
                          format_int(runs[i].counts[e])});
  }

  nlohmann::ordered_json cells_json = nlohmann::ordered_json::array();
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t si = 0; si < cfg.sides.size(); ++si) {
      std::vector<double> counts;
      for (int r = 0; r < cfg.replicas; ++r)
        counts.push_back(
            static_cast<double>(runs[si * cfg.replicas + r].counts[e]));
      Summary s = summarize(counts);
      pts.emplace_back(static_cast<double>(cfg.sides[si]), s.mean);
      nlohmann::ordered_json cell;
      cell["side"] = cfg.sides[si];
      cell["eta"] = cfg.etas[e];
      cell["mean_count"] = s.mean;
      cell["se_count"] = s.se;
      cells_json.push_back(cell);
    }
    if (fit_exponents) {
      nlohmann::ordered_json fj;
      fj["eta"] = cfg.etas[e];
      fj["predicted"] = cfg.sign == "thick" ? thick_exponent(cfg.theta, cfg.etas[e])
                                            : thin_exponent(cfg.theta, cfg.etas[e]);
      try {
        ExponentFit f = exponent_fit(pts);
        fj["slope"] = f.slope;
        fj["slope_se"] = f.slope_se;
        fj["intercept"] = f.intercept;
        fj["points_used"] = f.points_used;
        fj["points_dropped"] = f.points_dropped;
      } catch (const InsufficientData& e2) {
        fj["error"] = e2.what();
      }
      fits.push_back(fj);
    }
  }
  art.analysis["cells"] = cells_json;
  if (fit_exponents) art.analysis["fits"] = fits;
  return art;
}

inline Artifact run_late_mode(const ExperimentConfig& cfg) {
  Artifact art;
  art.columns = {"side", "eta", "replica", "stream", "cover_time", "count"};
  const long cells = static_cast<long>(cfg.sides.size()) * cfg.replicas;
  std::vector<LateRun> runs(cells);
  parallel_for(cells, cfg.workers, [&](long i) {
    int si = static_cast<int>(i / cfg.replicas);
    runs[i] = late_run(cfg.sides[si], cfg.etas, cfg.seed, static_cast<std::uint64_t>(i));
  });
  for (long i = 0; i < cells; ++i) {
    int si = static_cast<int>(i / cfg.replicas);
    int r = static_cast<int>(i % cfg.replicas);
    for (std::size_t e = 0; e < cfg.etas.size(); ++e)
      art.rows.push_back({format_int(cfg.sides[si]), format_double(cfg.etas[e]),
                          format_int(r), format_uint(static_cast<std::uint64_t>(i)),
                          format_double(runs[i].cover_time),
                          format_int(runs[i].counts[e])});
  }
  nlohmann::ordered_json fits = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < cfg.etas.size(); ++e) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t si = 0; si < cfg.sides.size(); ++si) {
      std::vector<double> counts;
      for (int r = 0; r < cfg.replicas; ++r)
        counts.push_back(static_cast<double>(runs[si * cfg.replicas + r].counts[e]));
      pts.emplace_back(static_cast<double>(cfg.sides[si]), summarize(counts).mean);
    }
    nlohmann::ordered_json fj;
    fj["eta"] = cfg.etas[e];
    fj["predicted"] = 2.0 - 2.0 * cfg.etas[e];
    try {
      ExponentFit f = exponent_fit(pts);
      fj["slope"] = f.slope;
      fj["slope_se"] = f.slope_se;
      fj["points_used"] = f.points_used;
      fj["points_dropped"] = f.points_dropped;
    } catch (const InsufficientData& e2) {
      fj["error"] = e2.what();
    }
    fits.push_back(fj);
  }
  art.analysis["fits"] = fits;
  return art;
}

inline Artifact run_extremes_mode(const ExperimentConfig& cfg) {
  Artifact art;
  art.columns = {"side",     "theta",    "replica",       "stream",
                 "tau",      "max_norm", "min_norm",      "min_local_time"};
  const long cells = static_cast<long>(cfg.sides.size()) * cfg.replicas;
  std::vector<ExtremeResult> runs(cells);
  parallel_for(cells, cfg.workers, [&](long i) {
    int si = static_cast<int>(i / cfg.replicas);
    runs[i] = extreme_normalized(cfg.sides[si], cfg.theta, cfg.seed,
                                 static_cast<std::uint64_t>(i));
  });
  nlohmann::ordered_json per_side = nlohmann::ordered_json::array();
  for (std::size_t si = 0; si < cfg.sides.size(); ++si) {
    std::vector<double> maxes, mins, zeros;
    for (int r = 0; r < cfg.replicas; ++r) {
      const ExtremeResult& x = runs[si * cfg.replicas + r];
      art.rows.push_back({format_int(x.side), format_double(x.theta), format_int(r),
                          format_uint(static_cast<std::uint64_t>(si * cfg.replicas + r)),
                          format_double(x.tau), format_double(x.max_norm),
                          format_double(x.min_norm), format_double(x.min_local_time)});
      maxes.push_back(x.max_norm);
      mins.push_back(x.min_norm);
      zeros.push_back(x.min_local_time == 0 ? 1.0 : 0.0);
    }
    nlohmann::ordered_json sj;
    sj["side"] = cfg.sides[si];
    sj["median_max_norm"] = quantile(maxes, 0.5);
    sj["median_min_norm"] = quantile(mins, 0.5);
    sj["zero_min_fraction"] = summarize(zeros).mean;
    sj["predicted_max_norm"] = 1.0 + 1.0 / (2.0 * std::sqrt(cfg.theta));
    sj["predicted_min_norm"] =
        cfg.theta >= 1 ? -(1.0 - 1.0 / (2.0 * std::sqrt(cfg.theta)))
                       : -std::sqrt(cfg.theta) / 2.0;
    per_side.push_back(sj);
  }
  art.analysis["per_side"] = per_side;
  return art;
}

inline Artifact run_green_check_mode(const ExperimentConfig& cfg) {
  Artifact art;
  art.columns = {"side", "R",     "g_center",     "log_term", "residual",
                 "g_off", "off_pred", "off_residual"};
  nlohmann::ordered_json per_side = nlohmann::ordered_json::array();
  for (int side : cfg.sides) {
    GreenLogTable table = green_log_residual(side, cfg.radii);
    for (const auto& row : table.rows)
      art.rows.push_back({format_int(side), format_double(row.R),
                          format_double(row.g_center), format_double(row.log_term),
                          format_double(row.residual), format_double(row.g_off),
                          format_double(row.off_pred), format_double(row.off_residual)});
    nlohmann::ordered_json sj;
    sj["side"] = side;
    sj["max_center_residual"] = table.max_center_residual;
    sj["max_residual_delta"] = table.max_residual_delta;
    sj["max_off_residual"] = table.max_off_residual;
    bool ok = table.max_center_residual <= 2.0 && table.max_residual_delta <= 0.3;
    sj["within_bounds"] = ok;
    if (!ok) art.exit_code = 1;
    per_side.push_back(sj);
  }
  art.analysis["per_side"] = per_side;
  return art;
}

inline Artifact run_gff_check_mode(const ExperimentConfig& cfg) {
  Artifact art;
  art.columns = {"side", "t",    "replicas",          "origin_max_abs_err",
                 "rel_dev_spatial_mean", "z_second_moment", "ks_p", "max_z_mean_l"};
  nlohmann::ordered_json per_side = nlohmann::ordered_json::array();
  for (int side : cfg.sides) {
    RayKnightReport rep = ray_knight_check(side, cfg.t, cfg.replicas, cfg.seed, cfg.workers);
    art.rows.push_back({format_int(side), format_double(cfg.t), format_int(cfg.replicas),
                        format_double(rep.origin_max_abs_err),
                        format_double(rep.rel_dev_spatial_mean),
                        format_double(rep.z_second_moment),
                        format_double(rep.ks_spatial.p_value),
                        format_double(rep.max_z_mean_l)});
    nlohmann::ordered_json sj;
    sj["side"] = side;
    sj["rel_dev_spatial_mean"] = rep.rel_dev_spatial_mean;
    sj["z_second_moment"] = rep.z_second_moment;
    sj["ks_p"] = rep.ks_spatial.p_value;
    sj["max_z_mean_l"] = rep.max_z_mean_l;
    bool ok = rep.rel_dev_spatial_mean <= 0.005 && rep.z_second_moment <= 3.0 &&
              rep.ks_spatial.p_value > 0.001;
    sj["within_bounds"] = ok;
    if (!ok) art.exit_code = 1;
    per_side.push_back(sj);
  }
  art.analysis["per_side"] = per_side;
  return art;
}

inline Artifact run_excursions_mode(const ExperimentConfig& cfg) {
  Artifact art;
  art.columns = {"side", "depth", "replica", "stream"};
  for (int l = 0; l < cfg.depth; ++l) art.columns.push_back("count_" + std::to_string(l));
  for (int l = 0; l < cfg.depth; ++l)
    art.columns.push_back("mean_cycle_" + std::to_string(l));
  MultiscaleConfig mc;
  mc.mode = MultiscaleConfig::Mode::LabRadii;
  mc.depth = cfg.depth;
  mc.lab_r0 = cfg.r0;
  mc.lab_rho = cfg.rho;
  nlohmann::ordered_json per_side = nlohmann::ordered_json::array();
  for (std::size_t si = 0; si < cfg.sides.size(); ++si) {
    int side = cfg.sides[si];
    RadiiLadder lad = multiscale_radii(mc, side);
    TorusPoint center{side / 2, side / 2};
    std::vector<TraceResult> runs(cfg.replicas);
    parallel_for(cfg.replicas, cfg.workers, [&](long r) {
      WalkConfig ec;
      ec.side = side;
      ec.start = center;
      ec.seed = cfg.seed;
      ec.stream = si * static_cast<std::uint64_t>(cfg.replicas) + r;
      runs[r] = excursion_trace(ec, center, lad, ExcursionHorizon::budget(cfg.budget));
    });
    std::vector<std::vector<std::pair<long, long>>> pairs(cfg.depth - 1);
    for (int r = 0; r < cfg.replicas; ++r) {
      const ExcursionRecord& rec = runs[r].record;
      std::vector<std::string> row = {format_int(side), format_int(cfg.depth),
                                      format_int(r),
                                      format_uint(si * static_cast<std::uint64_t>(
                                                           cfg.replicas) +
                                                  r)};
      for (int l = 0; l < cfg.depth; ++l) {
        row.push_back(format_int(rec.level_counts[l]));
        if (l + 1 < cfg.depth)
          pairs[l].emplace_back(rec.level_counts[l], rec.level_counts[l + 1]);
      }
      for (int l = 0; l < cfg.depth; ++l) {
        const auto& dur = rec.durations[l];
        double mean = 0;
        long full = 0;
        for (std::size_t j = 1; j < dur.size(); ++j) {
          mean += dur[j];
          ++full;
        }
        row.push_back(format_double(full > 0 ? mean / full : 0.0));
      }
      art.rows.push_back(row);
    }
    nlohmann::ordered_json sj;
    sj["side"] = side;
    nlohmann::ordered_json lv = nlohmann::ordered_json::array();
    for (int l = 0; l + 1 < cfg.depth; ++l) {
      ChainLevelStat st = chain_level_stat(l, pairs[l]);
      nlohmann::ordered_json js;
      js["transition"] = st.level;
      js["chi2"] = st.chi2;
      js["dof"] = st.dof;
      js["p_value"] = st.p_value;
      js["mean_z"] = st.mean_z;
      js["var_z"] = st.var_z;
      lv.push_back(js);
    }
    sj["chain"] = lv;
    per_side.push_back(sj);
  }
  art.analysis["per_side"] = per_side;
  return art;
}

inline Artifact run_mode(const ExperimentConfig& cfg) {
  if (cfg.mode == "census") return run_census_mode(cfg, false);
  if (cfg.mode == "exponents") return run_census_mode(cfg, true);
  if (cfg.mode == "late") return run_late_mode(cfg);
  if (cfg.mode == "extremes") return run_extremes_mode(cfg);
  if (cfg.mode == "green-check") return run_green_check_mode(cfg);
  if (cfg.mode == "gff-check") return run_gff_check_mode(cfg);
  if (cfg.mode == "excursions") return run_excursions_mode(cfg);
  throw ConfigParse("unknown mode '" + cfg.mode + "'");
}

inline void write_artifact(const Artifact& art, const ExperimentConfig& cfg,
                           const ConfigMap* echo) {
  std::string text = cfg.format == "csv"
                         ? art.csv_text()
                         : detail::artifact_json(art, cfg, echo).dump(2) + "\n";
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(cfg.out, std::ios::binary);
  if (!os) throw IoFailure("cannot open output file '" + cfg.out + "'");
  os << text;
  if (!os) throw IoFailure("failed writing output file '" + cfg.out + "'");
}

inline int run_experiment(const std::string& config_path) {
  ConfigMap cm = parse_config_file(config_path);
  ExperimentConfig cfg = experiment_from_map(cm);
  Artifact art = run_mode(cfg);
  write_artifact(art, cfg, &cm);
  return art.exit_code;
}

// Exit-code wrapper used by the CLI: 0 ok, 1 invariant violation, 2 config
// error, 3 I/O error.
inline int run_experiment_cli(const std::string& config_path) {
  try {
    return run_experiment(config_path);
  } catch (const ConfigParse& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ltlab
