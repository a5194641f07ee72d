#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "ltlab/errors.hpp"
#include "ltlab/rng.hpp"
#include "ltlab/stats.hpp"
#include "ltlab/torus.hpp"

namespace ltlab {

namespace detail {

// Shared 4-neighbour tables keyed by torus side, built once per process.
inline std::shared_ptr<const std::vector<std::int32_t>> neighbor_table(int side) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const std::vector<std::int32_t>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(side);
  if (it != cache.end()) return it->second;
  auto tab = std::make_shared<std::vector<std::int32_t>>(4ull * side * side);
  for (int idx = 0; idx < side * side; ++idx) {
    TorusPoint p = site_at(side, idx);
    (*tab)[4 * idx + 0] = site_index(side, torus_point(side, p.i + 1, p.j));
    (*tab)[4 * idx + 1] = site_index(side, torus_point(side, p.i - 1, p.j));
    (*tab)[4 * idx + 2] = site_index(side, torus_point(side, p.i, p.j + 1));
    (*tab)[4 * idx + 3] = site_index(side, torus_point(side, p.i, p.j - 1));
  }
  cache[side] = tab;
  return tab;
}

}  // namespace detail

struct WalkConfig {
  int side = 0;
  TorusPoint start{0, 0};
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t max_steps = 10'000'000'000ULL;
};

// Stopping rule for a continuous-time walk run. Exactly one kind applies.
class StopRule {
 public:
  enum class Kind { HitSet, InverseLocalTime, CoverTime, FixedTime };

  static StopRule hit_set(PointSet target) {
    if (target.empty()) throw EmptyRegion("StopRule::hit_set: empty target");
    StopRule r(Kind::HitSet);
    r.target_ = std::move(target);
    return r;
  }

  // Stop when the occupation time of `site` first reaches `level`.
  static StopRule inverse_local_time(TorusPoint site, double level) {
    if (level < 0) throw GeometryViolation("StopRule::inverse_local_time: negative level");
    StopRule r(Kind::InverseLocalTime);
    r.site_ = site;
    r.level_ = level;
    return r;
  }

  static StopRule cover_time() { return StopRule(Kind::CoverTime); }

  static StopRule fixed_time(double horizon) {
    if (horizon < 0) throw GeometryViolation("StopRule::fixed_time: negative horizon");
    StopRule r(Kind::FixedTime);
    r.level_ = horizon;
    return r;
  }

  Kind kind() const { return kind_; }
  const PointSet& target() const { return *target_; }
  TorusPoint site() const { return site_; }
  double level() const { return level_; }

 private:
  explicit StopRule(Kind k) : kind_(k) {}
  Kind kind_;
  std::optional<PointSet> target_;
  TorusPoint site_{0, 0};
  double level_ = 0;
};

struct LocalTimeField {
  int side = 0;
  double elapsed = 0;
  std::uint64_t skeleton_steps = 0;
  long visited_count = 0;
  std::vector<double> occupation;    // indexed by site
  std::vector<double> first_visit;   // entry time, -1 if never visited
  int final_site = 0;

  double occupation_at(TorusPoint p) const { return occupation[site_index(side, p)]; }
  double occupation_sum() const {
    double s = 0;
    for (double v : occupation) s += v;
    return s;
  }
};

struct NullObserver {
  bool on_enter(int /*site*/, double /*t*/) { return true; }
  void on_hold(int /*site*/, double /*dt*/) {}
};

// Continuous-time simple random walk: unit-rate exponential holding times on
// the embedded discrete skeleton. The observer sees every site entry (return
// false to stop) and every holding-time increment; holding times are
// truncated exactly at FixedTime / InverseLocalTime horizons so that the
// elapsed clock and the occupation field agree by construction.
template <class Observer>
LocalTimeField run_observed(const WalkConfig& cfg, const StopRule& stop, Observer&& obs) {
  if (cfg.side < 2) throw GeometryViolation("run_observed: side must be at least 2");
  if (cfg.max_steps == 0) throw GeometryViolation("run_observed: max_steps must be positive");
  const int side = cfg.side;
  const long nsites = static_cast<long>(side) * side;
  auto nbr_tab = detail::neighbor_table(side);
  const std::int32_t* nbr = nbr_tab->data();

  LocalTimeField f;
  f.side = side;
  f.occupation.assign(nsites, 0.0);
  f.first_visit.assign(nsites, -1.0);

  Rng rng(cfg.seed, cfg.stream);
  int site = site_index(side, cfg.start);
  const int stop_site =
      stop.kind() == StopRule::Kind::InverseLocalTime ? site_index(side, stop.site()) : -1;

  f.first_visit[site] = 0.0;
  f.visited_count = 1;
  bool halted = !obs.on_enter(site, 0.0);
  if (!halted && stop.kind() == StopRule::Kind::HitSet && stop.target().contains_index(site))
    halted = true;
  if (!halted && stop.kind() == StopRule::Kind::CoverTime && f.visited_count == nsites)
    halted = true;

  while (!halted) {
    if (f.skeleton_steps >= cfg.max_steps)
      throw StepCapExceeded("run_observed: skeleton step cap reached");
    double h = rng.exponential();
    bool stop_after_hold = false;
    if (stop.kind() == StopRule::Kind::FixedTime) {
      if (f.elapsed + h >= stop.level()) {
        h = stop.level() - f.elapsed;
        stop_after_hold = true;
      }
    } else if (site == stop_site) {
      if (f.occupation[site] + h >= stop.level()) {
        h = stop.level() - f.occupation[site];
        stop_after_hold = true;
      }
    }
    if (stop_after_hold) {
      // Assign the truncated remainder directly so the stopped coordinate is
      // exact (occupation == level, or elapsed == horizon) in floating point.
      if (stop.kind() == StopRule::Kind::FixedTime) {
        f.occupation[site] += h;
        f.elapsed = stop.level();
      } else {
        f.occupation[site] = stop.level();
        f.elapsed += h;
      }
      obs.on_hold(site, h);
      break;
    }
    f.occupation[site] += h;
    f.elapsed += h;
    obs.on_hold(site, h);

    site = nbr[4 * site + static_cast<int>(rng.below(4))];
    ++f.skeleton_steps;
    if (f.first_visit[site] < 0) {
      f.first_visit[site] = f.elapsed;
      ++f.visited_count;
    }
    if (!obs.on_enter(site, f.elapsed)) break;
    if (stop.kind() == StopRule::Kind::HitSet && stop.target().contains_index(site)) break;
    if (stop.kind() == StopRule::Kind::CoverTime && f.visited_count == nsites) break;
  }
  f.final_site = site;
  return f;
}

inline LocalTimeField run_until(const WalkConfig& cfg, const StopRule& stop) {
  NullObserver obs;
  return run_observed(cfg, stop, obs);
}

// t_theta(N) = (4/pi) * theta * (log N)^2, the inverse-local-time scale at
// which thick/thin point statistics are read off.
inline double t_theta(int side, double theta) {
  if (side < 2) throw GeometryViolation("t_theta: side must be at least 2");
  if (theta < 0) throw GeometryViolation("t_theta: theta must be nonnegative");
  double l = std::log(static_cast<double>(side));
  return 4.0 / M_PI * theta * l * l;
}

inline double theory_cover_time(int side) {
  if (side < 2) throw GeometryViolation("theory_cover_time: side must be at least 2");
  double l = std::log(static_cast<double>(side));
  return 4.0 / M_PI * side * static_cast<double>(side) * l * l;
}

struct CoverTimeStats {
  Summary elapsed;
  double theory = 0;
  double ratio = 0;  // mean / theory
};

inline CoverTimeStats cover_time_stats(int side, int replicas, std::uint64_t seed) {
  if (replicas < 1) throw InsufficientData("cover_time_stats: need replicas >= 1");
  std::vector<double> times;
  times.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    WalkConfig cfg;
    cfg.side = side;
    cfg.seed = seed;
    cfg.stream = static_cast<std::uint64_t>(r);
    LocalTimeField f = run_until(cfg, StopRule::cover_time());
    times.push_back(f.elapsed);
  }
  CoverTimeStats s;
  s.elapsed = summarize(times);
  s.theory = theory_cover_time(side);
  s.ratio = s.elapsed.mean / s.theory;
  return s;
}

struct TauConcentrationReport {
  Summary tau;
  double expected = 0;        // t * N^2
  double mean_abs_dev = 0;    // mean |tau - t N^2|
  double q95_abs_dev = 0;
  double ratio_bound = 0;     // q95 / (N^2 sqrt(t log N))
  double mean_z = 0;          // (mean - t N^2) / se
};

// Distribution of tau_t = inf{ s : L_s(0) >= t } over independent replicas,
// summarized against the t N^2 growth scale. The q95/scale ratio is the
// calibration constant reported to callers.
inline TauConcentrationReport tau_concentration_check(int side, double t, int replicas,
                                                      std::uint64_t seed = 0) {
  if (replicas < 30) throw InsufficientData("tau_concentration_check: need replicas >= 30");
  if (t <= 0) throw GeometryViolation("tau_concentration_check: t must be positive");
  std::vector<double> taus;
  taus.reserve(replicas);
  for (int r = 0; r < replicas; ++r) {
    WalkConfig cfg;
    cfg.side = side;
    cfg.seed = seed;
    cfg.stream = static_cast<std::uint64_t>(r);
    LocalTimeField f = run_until(cfg, StopRule::inverse_local_time({0, 0}, t));
    taus.push_back(f.elapsed);
  }
  TauConcentrationReport rep;
  rep.tau = summarize(taus);
  double n2 = static_cast<double>(side) * side;
  rep.expected = t * n2;
  std::vector<double> devs;
  devs.reserve(taus.size());
  for (double x : taus) devs.push_back(std::abs(x - rep.expected));
  rep.mean_abs_dev = summarize(devs).mean;
  rep.q95_abs_dev = quantile(devs, 0.95);
  rep.ratio_bound =
      rep.q95_abs_dev / (n2 * std::sqrt(t * std::log(static_cast<double>(side))));
  rep.mean_z = rep.tau.se > 0 ? (rep.tau.mean - rep.expected) / rep.tau.se : 0.0;
  return rep;
}

struct UniformityReport {
  double chi2 = 0;
  double dof = 0;
  double p_value = 0;
};

// Chi-squared test that time-averaged occupation is uniform across sites.
// Uses many independent runs of a fixed horizon; the per-site statistic is a
// z-score of the across-run mean occupation against the across-run spread,
// so autocorrelation within a single trajectory does not bias the test.
inline UniformityReport occupation_uniformity(int side, int runs, double horizon,
                                              std::uint64_t seed = 0) {
  if (runs < 30) throw InsufficientData("occupation_uniformity: need runs >= 30");
  const long nsites = static_cast<long>(side) * side;
  std::vector<double> sum(nsites, 0.0), sumsq(nsites, 0.0);
  for (int r = 0; r < runs; ++r) {
    WalkConfig cfg;
    cfg.side = side;
    cfg.seed = seed;
    cfg.stream = static_cast<std::uint64_t>(r);
    // Random start per run so no site is privileged.
    Rng pick(seed, 1'000'000'000ULL + static_cast<std::uint64_t>(r));
    cfg.start = site_at(side, static_cast<int>(pick.below(static_cast<std::uint64_t>(nsites))));
    LocalTimeField f = run_until(cfg, StopRule::fixed_time(horizon));
    for (long k = 0; k < nsites; ++k) {
      sum[k] += f.occupation[k];
      sumsq[k] += f.occupation[k] * f.occupation[k];
    }
  }
  double grand = 0;
  for (long k = 0; k < nsites; ++k) grand += sum[k];
  double expect = grand / static_cast<double>(nsites) / runs;
  double chi2 = 0;
  for (long k = 0; k < nsites; ++k) {
    double mean = sum[k] / runs;
    double var = (sumsq[k] - runs * mean * mean) / (runs - 1);
    double se2 = var / runs;
    if (se2 <= 0) se2 = 1e-300;
    chi2 += (mean - expect) * (mean - expect) / se2;
  }
  UniformityReport rep;
  rep.chi2 = chi2;
  rep.dof = static_cast<double>(nsites - 1);
  rep.p_value = chi2_sf(chi2, rep.dof);
  return rep;
}

}  // namespace ltlab
