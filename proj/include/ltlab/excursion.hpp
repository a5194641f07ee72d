#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "ltlab/errors.hpp"
#include "ltlab/rng.hpp"
#include "ltlab/stats.hpp"
#include "ltlab/torus.hpp"
#include "ltlab/walker.hpp"

namespace ltlab {

struct MultiscaleConfig {
  enum class Mode { PaperRadii, LabRadii };
  Mode mode = Mode::PaperRadii;
  int depth = 2;  // n, number of annulus levels

  // PaperRadii: r_k = e^n * n^{3(n-k)}, K = n^gamma_bar * r_0, gamma_bar in [b, b+4].
  double gamma_bar = 2.0;
  double b = 0.0;

  // LabRadii: r_k = r0 * rho^{-k}, shrunk to fit a concrete torus.
  double lab_r0 = 0;
  double lab_rho = 0;
};

struct RadiiLadder {
  int depth = 0;
  std::vector<double> radii;  // r_0 > r_1 > ... > r_depth
  double clearance = 0;       // K (PaperRadii) or the torus side (LabRadii)
};

// Builds the decreasing radii ladder; `side` > 0 additionally enforces that
// the ladder fits on that torus. Shells one apart must stay disjoint, so
// consecutive radii closer than 1 (or any radius below 2) collapse.
inline RadiiLadder multiscale_radii(const MultiscaleConfig& cfg, int side = 0) {
  if (cfg.depth < 2) throw GeometryViolation("multiscale_radii: need depth >= 2");
  const int n = cfg.depth;
  RadiiLadder lad;
  lad.depth = n;
  lad.radii.resize(n + 1);
  if (cfg.mode == MultiscaleConfig::Mode::PaperRadii) {
    if (!(cfg.b <= cfg.gamma_bar && cfg.gamma_bar <= cfg.b + 4))
      throw GeometryViolation("multiscale_radii: gamma_bar must lie in [b, b+4]");
    double ln_n = std::log(static_cast<double>(n));
    for (int k = 0; k <= n; ++k)
      lad.radii[k] = std::exp(static_cast<double>(n) + 3.0 * (n - k) * ln_n);
    lad.clearance = std::pow(static_cast<double>(n), cfg.gamma_bar) * lad.radii[0];
    if (!std::isfinite(lad.radii[0]) || !std::isfinite(lad.clearance))
      throw RadiiCollapse("multiscale_radii: ladder overflows");
  } else {
    if (!(cfg.lab_rho > 1)) throw GeometryViolation("multiscale_radii: need rho > 1");
    if (!(cfg.lab_r0 > 0)) throw GeometryViolation("multiscale_radii: need r0 > 0");
    for (int k = 0; k <= n; ++k)
      lad.radii[k] = cfg.lab_r0 * std::pow(cfg.lab_rho, -k);
    lad.clearance = static_cast<double>(side);
  }
  for (int k = 0; k <= n; ++k)
    if (lad.radii[k] < 2.0) throw RadiiCollapse("multiscale_radii: radius below 2");
  for (int k = 0; k < n; ++k)
    if (lad.radii[k] - lad.radii[k + 1] < 1.0)
      throw RadiiCollapse("multiscale_radii: adjacent radii closer than 1");
  if (side > 0 && 2.0 * lad.radii[0] >= static_cast<double>(side))
    throw RadiiCollapse("multiscale_radii: r_0 does not fit on the torus");
  return lad;
}

// Ladder from explicit radii, validated like the generated ones.
inline RadiiLadder explicit_radii(std::vector<double> radii, int side = 0) {
  if (radii.size() < 3) throw GeometryViolation("explicit_radii: need at least 3 radii");
  RadiiLadder lad;
  lad.depth = static_cast<int>(radii.size()) - 1;
  lad.radii = std::move(radii);
  lad.clearance = static_cast<double>(side);
  for (double r : lad.radii)
    if (r < 2.0) throw RadiiCollapse("explicit_radii: radius below 2");
  for (int k = 0; k < lad.depth; ++k)
    if (lad.radii[k] - lad.radii[k + 1] < 1.0)
      throw RadiiCollapse("explicit_radii: radii not decreasing by at least 1");
  if (side > 0 && 2.0 * lad.radii[0] >= static_cast<double>(side))
    throw RadiiCollapse("explicit_radii: r_0 does not fit on the torus");
  return lad;
}

struct TargetCounts {
  double theta = 0;
  double eta = 0;
  std::vector<long> n_ell;  // targets for levels 0 .. n-1
};

// n_ell = ceil( 6 (1 - n^{-1/4}) [ sqrt(theta) + (sqrt(theta + 2 eta sqrt(theta))
//         - sqrt(theta)) * ell / n ]^2 n^2 log n ).
inline TargetCounts target_counts(int n, double theta, double eta) {
  if (n < 2) throw GeometryViolation("target_counts: need n >= 2");
  if (theta <= 0) throw GeometryViolation("target_counts: need theta > 0");
  double a = std::sqrt(theta);
  if (!(eta > 0 && eta < 1.0 + 1.0 / (2.0 * a)))
    throw EtaOutOfRange("target_counts: need 0 < eta < 1 + 1/(2 sqrt(theta))");
  double delta = std::sqrt(theta + 2.0 * eta * a) - a;
  double pre = 6.0 * (1.0 - std::pow(static_cast<double>(n), -0.25));
  double scale = static_cast<double>(n) * n * std::log(static_cast<double>(n));
  TargetCounts t;
  t.theta = theta;
  t.eta = eta;
  t.n_ell.resize(n);
  for (int l = 0; l < n; ++l) {
    double base = a + delta * static_cast<double>(l) / n;
    t.n_ell[l] = static_cast<long>(std::ceil(pre * base * base * scale));
  }
  return t;
}

struct ExcursionRecord {
  TorusPoint center{0, 0};
  int depth = 0;
  std::vector<long> level_counts;               // N_ell, ell = 0 .. depth-1
  std::vector<std::vector<double>> durations;   // per level: tau^{(0)}, tau^{(1)}, ...
  std::vector<double> deepest_local_times;      // centre occupation per deepest window
};

// Horizon for a traced run: either an inverse-local-time clock at a fixed
// site, or a budget of completed top-level excursion cycles.
struct ExcursionHorizon {
  enum class Kind { InverseLocalTime, Budget };

  static ExcursionHorizon inverse_local_time(TorusPoint site, double level) {
    ExcursionHorizon h;
    h.kind = Kind::InverseLocalTime;
    h.site = site;
    h.level = level;
    return h;
  }

  static ExcursionHorizon budget(long top_cycles) {
    if (top_cycles < 1) throw GeometryViolation("ExcursionHorizon: budget must be >= 1");
    ExcursionHorizon h;
    h.kind = Kind::Budget;
    h.top_cycles = top_cycles;
    return h;
  }

  Kind kind = Kind::Budget;
  TorusPoint site{0, 0};
  double level = 0;
  long top_cycles = 0;
};

namespace detail {

enum class LevelPhase : std::uint8_t { Start, AwaitOuter, AwaitInner };

// One-pass excursion bookkeeping around a single centre. Level `l` counts
// excursions from shell l+1 (inner) to shell l (outer); a shell touch can
// play the inner role for one level and the outer role for the next, and
// both machines advance on the same entry event.
struct TraceObserver {
  int side = 0;
  int depth = 0;
  int center_site = 0;
  long budget = -1;  // completed top-level cycles before stopping; -1 = none
  std::vector<std::uint8_t> shell_label;  // shell id + 1, or 0
  std::vector<LevelPhase> phase;
  std::vector<long> counts;
  std::vector<std::vector<double>> inner_returns;
  long top_cycles = 0;
  double deepest_acc = 0;
  std::vector<double> deepest_windows;

  TraceObserver(int side_, TorusPoint center, const RadiiLadder& lad, long budget_)
      : side(side_),
        depth(lad.depth),
        center_site(site_index(side_, center)),
        budget(budget_),
        shell_label(static_cast<std::size_t>(side_) * side_, 0),
        phase(lad.depth, LevelPhase::Start),
        counts(lad.depth, 0),
        inner_returns(lad.depth) {
    for (int k = 0; k <= lad.depth; ++k) {
      PointSet shell = ball_boundary(side_, center, lad.radii[k]);
      for (std::int32_t idx : shell.indices())
        shell_label[idx] = static_cast<std::uint8_t>(k + 1);
    }
  }

  bool on_enter(int site, double t) {
    int lab = shell_label[site];
    if (lab == 0) return true;
    int k = lab - 1;
    bool keep_going = true;
    if (k >= 1) {  // inner shell of level k-1
      int lev = k - 1;
      if (phase[lev] == LevelPhase::Start || phase[lev] == LevelPhase::AwaitInner) {
        bool completes_cycle = phase[lev] == LevelPhase::AwaitInner;
        inner_returns[lev].push_back(t);
        phase[lev] = LevelPhase::AwaitOuter;
        if (lev == 0 && completes_cycle) {
          ++top_cycles;
          if (budget >= 0 && top_cycles >= budget) keep_going = false;
        }
      }
    }
    if (k <= depth - 1) {  // outer shell of level k
      if (phase[k] == LevelPhase::AwaitOuter) {
        ++counts[k];
        phase[k] = LevelPhase::AwaitInner;
        if (k == depth - 1) {
          deepest_windows.push_back(deepest_acc);
          deepest_acc = 0;
        }
      }
    }
    return keep_going;
  }

  void on_hold(int site, double dt) {
    if (site == center_site && phase[depth - 1] == LevelPhase::AwaitOuter)
      deepest_acc += dt;
  }
};

}  // namespace detail

struct TraceResult {
  ExcursionRecord record;
  LocalTimeField field;
};

inline TraceResult excursion_trace(const WalkConfig& cfg, TorusPoint center,
                                   const RadiiLadder& ladder,
                                   const ExcursionHorizon& horizon) {
  if (2.0 * ladder.radii[0] >= cfg.side)
    throw RadiiCollapse("excursion_trace: ladder does not fit on the torus");
  detail::TraceObserver obs(cfg.side, center, ladder,
                            horizon.kind == ExcursionHorizon::Kind::Budget ? horizon.top_cycles
                                                                           : -1);
  StopRule stop = horizon.kind == ExcursionHorizon::Kind::InverseLocalTime
                      ? StopRule::inverse_local_time(horizon.site, horizon.level)
                      : StopRule::fixed_time(std::numeric_limits<double>::infinity());
  TraceResult out;
  out.field = run_observed(cfg, stop, obs);
  out.record.center = center;
  out.record.depth = ladder.depth;
  out.record.level_counts = obs.counts;
  out.record.durations.resize(ladder.depth);
  for (int lev = 0; lev < ladder.depth; ++lev) {
    const auto& times = obs.inner_returns[lev];
    auto& dur = out.record.durations[lev];
    dur.reserve(times.size());
    double prev = 0;
    for (double t : times) {
      dur.push_back(t - prev);
      prev = t;
    }
  }
  out.record.deepest_local_times = obs.deepest_windows;
  return out;
}

// Definition 3.1 window check: |N_ell - n_ell| <= n for 1 <= ell <= n-1.
inline bool is_successful(const ExcursionRecord& rec, const TargetCounts& targets, int n) {
  if (n < 2) throw GeometryViolation("is_successful: need n >= 2");
  if (rec.depth < n || static_cast<int>(rec.level_counts.size()) < n ||
      static_cast<int>(targets.n_ell.size()) < n)
    throw LevelMismatch("is_successful: record/targets shallower than n");
  for (int l = 1; l <= n - 1; ++l)
    if (std::labs(rec.level_counts[l] - targets.n_ell[l]) > n) return false;
  return true;
}

namespace detail {

inline bool balls_disjoint(int side, TorusPoint x, TorusPoint y, double rho) {
  double d = torus_distance(side, x, y);
  if (d >= 2.0 * rho) return true;
  if (d < rho) return false;  // each centre lies in the other ball
  PointSet bx = ball_unguarded(side, x, rho);
  double rho2 = rho * rho;
  for (std::int32_t idx : bx.indices())
    if (static_cast<double>(torus_dist2(side, y, site_at(side, idx))) < rho2) return false;
  return true;
}

}  // namespace detail

// ell(x, y) = min{ ell : D(x, r_ell + 1) and D(y, r_ell + 1) are disjoint } capped at n.
inline int separation_scale(int side, TorusPoint x, TorusPoint y, const RadiiLadder& ladder) {
  for (int l = 0; l <= ladder.depth - 1; ++l)
    if (detail::balls_disjoint(side, x, y, ladder.radii[l] + 1.0)) return l;
  return ladder.depth;
}

// log C(a, b) with the chain conventions: C(a, 0) = 1 for every a (including
// a = -1), C(a, b) = 0 when b > a or a < 0.
inline double log_binomial(long a, long b) {
  if (b == 0) return 0.0;
  if (b < 0 || a < 0 || b > a)
    return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(a) + 1) - std::lgamma(static_cast<double>(b) + 1) -
         std::lgamma(static_cast<double>(a - b) + 1);
}

// log P(NB(m_prev, 1/2) = m) = log C(m + m_prev - 1, m) - (m + m_prev) log 2.
inline double log_chain_step(long m_prev, long m) {
  return log_binomial(m + m_prev - 1, m) -
         static_cast<double>(m + m_prev) * std::log(2.0);
}

// Sum of the product chain over per-level windows, in the log domain:
// log sum_{m_1 in W_1} ... prod_l P(NB(m_{l-1}) = m_l), with m_0 fixed.
inline double qn_window_log(long m0,
                            const std::vector<std::pair<long, long>>& windows) {
  if (m0 < 0) throw GeometryViolation("qn_window_log: need m0 >= 0");
  std::vector<long> prev_vals{m0};
  std::vector<double> prev_logs{0.0};
  for (auto [lo, hi] : windows) {
    lo = std::max(lo, 0L);
    if (hi < lo) return -std::numeric_limits<double>::infinity();
    std::vector<long> vals;
    std::vector<double> logs;
    vals.reserve(hi - lo + 1);
    logs.reserve(hi - lo + 1);
    for (long m = lo; m <= hi; ++m) {
      std::vector<double> terms;
      terms.reserve(prev_vals.size());
      for (std::size_t k = 0; k < prev_vals.size(); ++k)
        terms.push_back(prev_logs[k] + log_chain_step(prev_vals[k], m));
      double lw = log_sum_exp(terms);
      if (std::isfinite(lw)) {
        vals.push_back(m);
        logs.push_back(lw);
      }
    }
    if (vals.empty()) return -std::numeric_limits<double>::infinity();
    prev_vals = std::move(vals);
    prev_logs = std::move(logs);
  }
  return log_sum_exp(prev_logs);
}

inline double qn_window_sum(long m0, const std::vector<std::pair<long, long>>& windows) {
  return std::exp(qn_window_log(m0, windows));
}

inline std::vector<std::pair<long, long>> qn_windows(int n, const TargetCounts& targets) {
  if (static_cast<int>(targets.n_ell.size()) < n)
    throw LevelMismatch("qn_windows: targets shallower than n");
  std::vector<std::pair<long, long>> w;
  w.reserve(n - 1);
  for (int l = 1; l <= n - 1; ++l)
    w.emplace_back(targets.n_ell[l] - n, targets.n_ell[l] + n);
  return w;
}

// q_n: probability that the negative-binomial chain started from n_0 stays
// within +-n of every target count (levels 1 .. n-1).
inline double qn_exact_log(int n, const TargetCounts& targets) {
  if (n < 2) throw GeometryViolation("qn_exact_log: need n >= 2");
  return qn_window_log(targets.n_ell[0], qn_windows(n, targets));
}

inline double qn_exact(int n, const TargetCounts& targets) {
  return std::exp(qn_exact_log(n, targets));
}

// f(u) = (1+u) log(1+u) - u log u - (1+u) log 2; the chain's per-step rate
// factor. f(1) = 0 and f is strictly negative elsewhere on (0, infinity).
inline double bridge_rate_function(double u) {
  if (u < 0) throw GeometryViolation("bridge_rate_function: need u >= 0");
  double ulogu = u == 0 ? 0.0 : u * std::log(u);
  return (1.0 + u) * std::log(1.0 + u) - ulogu - (1.0 + u) * std::log(2.0);
}

struct QnEnvelope {
  double log_k = 0;      // log K_n for the PaperRadii ladder
  double exponent = 0;   // 2 (sqrt(theta + 2 eta sqrt(theta)) - sqrt(theta))^2
  double log_lower = 0;  // log of c_pre_lo * exp(-c_lo n log log n) K^{-exponent}
  double log_upper = 0;
};

// Two-sided envelope exp(+-c n log log n) K^{-exponent} around q_n with
// caller-supplied constants; only existence of such constants is guaranteed,
// so concrete values are fitted and reported rather than asserted a priori.
inline QnEnvelope qn_envelope(int n, double theta, double eta, double gamma_bar,
                              double c_lower, double c_upper) {
  if (n < 3) throw GeometryViolation("qn_envelope: need n >= 3 for log log n");
  double ln_n = std::log(static_cast<double>(n));
  QnEnvelope env;
  env.log_k = gamma_bar * ln_n + static_cast<double>(n) + 3.0 * n * ln_n;
  double a = std::sqrt(theta);
  double delta = std::sqrt(theta + 2.0 * eta * a) - a;
  env.exponent = 2.0 * delta * delta;
  double nloglog = static_cast<double>(n) * std::log(ln_n);
  env.log_lower = -c_lower * nloglog - env.exponent * env.log_k;
  env.log_upper = c_upper * nloglog - env.exponent * env.log_k;
  return env;
}

// Fitted rate constant: the c for which q_n = exp(-c n log log n) K^{-exponent}.
inline double qn_implied_rate(int n, double theta, double eta, double gamma_bar,
                              double log_qn) {
  QnEnvelope env = qn_envelope(n, theta, eta, gamma_bar, 1.0, 1.0);
  double nloglog = static_cast<double>(n) * std::log(std::log(static_cast<double>(n)));
  return -(log_qn + env.exponent * env.log_k) / nloglog;
}

struct QnAsymptotics {
  int n = 0;
  double theta = 0, eta = 0, gamma_bar = 0;
  TargetCounts targets;
  double log_qn = 0;       // exact window sum at the target counts
  double fitted_rate = 0;  // c with q_n = exp(-c n log log n) K^{-exponent}
  double c_lower = 0, c_upper = 0;
  QnEnvelope envelope;     // built from the fitted constants; brackets log_qn
};

// Evaluates q_n exactly at the PaperRadii targets and fits envelope constants
// that bracket it, reporting the implied rate rather than presuming one.
inline QnAsymptotics qn_asymptotic_bounds(int n, double theta, double eta,
                                          double gamma_bar = 2.0) {
  QnAsymptotics out;
  out.n = n;
  out.theta = theta;
  out.eta = eta;
  out.gamma_bar = gamma_bar;
  out.targets = target_counts(n, theta, eta);
  out.log_qn = qn_exact_log(n, out.targets);
  out.fitted_rate = qn_implied_rate(n, theta, eta, gamma_bar, out.log_qn);
  out.c_lower = std::max(out.fitted_rate, 0.0) + 1.0;
  out.c_upper = std::max(-out.fitted_rate, 0.0) + 1.0;
  out.envelope = qn_envelope(n, theta, eta, gamma_bar, out.c_lower, out.c_upper);
  return out;
}

// Failures before the m-th success of a fair coin; NB(0, 1/2) is identically 0.
inline long sample_negative_binomial_half(Rng& rng, long m) {
  long failures = 0;
  for (long s = 0; s < m;) {
    if (rng.coin())
      ++s;
    else
      ++failures;
  }
  return failures;
}

inline std::vector<long> sample_nb_chain(Rng& rng, long m0, int levels) {
  std::vector<long> out;
  out.reserve(levels);
  long cur = m0;
  out.push_back(cur);
  for (int l = 1; l < levels; ++l) {
    cur = sample_negative_binomial_half(rng, cur);
    out.push_back(cur);
  }
  return out;
}

struct ChainLevelStat {
  int level = 0;        // transition level -> level + 1
  double chi2 = 0;      // pooled Pearson statistic over parent groups
  long dof = 0;
  double p_value = 1.0; // 1.0 when no group had enough samples
  long pairs_used = 0;
  long pairs_skipped = 0;
  double mean_z = 0;    // (k - m) / sqrt(2 m) across all pairs
  double var_z = 0;
};

struct ChainDiagnosticReport {
  int replicas = 0;
  std::vector<ChainLevelStat> levels;  // transitions 0->1 .. depth-2 -> depth-1
  double min_p = 1.0;
};

namespace detail {

// Pearson chi^2 of the samples against NB(m, 1/2), with cells merged from
// k = 0 upward until each holds expected mass >= 5 and a joint tail cell.
inline void nb_group_chi2(long m, const std::vector<long>& ks, double& chi2, long& dof) {
  const double n = static_cast<double>(ks.size());
  std::vector<double> edges;   // bin upper bounds, inclusive
  std::vector<double> expect;
  double acc = 0, cum = 0;
  for (long k = 0;; ++k) {
    double pk = std::exp(log_chain_step(m, k));
    acc += pk;
    cum += pk;
    if (acc * n >= 5.0) {
      edges.push_back(static_cast<double>(k));
      expect.push_back(acc * n);
      acc = 0;
    }
    if ((1.0 - cum) * n < 5.0 && !edges.empty()) break;
    if (k > 64 * (m + 4)) break;  // defensive; never reached for sane m
  }
  if (edges.empty()) return;
  // fold the open tail into a final cell
  expect.push_back(std::max((1.0 - cum) * n + acc * n, 1e-12));
  edges.push_back(std::numeric_limits<double>::infinity());
  std::vector<double> observed(expect.size(), 0.0);
  for (long k : ks) {
    std::size_t b = 0;
    while (static_cast<double>(k) > edges[b]) ++b;
    observed[b] += 1.0;
  }
  for (std::size_t b = 0; b < expect.size(); ++b) {
    double d = observed[b] - expect[b];
    chi2 += d * d / expect[b];
  }
  dof += static_cast<long>(expect.size()) - 1;
}

}  // namespace detail

// Conditional statistics of transition pairs (N_l = m, N_{l+1} = k) against
// NB(m, 1/2): pooled chi^2 over parent groups with at least 25 samples, plus
// moments of z = (k - m) / sqrt(2m) over every pair with m > 0.
inline ChainLevelStat chain_level_stat(int level,
                                       const std::vector<std::pair<long, long>>& prs) {
  ChainLevelStat st;
  st.level = level;
  std::map<long, std::vector<long>> groups;
  std::vector<double> zs;
  for (auto [m, k] : prs) {
    if (m > 0) {
      groups[m].push_back(k);
      zs.push_back((static_cast<double>(k) - static_cast<double>(m)) /
                   std::sqrt(2.0 * static_cast<double>(m)));
    }
  }
  for (const auto& [m, ks] : groups) {
    if (static_cast<long>(ks.size()) < 25) {
      st.pairs_skipped += static_cast<long>(ks.size());
      continue;
    }
    st.pairs_used += static_cast<long>(ks.size());
    detail::nb_group_chi2(m, ks, st.chi2, st.dof);
  }
  st.p_value = st.dof > 0 ? chi2_sf(st.chi2, static_cast<double>(st.dof)) : 1.0;
  if (zs.size() >= 2) {
    Summary s = summarize(zs);
    st.mean_z = s.mean;
    st.var_z = s.sd * s.sd;
  }
  return st;
}

// Compares traced transition counts N_{l+1} | N_l = m against the
// negative-binomial chain. Diagnostic only: the chain is an approximation
// whose error vanishes with the radii, not an exact law on the lattice.
inline ChainDiagnosticReport excursion_chain_diagnostic(int side, const RadiiLadder& ladder,
                                                        long budget, int replicas,
                                                        std::uint64_t seed) {
  if (replicas < 50) throw InsufficientData("excursion_chain_diagnostic: replicas < 50");
  const int depth = ladder.depth;
  TorusPoint center{side / 2, side / 2};
  std::vector<std::vector<std::pair<long, long>>> pairs(depth - 1);
  for (int r = 0; r < replicas; ++r) {
    WalkConfig cfg;
    cfg.side = side;
    cfg.start = center;
    cfg.seed = seed;
    cfg.stream = static_cast<std::uint64_t>(r);
    TraceResult res = excursion_trace(cfg, center, ladder, ExcursionHorizon::budget(budget));
    for (int l = 0; l + 1 < depth; ++l)
      pairs[l].emplace_back(res.record.level_counts[l], res.record.level_counts[l + 1]);
  }
  ChainDiagnosticReport rep;
  rep.replicas = replicas;
  for (int l = 0; l + 1 < depth; ++l) {
    ChainLevelStat st = chain_level_stat(l, pairs[l]);
    rep.min_p = std::min(rep.min_p, st.p_value);
    rep.levels.push_back(st);
  }
  return rep;
}

// Back-of-envelope count of top-level excursions completed by the inverse
// local time tau_{t_theta}: each cycle deposits about (2/pi) log(r_0/r_1) of
// local time at the centre site.
inline double predicted_top_cycles(int side, double theta, double r0, double r1) {
  if (!(r0 > r1 && r1 > 0)) throw GeometryViolation("predicted_top_cycles: need r0 > r1 > 0");
  return t_theta(side, theta) * M_PI / (2.0 * std::log(r0 / r1));
}

}  // namespace ltlab
