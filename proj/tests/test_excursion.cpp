#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "ltlab/excursion.hpp"

using namespace ltlab;

TEST_CASE("PaperRadii ladder has the e^n n^{3(n-k)} shape") {
  MultiscaleConfig cfg;
  cfg.mode = MultiscaleConfig::Mode::PaperRadii;
  cfg.depth = 3;
  cfg.gamma_bar = 2.0;
  RadiiLadder lad = multiscale_radii(cfg);
  REQUIRE(lad.depth == 3);
  REQUIRE(lad.radii.size() == 4);
  CHECK(lad.radii[0] == Catch::Approx(395343.62).epsilon(1e-6));
  CHECK(lad.radii[3] == Catch::Approx(20.085537).epsilon(1e-6));
  for (int k = 0; k < 3; ++k)
    CHECK(lad.radii[k] / lad.radii[k + 1] == Catch::Approx(27.0).epsilon(1e-10));
  CHECK(lad.clearance == Catch::Approx(9.0 * lad.radii[0]).epsilon(1e-10));

  cfg.gamma_bar = 5.0;  // outside [b, b+4]
  CHECK_THROWS_AS(multiscale_radii(cfg), GeometryViolation);
}

TEST_CASE("lab radii ladder shrinks geometrically and fits its torus") {
  MultiscaleConfig cfg;
  cfg.mode = MultiscaleConfig::Mode::LabRadii;
  cfg.depth = 2;
  cfg.lab_r0 = 16.0;
  cfg.lab_rho = 2.0;
  RadiiLadder lad = multiscale_radii(cfg, 64);
  REQUIRE(lad.radii.size() == 3);
  CHECK(lad.radii[0] == 16.0);
  CHECK(lad.radii[1] == 8.0);
  CHECK(lad.radii[2] == 4.0);

  CHECK_THROWS_AS(multiscale_radii(cfg, 32), RadiiCollapse);  // 2 r0 >= side
  cfg.lab_rho = 4.0;                                          // r_2 = 1 < 2
  CHECK_THROWS_AS(multiscale_radii(cfg, 64), RadiiCollapse);
  cfg.lab_rho = 0.5;
  CHECK_THROWS_AS(multiscale_radii(cfg, 64), GeometryViolation);
  cfg.lab_rho = 2.0;
  cfg.lab_r0 = 0.0;
  CHECK_THROWS_AS(multiscale_radii(cfg, 64), GeometryViolation);
  cfg.lab_r0 = 16.0;
  cfg.depth = 1;
  CHECK_THROWS_AS(multiscale_radii(cfg, 64), GeometryViolation);
}

TEST_CASE("explicit radii ladders validate like generated ones") {
  RadiiLadder lad = explicit_radii({16.0, 4.0, 2.0}, 64);
  CHECK(lad.depth == 2);
  CHECK_THROWS_AS(explicit_radii({16.0, 4.0}), GeometryViolation);
  CHECK_THROWS_AS(explicit_radii({16.0, 4.0, 1.5}), RadiiCollapse);
  CHECK_THROWS_AS(explicit_radii({16.0, 15.5, 14.0}), RadiiCollapse);
  CHECK_THROWS_AS(explicit_radii({16.0, 4.0, 2.0}, 32), RadiiCollapse);
}

TEST_CASE("target counts reproduce the closed form") {
  TargetCounts t = target_counts(3, 1.0, 0.3);
  REQUIRE(t.n_ell.size() == 3);
  CHECK(t.n_ell[0] == 15);
  CHECK(t.n_ell[1] == 17);
  CHECK(t.n_ell[2] == 20);
  for (std::size_t l = 1; l < t.n_ell.size(); ++l) CHECK(t.n_ell[l] >= t.n_ell[l - 1]);

  CHECK_THROWS_AS(target_counts(1, 1.0, 0.3), GeometryViolation);
  CHECK_THROWS_AS(target_counts(3, 0.0, 0.3), GeometryViolation);
  CHECK_THROWS_AS(target_counts(3, 1.0, 0.0), EtaOutOfRange);
  CHECK_THROWS_AS(target_counts(3, 1.0, 1.5), EtaOutOfRange);
  CHECK_NOTHROW(target_counts(3, 1.0, 1.49));
}

TEST_CASE("chain step probabilities handle the degenerate cases") {
  CHECK(log_binomial(5, 0) == 0.0);
  CHECK(log_binomial(-1, 0) == 0.0);
  CHECK(std::isinf(log_binomial(2, 3)));
  CHECK(std::exp(log_chain_step(0, 0)) == Catch::Approx(1.0));
  CHECK(std::isinf(log_chain_step(0, 1)));
  CHECK(std::exp(log_chain_step(1, 1)) == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("window sums match hand enumeration") {
  CHECK(qn_window_sum(1, {{1, 1}}) == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(qn_window_sum(2, {{1, 3}}) == Catch::Approx(0.5625).epsilon(1e-12));

  // brute-force enumeration of a two-level chain
  auto pmf = [](long m, long k) { return std::exp(log_chain_step(m, k)); };
  double brute = 0;
  for (long m1 = 0; m1 <= 2; ++m1)
    for (long m2 = 1; m2 <= 3; ++m2) brute += pmf(2, m1) * pmf(m1, m2);
  CHECK(qn_window_sum(2, {{0, 2}, {1, 3}}) == Catch::Approx(brute).epsilon(1e-12));

  CHECK(qn_window_sum(3, {{0, 0}, {1, 5}}) == 0.0);  // NB(0) cannot reach 1
  CHECK(qn_window_sum(1, {{2, 1}}) == 0.0);          // empty window
  CHECK_THROWS_AS(qn_window_sum(-1, {{0, 1}}), GeometryViolation);
}

TEST_CASE("window sums grow with window width and shrink off-centre") {
  double narrow = qn_window_sum(10, {{9, 11}});
  double wide = qn_window_sum(10, {{7, 13}});
  CHECK(wide > narrow);
  double centred = qn_window_sum(10, {{8, 12}});
  double shifted = qn_window_sum(10, {{18, 22}});
  CHECK(centred > shifted);
}

TEST_CASE("qn_exact agrees with chain Monte Carlo") {
  const int n = 3;
  TargetCounts t = target_counts(n, 1.0, 0.3);
  double q = qn_exact(n, t);
  CHECK(q == Catch::Approx(std::exp(qn_exact_log(n, t))));

  auto windows = qn_windows(n, t);
  Rng rng(97531, 0);
  const int runs = 100000;
  int good = 0;
  for (int r = 0; r < runs; ++r) {
    std::vector<long> chain = sample_nb_chain(rng, t.n_ell[0], n);
    bool ok = true;
    for (int l = 1; l < n; ++l)
      if (chain[l] < windows[l - 1].first || chain[l] > windows[l - 1].second) ok = false;
    if (ok) ++good;
  }
  double mc = static_cast<double>(good) / runs;
  double se = std::sqrt(q * (1.0 - q) / runs);
  CHECK(std::abs(mc - q) < 4.0 * se);
}

TEST_CASE("bridge rate function peaks at u = 1") {
  CHECK(bridge_rate_function(1.0) == 0.0);
  CHECK(bridge_rate_function(0.0) == Catch::Approx(-std::log(2.0)));
  for (double u : {0.25, 0.5, 2.0, 5.0}) CHECK(bridge_rate_function(u) < 0.0);
  for (double u : {0.8, 0.9, 1.1, 1.2}) {
    double err = bridge_rate_function(u) + 0.25 * (u - 1.0) * (u - 1.0);
    CHECK(std::abs(err) < std::pow(std::abs(u - 1.0), 3.0));
  }
  CHECK_THROWS_AS(bridge_rate_function(-0.1), GeometryViolation);
}

TEST_CASE("qn asymptotic envelope brackets the exact value") {
  QnAsymptotics qa = qn_asymptotic_bounds(3, 1.0, 0.3);
  CHECK(std::isfinite(qa.log_qn));
  CHECK(std::isfinite(qa.fitted_rate));
  CHECK(qa.envelope.log_lower <= qa.log_qn);
  CHECK(qa.log_qn <= qa.envelope.log_upper);
  double a = std::sqrt(qa.theta);
  double delta = std::sqrt(qa.theta + 2.0 * qa.eta * a) - a;
  CHECK(qa.envelope.exponent == Catch::Approx(2.0 * delta * delta));
  CHECK_THROWS_AS(qn_asymptotic_bounds(2, 1.0, 0.3), GeometryViolation);
}

TEST_CASE("separation scale follows the disjoint-ball definition") {
  RadiiLadder lad = explicit_radii({16.0, 4.0, 2.0}, 128);
  const int side = 128;
  TorusPoint x{0, 0};
  CHECK(separation_scale(side, x, {35, 0}, lad) == 0);
  CHECK(separation_scale(side, x, {11, 0}, lad) == 1);
  CHECK(separation_scale(side, x, {10, 0}, lad) == 1);
  CHECK(separation_scale(side, x, {9, 0}, lad) == 1);
  CHECK(separation_scale(side, x, {8, 0}, lad) == 2);
  CHECK(separation_scale(side, x, x, lad) == 2);
}

TEST_CASE("successful windows accept targets and reject misses") {
  const int n = 3;
  TargetCounts t = target_counts(n, 1.0, 0.3);
  ExcursionRecord rec;
  rec.depth = n;
  rec.level_counts = {t.n_ell[0] + 100, t.n_ell[1], t.n_ell[2]};  // level 0 unconstrained
  CHECK(is_successful(rec, t, n));
  rec.level_counts[1] = t.n_ell[1] + n;
  CHECK(is_successful(rec, t, n));
  rec.level_counts[1] = t.n_ell[1] + n + 1;
  CHECK_FALSE(is_successful(rec, t, n));
  rec.depth = 2;
  rec.level_counts = {1, 2};
  CHECK_THROWS_AS(is_successful(rec, t, n), LevelMismatch);
}

namespace {

struct Replay {
  std::vector<std::pair<int, double>> entries;  // (site, entry time)
  std::vector<std::pair<int, double>> holds;    // (site, holding increment)
  std::vector<int> order;                       // 0 = entry, 1 = hold

  bool on_enter(int site, double t) {
    entries.emplace_back(site, t);
    order.push_back(0);
    return true;
  }
  void on_hold(int site, double dt) {
    holds.emplace_back(site, dt);
    order.push_back(1);
  }
};

}  // namespace

TEST_CASE("one-pass excursion trace matches an offline replay of the walk") {
  const int side = 32;
  TorusPoint center{16, 16};
  RadiiLadder lad = explicit_radii({8.0, 4.0, 2.0}, side);
  WalkConfig cfg;
  cfg.side = side;
  cfg.start = center;
  cfg.seed = 2026;
  cfg.stream = 5;
  ExcursionHorizon horizon = ExcursionHorizon::inverse_local_time(center, 30.0);
  TraceResult traced = excursion_trace(cfg, center, lad, horizon);

  // Re-run the identical trajectory with a plain recorder, then recompute the
  // excursion statistics from the recorded event stream.
  Replay rec;
  LocalTimeField f = run_observed(cfg, StopRule::inverse_local_time(center, 30.0), rec);
  REQUIRE(f.elapsed == traced.field.elapsed);
  REQUIRE(f.skeleton_steps == traced.field.skeleton_steps);

  const int depth = lad.depth;
  std::vector<int> label(static_cast<std::size_t>(side) * side, 0);
  for (int k = 0; k <= depth; ++k)
    for (std::int32_t idx : ball_boundary(side, center, lad.radii[k]).indices())
      label[idx] = k + 1;

  std::vector<int> state(depth, 0);  // 0 fresh, 1 window open, 2 awaiting reopen
  std::vector<long> counts(depth, 0);
  std::vector<std::vector<double>> opens(depth);
  std::vector<double> deep_windows;
  double deep_acc = 0;
  int center_site = site_index(side, center);
  std::size_t ei = 0, hi = 0;
  for (int kind : rec.order) {
    if (kind == 1) {
      auto [site, dt] = rec.holds[hi++];
      if (site == center_site && state[depth - 1] == 1) deep_acc += dt;
      continue;
    }
    auto [site, t] = rec.entries[ei++];
    int lab = label[site];
    if (lab == 0) continue;
    int k = lab - 1;
    if (k >= 1 && state[k - 1] != 1) {
      opens[k - 1].push_back(t);
      state[k - 1] = 1;
    }
    if (k <= depth - 1 && state[k] == 1) {
      ++counts[k];
      state[k] = 2;
      if (k == depth - 1) {
        deep_windows.push_back(deep_acc);
        deep_acc = 0;
      }
    }
  }

  REQUIRE(traced.record.depth == depth);
  CHECK(traced.record.level_counts == counts);
  for (int l = 0; l < depth; ++l) {
    REQUIRE(traced.record.durations[l].size() == opens[l].size());
    double prev = 0;
    for (std::size_t j = 0; j < opens[l].size(); ++j) {
      CHECK(traced.record.durations[l][j] == Catch::Approx(opens[l][j] - prev).margin(1e-12));
      CHECK(traced.record.durations[l][j] > 0.0);
      prev = opens[l][j];
    }
  }
  CHECK(traced.record.deepest_local_times == deep_windows);
}

TEST_CASE("excursion traces are deterministic and conservative") {
  const int side = 32;
  TorusPoint center{16, 16};
  RadiiLadder lad = explicit_radii({8.0, 4.0, 2.0}, side);
  WalkConfig cfg;
  cfg.side = side;
  cfg.start = center;
  cfg.seed = 31;
  TraceResult a = excursion_trace(cfg, center, lad, ExcursionHorizon::budget(12));
  TraceResult b = excursion_trace(cfg, center, lad, ExcursionHorizon::budget(12));
  CHECK(a.record.level_counts == b.record.level_counts);
  CHECK(a.field.elapsed == b.field.elapsed);
  CHECK(a.record.level_counts[0] == 12);
  CHECK(a.field.occupation_sum() == Catch::Approx(a.field.elapsed).epsilon(1e-12));

  CHECK_THROWS_AS(excursion_trace(cfg, center, explicit_radii({16.0, 4.0, 2.0}),
                                  ExcursionHorizon::budget(2)),
                  RadiiCollapse);
  CHECK_THROWS_AS(ExcursionHorizon::budget(0), GeometryViolation);
}

TEST_CASE("negative binomial sampler has the right two moments") {
  Rng rng(777, 1);
  const int runs = 60000;
  const long m = 9;
  double sum = 0, sq = 0;
  for (int r = 0; r < runs; ++r) {
    long k = sample_negative_binomial_half(rng, m);
    sum += static_cast<double>(k);
    sq += static_cast<double>(k) * k;
  }
  double mean = sum / runs;
  double var = sq / runs - mean * mean;
  CHECK(mean == Catch::Approx(9.0).margin(4.0 * std::sqrt(18.0 / runs)));
  CHECK(var == Catch::Approx(18.0).epsilon(0.05));
  CHECK(sample_negative_binomial_half(rng, 0) == 0);
}

TEST_CASE("walk transitions follow the negative binomial chain diagnostically") {
  RadiiLadder lad = explicit_radii({8.0, 4.0, 2.0}, 64);
  ChainDiagnosticReport rep = excursion_chain_diagnostic(64, lad, 30, 60, 11);
  REQUIRE(rep.levels.size() == 1);
  const ChainLevelStat& st = rep.levels[0];
  CHECK(st.level == 0);
  CHECK(st.pairs_used == 60);  // budget horizon pins N_0, one parent group
  CHECK(st.pairs_skipped == 0);
  CHECK(st.dof >= 1);
  CHECK(st.p_value >= 0.0);
  CHECK(st.p_value <= 1.0);
  CHECK(st.var_z > 0.0);
  CHECK_NOFAIL(st.p_value > 1e-6);
  INFO("chain chi2 " << st.chi2 << " dof " << st.dof << " p " << st.p_value << " mean_z "
                     << st.mean_z << " var_z " << st.var_z);
  CHECK_THROWS_AS(excursion_chain_diagnostic(64, lad, 30, 20, 11), InsufficientData);
}

TEST_CASE("predicted top-level cycle count follows the Green heuristic") {
  double pred = predicted_top_cycles(64, 1.0, 16.0, 4.0);
  double t = t_theta(64, 1.0);
  CHECK(pred == Catch::Approx(t * M_PI / (2.0 * std::log(4.0))));
  CHECK_THROWS_AS(predicted_top_cycles(64, 1.0, 4.0, 16.0), GeometryViolation);
}
