#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ltlab/green.hpp"
#include "ltlab/torus.hpp"
#include "ltlab/walker.hpp"

using namespace ltlab;

namespace {

// Absorbing set for "exit D(center, R)": every site outside the open ball.
PointSet exit_set(int side, TorusPoint center, double R) {
  return ball(side, center, R).complement();
}

}  // namespace

TEST_CASE("Green matrix is symmetric, positive, and maximal on the diagonal") {
  const int side = 16;
  TorusPoint c{8, 8};
  GreenMatrix g = green_matrix(side, ball(side, c, 5.0));
  const int m = static_cast<int>(g.sites.size());
  for (int a = 0; a < m; ++a) {
    CHECK(g.values(a, a) > 0.0);
    for (int b = 0; b < m; ++b) {
      CHECK(g.values(a, b) >= 0.0);
      CHECK(g.values(a, b) == Catch::Approx(g.values(b, a)).margin(1e-9));
      CHECK(g.values(a, b) <= g.values(b, b) + 1e-12);
    }
  }
}

TEST_CASE("Green columns solve (I - P) g = e exactly") {
  const int side = 16;
  TorusPoint c{8, 8};
  PointSet region = ball(side, c, 5.0);
  GreenSolver solver(side, region);
  TorusPoint x0{6, 9};
  Eigen::VectorXd g = solver.column(x0);
  const auto& sites = solver.sites();
  for (std::size_t k = 0; k < sites.size(); ++k) {
    TorusPoint p = site_at(side, sites[k]);
    double acc = g[k];
    const TorusPoint nbrs[4] = {
        torus_point(side, p.i + 1, p.j), torus_point(side, p.i - 1, p.j),
        torus_point(side, p.i, p.j + 1), torus_point(side, p.i, p.j - 1)};
    for (TorusPoint q : nbrs) {
      int b = solver.index_of(q);
      if (b >= 0) acc -= 0.25 * g[b];
    }
    double want = p == x0 ? 1.0 : 0.0;
    CHECK(acc == Catch::Approx(want).margin(1e-8));
  }
  CHECK(green_exact(side, region, x0, x0) == Catch::Approx(g[solver.index_of(x0)]));
}

TEST_CASE("Green solver rejects degenerate regions and outside sites") {
  PointSet empty(8);
  CHECK_THROWS_AS(GreenSolver(8, empty), EmptyRegion);
  CHECK_THROWS_AS(GreenSolver(8, empty.complement()), SingularSystem);
  CHECK_THROWS_AS(GreenSolver(16, ball(8, {4, 4}, 2.0)), GeometryViolation);
  GreenSolver solver(8, ball(8, {4, 4}, 2.0));
  CHECK_THROWS_AS(solver.column({0, 0}), SiteOutsideRegion);
  CHECK_THROWS_AS(solver.value({0, 0}, {4, 4}), SiteOutsideRegion);
}

TEST_CASE("conjugate-gradient fallback matches the operator identity") {
  const int side = 256;
  TorusPoint c{128, 128};
  PointSet region = ball(side, c, 81.0);
  REQUIRE(region.size() > 20'000);
  GreenSolver solver(side, region);
  Eigen::VectorXd g = solver.column(c);
  const auto& sites = solver.sites();
  double worst = 0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    TorusPoint p = site_at(side, sites[k]);
    double acc = g[k];
    const TorusPoint nbrs[4] = {
        torus_point(side, p.i + 1, p.j), torus_point(side, p.i - 1, p.j),
        torus_point(side, p.i, p.j + 1), torus_point(side, p.i, p.j - 1)};
    for (TorusPoint q : nbrs) {
      int b = solver.index_of(q);
      if (b >= 0) acc -= 0.25 * g[b];
    }
    if (p == c) acc -= 1.0;
    worst = std::max(worst, std::abs(acc));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("centred Green values track (2/pi) log R with a stable residual") {
  GreenLogTable table = green_log_residual(128, {4.0, 8.0, 16.0, 32.0});
  REQUIRE(table.rows.size() == 4);
  CHECK(table.max_center_residual <= 2.0);
  CHECK(table.max_residual_delta <= 0.3);
  for (const GreenLogRow& row : table.rows) {
    CHECK(row.g_center == Catch::Approx(row.log_term + row.residual));
    CHECK(row.residual > 0.0);  // lattice constant is positive (~1.03)
  }
}

TEST_CASE("hitting probabilities are harmonic with the right boundary data") {
  const int side = 64;
  TorusPoint c{32, 32};
  const double r = 4.0, R = 16.0;
  PointSet inner_bd = ball_boundary(side, c, r);
  PointSet outer = ball(side, c, R);

  auto prob = [&](TorusPoint p) -> double {
    if (inner_bd.contains(p)) return 1.0;
    if (!outer.contains(p)) return 0.0;
    double d = torus_distance(side, p, c);
    if (d <= r) return -1.0;  // inside the inner ball: not part of the check
    return hitting_prob_exact(side, c, r, R, p);
  };

  for (TorusPoint p : {TorusPoint{32 + 7, 32}, TorusPoint{32, 32 - 9},
                       TorusPoint{32 + 5, 32 + 5}, TorusPoint{32 - 10, 32 + 3}}) {
    double hp = prob(p);
    REQUIRE(hp >= 0.0);
    double mean = 0;
    bool clean = true;
    for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      double v = prob(torus_point(side, p.i + di, p.j + dj));
      if (v < 0) clean = false;
      mean += 0.25 * std::max(v, 0.0);
    }
    if (clean) CHECK(hp == Catch::Approx(mean).margin(1e-9));
  }
}

TEST_CASE("hitting probability decreases with distance and respects the bracket") {
  const int side = 64;
  TorusPoint c{32, 32};
  double p5 = hitting_prob_exact(side, c, 4.0, 16.0, {32 + 5, 32});
  double p8 = hitting_prob_exact(side, c, 4.0, 16.0, {32 + 8, 32});
  double p11 = hitting_prob_exact(side, c, 4.0, 16.0, {32 + 11, 32});
  CHECK(p5 > p8);
  CHECK(p8 > p11);
  CHECK(p5 < 1.0);
  CHECK(p11 > 0.0);

  double lo = (std::log(16.0 / 8.0) - 2.0 / 4.0) / std::log(16.0 / 4.0);
  double hi = (std::log(16.0 / 8.0) + 2.0 / 4.0) / std::log(16.0 / 4.0);
  CHECK(p8 > lo);
  CHECK(p8 < hi);
}

TEST_CASE("hitting probability guards its geometry") {
  const int side = 32;
  TorusPoint c{16, 16};
  CHECK_THROWS_AS(hitting_prob_exact(side, c, 4.0, 16.0, {16 + 8, 16}), RadiusTooLarge);
  CHECK_THROWS_AS(hitting_prob_exact(side, c, 6.0, 4.0, {16 + 5, 16}), GeometryViolation);
  CHECK_THROWS_AS(hitting_prob_exact(side, c, 4.0, 12.0, {16 + 2, 16}), GeometryViolation);
  CHECK_THROWS_AS(hitting_prob_exact(side, c, 4.0, 12.0, {16, 16}), GeometryViolation);
  double on_shell = hitting_prob_exact(side, c, 3.5, 12.0, {16 + 4, 16});
  CHECK(on_shell == 1.0);
}

TEST_CASE("hitting probability agrees with direct simulation") {
  const int side = 32;
  TorusPoint c{16, 16};
  const double r = 3.0, R = 8.0;
  TorusPoint x0{16 + 5, 16};
  double exact = hitting_prob_exact(side, c, r, R, x0);

  PointSet inner_bd = ball_boundary(side, c, r);
  PointSet absorb = exit_set(side, c, R);
  for (std::int32_t idx : inner_bd.indices()) absorb.insert_index(idx);
  StopRule stop = StopRule::hit_set(absorb);

  const int runs = 20000;
  int hits = 0;
  for (int k = 0; k < runs; ++k) {
    WalkConfig cfg;
    cfg.side = side;
    cfg.start = x0;
    cfg.seed = 4242;
    cfg.stream = static_cast<std::uint64_t>(k);
    LocalTimeField f = run_until(cfg, stop);
    if (inner_bd.contains_index(f.final_site)) ++hits;
  }
  double mc = static_cast<double>(hits) / runs;
  double se = std::sqrt(exact * (1.0 - exact) / runs);
  CHECK(std::abs(mc - exact) < 4.0 * se);
}

TEST_CASE("Kac moments and the excursion Laplace transform match simulation") {
  const int side = 16;
  TorusPoint c{8, 8};
  const double R = 4.0;
  TorusPoint x0{8 + 2, 8};

  double m1 = kac_moment(side, c, R, x0, 1);
  double m2 = kac_moment(side, c, R, x0, 2);
  double m3 = kac_moment(side, c, R, x0, 3);
  PointSet region = ball(side, c, R);
  double g_x0 = green_exact(side, region, x0, c);
  double g_cc = green_exact(side, region, c, c);
  CHECK(m1 == Catch::Approx(g_x0).epsilon(1e-10));
  CHECK(m2 / m1 == Catch::Approx(2.0 * g_cc).epsilon(1e-10));
  CHECK(m3 / m2 == Catch::Approx(3.0 * g_cc).epsilon(1e-10));
  CHECK_THROWS_AS(kac_moment(side, c, R, x0, 0), GeometryViolation);
  CHECK_THROWS_AS(kac_moment(side, c, R, {0, 0}, 1), SiteOutsideRegion);

  const double beta = 1.0;
  double lap = laplace_excursion_transform(side, c, R, x0, beta);
  CHECK(lap == Catch::Approx(1.0 - (g_x0 / g_cc) * beta / (1.0 + beta)).epsilon(1e-12));
  CHECK(laplace_excursion_transform(side, c, R, x0, 0.5) > lap);
  CHECK_THROWS_AS(laplace_excursion_transform(side, c, R, x0, 0.0), GeometryViolation);

  StopRule stop = StopRule::hit_set(exit_set(side, c, R));
  const int runs = 20000;
  double sum1 = 0, sum2 = 0, sum_lap = 0, sq1 = 0, sq2 = 0, sq_lap = 0;
  for (int k = 0; k < runs; ++k) {
    WalkConfig cfg;
    cfg.side = side;
    cfg.start = x0;
    cfg.seed = 515151;
    cfg.stream = static_cast<std::uint64_t>(k);
    LocalTimeField f = run_until(cfg, stop);
    double L = f.occupation_at(c);
    double e = std::exp(-beta * L / g_cc);
    sum1 += L;
    sq1 += L * L;
    sum2 += L * L;
    sq2 += L * L * L * L;
    sum_lap += e;
    sq_lap += e * e;
  }
  auto within = [&](double sum, double sq, double want) {
    double mean = sum / runs;
    double var = sq / runs - mean * mean;
    double se = std::sqrt(std::max(var, 0.0) / runs);
    return std::abs(mean - want) < 4.0 * se;
  };
  CHECK(within(sum1, sq1, m1));
  CHECK(within(sum2, sq2, m2));
  CHECK(within(sum_lap, sq_lap, lap));
}
