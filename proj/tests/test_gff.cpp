#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ltlab/gff.hpp"
#include "ltlab/stats.hpp"

using namespace ltlab;

TEST_CASE("pinned covariance is symmetric, pinned, and factored accurately") {
  GffCovariance cov = GffCovariance::build(8);
  CHECK(cov.side() == 8);
  CHECK(cov.factor_residual() < 1e-8);
  CHECK(cov.cov({0, 0}, {3, 3}) == 0.0);
  CHECK(cov.var({0, 0}) == 0.0);
  for (TorusPoint x : {TorusPoint{1, 0}, TorusPoint{4, 4}, TorusPoint{7, 2}}) {
    CHECK(cov.var(x) > 0.0);
    for (TorusPoint y : {TorusPoint{2, 5}, TorusPoint{6, 1}})
      CHECK(cov.cov(x, y) == Catch::Approx(cov.cov(y, x)).margin(1e-10));
  }
  // variance grows with distance from the pinning site
  CHECK(cov.var({4, 4}) > cov.var({1, 0}));

  CHECK_THROWS_AS(GffCovariance::build(1), GeometryViolation);
  CHECK_THROWS_AS(GffCovariance::build(65), SizeTooLarge);
}

TEST_CASE("samples are pinned, reproducible, and stream-decorrelated") {
  GffCovariance cov = GffCovariance::build(8);
  GffSample a = cov.sample(11, 4);
  GffSample b = cov.sample(11, 4);
  GffSample c = cov.sample(11, 5);
  CHECK(a.h[0] == 0.0);
  CHECK(a.at({0, 0}) == 0.0);
  CHECK(a.h == b.h);
  CHECK(a.h != c.h);
  CHECK(gff_sample(cov, 11, 4).h == a.h);
}

TEST_CASE("sample moments match the covariance") {
  GffCovariance cov = GffCovariance::build(8);
  const int runs = 4000;
  TorusPoint x{4, 4}, y{4, 5};
  std::vector<double> hx(runs), hy(runs);
  for (int r = 0; r < runs; ++r) {
    GffSample s = cov.sample(2025, static_cast<std::uint64_t>(r));
    hx[r] = s.at(x);
    hy[r] = s.at(y);
  }
  double vx = cov.var(x);
  double mean_x = summarize(hx).mean;
  CHECK(std::abs(mean_x) < 4.0 * std::sqrt(vx / runs));
  double sx = 0, sxy = 0;
  for (int r = 0; r < runs; ++r) {
    sx += hx[r] * hx[r];
    sxy += hx[r] * hy[r];
  }
  double var_emp = sx / runs;
  double cov_emp = sxy / runs;
  CHECK(var_emp == Catch::Approx(vx).margin(4.0 * vx * std::sqrt(2.0 / runs)));
  double cxy = cov.cov(x, y);
  double se_cov = std::sqrt((vx * cov.var(y) + cxy * cxy) / runs);
  CHECK(cov_emp == Catch::Approx(cxy).margin(4.0 * se_cov));
}

TEST_CASE("marginals are Gaussian by KS") {
  GffCovariance cov = GffCovariance::build(8);
  const int runs = 2000;
  TorusPoint x{4, 4};
  double sigma = std::sqrt(cov.var(x));
  std::vector<double> vals(runs);
  for (int r = 0; r < runs; ++r)
    vals[r] = cov.sample(31415, static_cast<std::uint64_t>(r)).at(x);
  KsResult ks = ks_one_sample(vals, [sigma](double v) { return normal_cdf(v / sigma); });
  CHECK(ks.p_value > 1e-4);
}

TEST_CASE("level census is monotone in eta and guarded") {
  GffCovariance cov = GffCovariance::build(16);
  GffSample s = cov.sample(7, 0);
  long c3 = gff_level_census(s, 0.3);
  long c6 = gff_level_census(s, 0.6);
  long c9 = gff_level_census(s, 0.9);
  CHECK(c3 >= c6);
  CHECK(c6 >= c9);
  CHECK(c3 <= 256);
  CHECK_THROWS_AS(gff_level_census(s, 0.0), EtaOutOfRange);
  CHECK_THROWS_AS(gff_level_census(s, 1.0), EtaOutOfRange);
}

TEST_CASE("level-set counts scale with the predicted exponent") {
  const double eta = 0.4;
  std::vector<double> xs, ys;
  for (int side : {16, 32, 64}) {
    GffCovariance cov = GffCovariance::build(side);
    const int runs = 100;
    double mean = 0;
    for (int r = 0; r < runs; ++r)
      mean += static_cast<double>(
          gff_level_census(cov.sample(55, static_cast<std::uint64_t>(r)), eta));
    mean /= runs;
    REQUIRE(mean > 0.0);
    xs.push_back(std::log(static_cast<double>(side)));
    ys.push_back(std::log(mean));
  }
  LinearFit fit = linear_fit(xs, ys);
  double predicted = 2.0 * (1.0 - eta * eta);
  CHECK(std::abs(fit.slope - predicted) < 0.5);
}

TEST_CASE("Ray-Knight identity holds at every site") {
  RayKnightReport rep = ray_knight_check(8, 20.0, 1000, 90210, 0);
  CHECK(rep.origin_max_abs_err < 1e-9);
  CHECK(rep.rel_dev_spatial_mean < 0.05);  // grand-mean sd ~ 0.36/sqrt(replicas)
  CHECK(rep.max_z_mean_l < 4.5);
  CHECK(rep.max_z_left < 4.5);
  CHECK(rep.max_z_right < 4.5);
  CHECK(rep.z_second_moment < 4.0);
  CHECK(rep.ks_spatial.p_value > 1e-3);

  CHECK_THROWS_AS(ray_knight_check(33, 20.0, 1000, 1, 0), SizeTooLarge);
  CHECK_THROWS_AS(ray_knight_check(8, 20.0, 999, 1, 0), InsufficientData);
  CHECK_THROWS_AS(ray_knight_check(8, 0.0, 1000, 1, 0), GeometryViolation);
}

TEST_CASE("Ray-Knight results do not depend on the worker count") {
  RayKnightReport one = ray_knight_check(8, 5.0, 1000, 7, 1);
  RayKnightReport four = ray_knight_check(8, 5.0, 1000, 7, 4);
  CHECK(one.max_z_mean_l == four.max_z_mean_l);
  CHECK(one.ks_spatial.statistic == four.ks_spatial.statistic);
  CHECK(one.z_second_moment == four.z_second_moment);
}

TEST_CASE("normalized local time drifts towards the GFF marginal") {
  CltDriftReport rep = clt_drift_check(8, {2.0, 200.0}, 400, 2718, 0);
  REQUIRE(rep.ks.size() == 2);
  CHECK(rep.sigma == Catch::Approx(std::sqrt(GffCovariance::build(8).var({4, 4}))));
  CHECK(rep.ks[1].statistic < rep.ks[0].statistic);
  double se0 = rep.normalized[0].se;
  CHECK(std::abs(rep.normalized[1].mean) < 4.0 * rep.normalized[1].se + 1e-12);
  CHECK(std::abs(rep.normalized[0].mean) < 4.0 * se0 + 1e-12);

  CHECK_THROWS_AS(clt_drift_check(17, {2.0}, 400, 1, 0), SizeTooLarge);
  CHECK_THROWS_AS(clt_drift_check(8, {}, 400, 1, 0), InsufficientData);
  CHECK_THROWS_AS(clt_drift_check(8, {2.0}, 99, 1, 0), InsufficientData);
}

TEST_CASE("square-root local time is dominated by the shifted GFF") {
  DominationReport rep = domination_check(8, 20.0, 600, {0.5, 0.9}, 1234, 0);
  CHECK(rep.comparisons == 18);  // 5 probes + max functional, 3 thresholds each
  CHECK(rep.violations == 0);
  CHECK(rep.worst_margin_z <= 3.0);

  CHECK_THROWS_AS(domination_check(33, 20.0, 600, {0.5}, 1, 0), SizeTooLarge);
  CHECK_THROWS_AS(domination_check(8, 20.0, 99, {0.5}, 1, 0), InsufficientData);
}
