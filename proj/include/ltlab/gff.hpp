#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ltlab/errors.hpp"
#include "ltlab/green.hpp"
#include "ltlab/jobs.hpp"
#include "ltlab/rng.hpp"
#include "ltlab/stats.hpp"
#include "ltlab/torus.hpp"
#include "ltlab/walker.hpp"

namespace ltlab {

struct GffSample {
  int side = 0;
  std::vector<double> h;  // indexed by site; h at the origin is exactly 0

  double at(TorusPoint p) const { return h[site_index(side, p)]; }
};

// Discrete Gaussian free field on the torus pinned at the origin:
// Cov(h_x, h_y) = G_{T \ {0}}(x, y), the Green's function of the walk killed
// at the origin. The covariance is materialized densely and Cholesky-factored
// once; samples are then a matrix-vector product. Memory is quadratic in N^2,
// hence the hard cap at N = 64.
class GffCovariance {
 public:
  static GffCovariance build(int side) {
    if (side < 2) throw GeometryViolation("GffCovariance: side must be at least 2");
    if (side > 64) throw SizeTooLarge("GffCovariance: dense covariance capped at side 64");
    GffCovariance g;
    g.side_ = side;
    PointSet region(side);
    const int nsites = side * side;
    for (int idx = 1; idx < nsites; ++idx) region.insert_index(idx);
    GreenSolver solver(side, region);
    const int m = nsites - 1;
    g.cov_.resize(m, m);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    for (int b = 0; b < m; ++b) {
      e[b] = 1.0;
      g.cov_.col(b) = solver.solve(e);
      e[b] = 0.0;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov_);
    if (llt.info() != Eigen::Success)
      throw SingularSystem("GffCovariance: covariance is not positive definite");
    g.factor_ = llt.matrixL();
    return g;
  }

  int side() const { return side_; }

  // Region sites are 1 .. side^2-1 in row-major order, so the matrix index of
  // a non-origin site is its site index minus one.
  double cov(TorusPoint x, TorusPoint y) const {
    int a = site_index(side_, x);
    int b = site_index(side_, y);
    if (a == 0 || b == 0) return 0.0;
    return cov_(a - 1, b - 1);
  }

  double var(TorusPoint x) const { return cov(x, x); }

  const Eigen::MatrixXd& factor() const { return factor_; }

  double factor_residual() const {
    return (factor_ * factor_.transpose() - cov_).cwiseAbs().maxCoeff();
  }

  GffSample sample(std::uint64_t seed, std::uint64_t stream = 0) const {
    Rng rng(seed, stream);
    const int m = static_cast<int>(cov_.rows());
    Eigen::VectorXd z(m);
    for (int k = 0; k < m; ++k) z[k] = rng.normal();
    Eigen::VectorXd ha = factor_ * z;
    GffSample s;
    s.side = side_;
    s.h.assign(static_cast<std::size_t>(side_) * side_, 0.0);
    for (int k = 0; k < m; ++k) s.h[k + 1] = ha[k];
    return s;
  }

 private:
  int side_ = 0;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd factor_;
};

inline GffSample gff_sample(const GffCovariance& cov, std::uint64_t seed,
                            std::uint64_t stream = 0) {
  return cov.sample(seed, stream);
}

// Number of sites with h >= eta * 2 sqrt(2/pi) log N.
inline long gff_level_census(const GffSample& s, double eta) {
  if (!(eta > 0 && eta < 1)) throw EtaOutOfRange("gff_level_census: need 0 < eta < 1");
  double thr = eta * 2.0 * std::sqrt(2.0 / M_PI) * std::log(static_cast<double>(s.side));
  long count = 0;
  for (double v : s.h)
    if (v >= thr) ++count;
  return count;
}

struct RayKnightReport {
  int side = 0;
  double t = 0;
  int replicas = 0;
  double origin_max_abs_err = 0;   // max_r |L_r(0) - t|; construction-exact
  double max_z_mean_l = 0;         // per-site |mean L - t| / se, origin excluded
  double max_z_left = 0;           // per-site left-field mean vs t + C(x,x)/2
  double max_z_right = 0;          // per-site right-field mean vs t + C(x,x)/2
  double rel_dev_spatial_mean = 0; // |spatial+replica mean of L - t| / t
  double z_second_moment = 0;      // spatial mean of squares, left vs right
  KsResult ks_spatial;             // spatial averages, left vs right
};

// Ray-Knight check: { L_{tau_t}(x) + h_x^2 / 2 } should match
// { (h_x + sqrt(2t))^2 / 2 } in law, with h an independent pinned GFF. Both
// sides have per-site mean t + C(x,x)/2; the left side also certifies
// E[L_{tau_t}(x)] = t. Streams 3r / 3r+1 / 3r+2 drive the walk, the left
// field, and the right field of replica r.
inline RayKnightReport ray_knight_check(int side, double t, int replicas,
                                        std::uint64_t seed = 0, int workers = 0) {
  if (side > 32) throw SizeTooLarge("ray_knight_check: capped at side 32");
  if (replicas < 1000) throw InsufficientData("ray_knight_check: need replicas >= 1000");
  if (t <= 0) throw GeometryViolation("ray_knight_check: t must be positive");
  GffCovariance cov = GffCovariance::build(side);
  const long nsites = static_cast<long>(side) * side;

  std::vector<double> sum_l(nsites, 0), sum_l2(nsites, 0);
  std::vector<double> sum_left(nsites, 0), sum_left2(nsites, 0);
  std::vector<double> sum_right(nsites, 0), sum_right2(nsites, 0);
  std::vector<double> avg_left(replicas), avg_right(replicas);
  std::vector<double> sq_left(replicas), sq_right(replicas);
  double origin_err = 0;

  std::vector<std::vector<double>> l_buf(replicas), left_buf(replicas), right_buf(replicas);
  parallel_for(replicas, workers, [&](long r) {
    WalkConfig wc;
    wc.side = side;
    wc.seed = seed;
    wc.stream = 3 * static_cast<std::uint64_t>(r);
    LocalTimeField f = run_until(wc, StopRule::inverse_local_time({0, 0}, t));
    GffSample h = cov.sample(seed, 3 * static_cast<std::uint64_t>(r) + 1);
    GffSample hp = cov.sample(seed, 3 * static_cast<std::uint64_t>(r) + 2);
    auto& lv = l_buf[r];
    auto& le = left_buf[r];
    auto& ri = right_buf[r];
    lv.resize(nsites);
    le.resize(nsites);
    ri.resize(nsites);
    double root2t = std::sqrt(2.0 * t);
    for (long k = 0; k < nsites; ++k) {
      lv[k] = f.occupation[k];
      le[k] = f.occupation[k] + 0.5 * h.h[k] * h.h[k];
      double s = hp.h[k] + root2t;
      ri[k] = 0.5 * s * s;
    }
  });

  for (int r = 0; r < replicas; ++r) {
    const auto& lv = l_buf[r];
    const auto& le = left_buf[r];
    const auto& ri = right_buf[r];
    origin_err = std::max(origin_err, std::abs(lv[0] - t));
    double al = 0, ar = 0, al2 = 0, ar2 = 0;
    for (long k = 0; k < nsites; ++k) {
      sum_l[k] += lv[k];
      sum_l2[k] += lv[k] * lv[k];
      sum_left[k] += le[k];
      sum_left2[k] += le[k] * le[k];
      sum_right[k] += ri[k];
      sum_right2[k] += ri[k] * ri[k];
      al += le[k];
      ar += ri[k];
      al2 += le[k] * le[k];
      ar2 += ri[k] * ri[k];
    }
    avg_left[r] = al / static_cast<double>(nsites);
    avg_right[r] = ar / static_cast<double>(nsites);
    sq_left[r] = al2 / static_cast<double>(nsites);
    sq_right[r] = ar2 / static_cast<double>(nsites);
  }

  RayKnightReport rep;
  rep.side = side;
  rep.t = t;
  rep.replicas = replicas;
  rep.origin_max_abs_err = origin_err;

  auto z_against = [&](const std::vector<double>& sum, const std::vector<double>& sumsq,
                       long k, double target) {
    double mean = sum[k] / replicas;
    double var = (sumsq[k] - replicas * mean * mean) / (replicas - 1);
    double se = std::sqrt(std::max(var, 0.0) / replicas);
    return se > 0 ? std::abs(mean - target) / se : 0.0;
  };
  double grand = 0;
  for (long k = 0; k < nsites; ++k) {
    TorusPoint p = site_at(side, static_cast<int>(k));
    double half_var = 0.5 * cov.var(p);
    if (k != 0) {
      rep.max_z_mean_l = std::max(rep.max_z_mean_l, z_against(sum_l, sum_l2, k, t));
      rep.max_z_left = std::max(rep.max_z_left, z_against(sum_left, sum_left2, k, t + half_var));
      rep.max_z_right =
          std::max(rep.max_z_right, z_against(sum_right, sum_right2, k, t + half_var));
    }
    grand += sum_l[k];
  }
  rep.rel_dev_spatial_mean =
      std::abs(grand / static_cast<double>(nsites) / replicas - t) / t;

  Summary s_l = summarize(sq_left);
  Summary s_r = summarize(sq_right);
  double se = std::sqrt(s_l.se * s_l.se + s_r.se * s_r.se);
  rep.z_second_moment = se > 0 ? std::abs(s_l.mean - s_r.mean) / se : 0.0;
  rep.ks_spatial = ks_two_sample(avg_left, avg_right);
  return rep;
}

struct CltDriftReport {
  TorusPoint site{0, 0};
  double sigma = 0;  // sqrt(C(x,x)) at the probe site
  std::vector<double> ts;
  std::vector<KsResult> ks;        // one per t, against Normal(0, sigma^2)
  std::vector<Summary> normalized; // summaries of (L - t)/sqrt(2t)
};

// Drift of (L_{tau_t}(x) - t)/sqrt(2t) towards the pinned-GFF marginal as t
// grows; the probe site is the far corner (N/2, N/2).
inline CltDriftReport clt_drift_check(int side, const std::vector<double>& ts, int replicas,
                                      std::uint64_t seed = 0, int workers = 0) {
  if (side > 16) throw SizeTooLarge("clt_drift_check: capped at side 16");
  if (ts.empty()) throw InsufficientData("clt_drift_check: no t values");
  if (replicas < 100) throw InsufficientData("clt_drift_check: need replicas >= 100");
  GffCovariance cov = GffCovariance::build(side);
  CltDriftReport rep;
  rep.site = TorusPoint{side / 2, side / 2};
  rep.sigma = std::sqrt(cov.var(rep.site));
  rep.ts = ts;
  const int probe = site_index(side, rep.site);
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    double t = ts[ti];
    std::vector<double> vals(replicas);
    parallel_for(replicas, workers, [&](long r) {
      WalkConfig wc;
      wc.side = side;
      wc.seed = seed;
      wc.stream = static_cast<std::uint64_t>(ti) * replicas + r;
      LocalTimeField f = run_until(wc, StopRule::inverse_local_time({0, 0}, t));
      vals[r] = (f.occupation[probe] - t) / std::sqrt(2.0 * t);
    });
    double sigma = rep.sigma;
    rep.ks.push_back(
        ks_one_sample(vals, [sigma](double v) { return normal_cdf(v / sigma); }));
    rep.normalized.push_back(summarize(vals));
  }
  return rep;
}

struct DominationReport {
  int side = 0;
  double t = 0;
  int replicas = 0;
  int comparisons = 0;
  int violations = 0;       // P(lhs > a) > P(rhs > a) + 3 SE
  double worst_margin_z = 0;  // max (p_lhs - p_rhs)/SE over the grid
};

// Tail comparison for the square-root domination: sqrt(L_{tau_t}(x)) against
// (h_x + sqrt(2t))^+ / sqrt(2), at probe sites and for the maximum over the
// probes. Thresholds are empirical quantiles of the dominating side plus
// a = 0; domination predicts no lhs tail exceeds its rhs counterpart.
inline DominationReport domination_check(int side, double t, int replicas,
                                         const std::vector<double>& probs,
                                         std::uint64_t seed = 0, int workers = 0) {
  if (side > 32) throw SizeTooLarge("domination_check: capped at side 32");
  if (replicas < 100) throw InsufficientData("domination_check: need replicas >= 100");
  GffCovariance cov = GffCovariance::build(side);
  std::vector<TorusPoint> probes = {
      TorusPoint{1, 0}, TorusPoint{side / 4, side / 4}, TorusPoint{side / 2, 0},
      TorusPoint{side / 2, side / 2}, TorusPoint{3 * side / 4, side / 4}};
  const std::size_t np = probes.size();
  std::vector<std::vector<double>> lhs(np + 1, std::vector<double>(replicas));
  std::vector<std::vector<double>> rhs(np + 1, std::vector<double>(replicas));
  double root2t = std::sqrt(2.0 * t);
  parallel_for(replicas, workers, [&](long r) {
    WalkConfig wc;
    wc.side = side;
    wc.seed = seed;
    wc.stream = 2 * static_cast<std::uint64_t>(r);
    LocalTimeField f = run_until(wc, StopRule::inverse_local_time({0, 0}, t));
    GffSample h = cov.sample(seed, 2 * static_cast<std::uint64_t>(r) + 1);
    double lmax = 0, rmax = 0;
    for (std::size_t k = 0; k < np; ++k) {
      double lv = std::sqrt(f.occupation_at(probes[k]));
      double rv = std::max(h.at(probes[k]) + root2t, 0.0) / std::sqrt(2.0);
      lhs[k][r] = lv;
      rhs[k][r] = rv;
      lmax = std::max(lmax, lv);
      rmax = std::max(rmax, rv);
    }
    lhs[np][r] = lmax;
    rhs[np][r] = rmax;
  });

  DominationReport rep;
  rep.side = side;
  rep.t = t;
  rep.replicas = replicas;
  double n = static_cast<double>(replicas);
  for (std::size_t k = 0; k <= np; ++k) {
    std::vector<double> grid{0.0};
    for (double q : probs) grid.push_back(quantile(rhs[k], q));
    for (double a : grid) {
      double p1 = 0, p2 = 0;
      for (int r = 0; r < replicas; ++r) {
        if (lhs[k][r] > a) p1 += 1;
        if (rhs[k][r] > a) p2 += 1;
      }
      p1 /= n;
      p2 /= n;
      double se = std::sqrt(p1 * (1 - p1) / n + p2 * (1 - p2) / n);
      if (se == 0) se = 1.0 / n;
      double margin = (p1 - p2) / se;
      ++rep.comparisons;
      rep.worst_margin_z = std::max(rep.worst_margin_z, margin);
      if (margin > 3.0) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace ltlab
