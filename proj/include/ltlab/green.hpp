#pragma once

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ltlab/errors.hpp"
#include "ltlab/torus.hpp"

namespace ltlab {

// Dirichlet solver for (I - P)|_A on a proper subset A of the torus, where P
// is the simple random walk kernel. Solutions are exact occupation
// expectations because holding times have unit mean. Regions up to 20k sites
// are factored directly (sparse Cholesky); larger regions fall back to
// conjugate gradients with relative residual 1e-10.
class GreenSolver {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  GreenSolver(int side, const PointSet& region) : side_(side), region_(region) {
    if (region.side() != side) throw GeometryViolation("GreenSolver: side mismatch");
    if (region.empty()) throw EmptyRegion("GreenSolver: empty region");
    if (region.full()) throw SingularSystem("GreenSolver: region is the whole torus");
    sites_ = region.indices();
    site_to_idx_.assign(static_cast<std::size_t>(side) * side, -1);
    for (std::int32_t k = 0; k < static_cast<std::int32_t>(sites_.size()); ++k)
      site_to_idx_[sites_[k]] = k;

    const int m = static_cast<int>(sites_.size());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(5ull * m);
    for (int a = 0; a < m; ++a) {
      TorusPoint p = site_at(side, sites_[a]);
      trips.emplace_back(a, a, 1.0);
      const TorusPoint nbrs[4] = {
          torus_point(side, p.i + 1, p.j), torus_point(side, p.i - 1, p.j),
          torus_point(side, p.i, p.j + 1), torus_point(side, p.i, p.j - 1)};
      for (TorusPoint q : nbrs) {
        std::int32_t b = site_to_idx_[site_index(side, q)];
        if (b >= 0) trips.emplace_back(a, b, -0.25);
      }
    }
    mat_.resize(m, m);
    mat_.setFromTriplets(trips.begin(), trips.end());

    use_direct_ = m <= 20'000;
    if (use_direct_) {
      llt_.compute(mat_);
      if (llt_.info() != Eigen::Success)
        throw SingularSystem("GreenSolver: factorization failed");
    } else {
      cg_.setTolerance(1e-10);
      cg_.setMaxIterations(20ll * m);
      cg_.compute(mat_);
    }
  }

  int side() const { return side_; }
  const PointSet& region() const { return region_; }
  const std::vector<std::int32_t>& sites() const { return sites_; }

  int index_of(TorusPoint p) const { return site_to_idx_[site_index(side_, p)]; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (use_direct_) return llt_.solve(rhs);
    Eigen::VectorXd x = cg_.solve(rhs);
    if (cg_.info() != Eigen::Success)
      throw SingularSystem("GreenSolver: conjugate gradient did not converge");
    return x;
  }

  // Column of the Green's function: column(x)[k] = G_A(site_k, x).
  Eigen::VectorXd column(TorusPoint x) const {
    int idx = index_of(x);
    if (idx < 0) throw SiteOutsideRegion("GreenSolver::column: site outside region");
    Eigen::VectorXd e = Eigen::VectorXd::Zero(sites_.size());
    e[idx] = 1.0;
    return solve(e);
  }

  double value(TorusPoint x0, TorusPoint x) const {
    int i0 = index_of(x0);
    if (i0 < 0) throw SiteOutsideRegion("GreenSolver::value: x0 outside region");
    return column(x)[i0];
  }

 private:
  int side_;
  PointSet region_;
  std::vector<std::int32_t> sites_;
  std::vector<std::int32_t> site_to_idx_;
  bool use_direct_ = true;
  SpMat mat_;
  Eigen::SimplicialLLT<SpMat> llt_;
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg_;
};

// G_A(x0, x) = expected occupation of x before exiting A, started at x0.
inline double green_exact(int side, const PointSet& region, TorusPoint x0, TorusPoint x) {
  GreenSolver solver(side, region);
  return solver.value(x0, x);
}

struct GreenMatrix {
  int side = 0;
  std::vector<std::int32_t> sites;
  std::vector<std::int32_t> site_to_idx;
  Eigen::MatrixXd values;  // values(a, b) = G(site_a, site_b)

  double at(TorusPoint x0, TorusPoint x) const {
    std::int32_t a = site_to_idx[site_index(side, x0)];
    std::int32_t b = site_to_idx[site_index(side, x)];
    if (a < 0 || b < 0) throw SiteOutsideRegion("GreenMatrix::at: site outside region");
    return values(a, b);
  }
};

inline GreenMatrix green_matrix(int side, const PointSet& region) {
  GreenSolver solver(side, region);
  const int m = static_cast<int>(solver.sites().size());
  GreenMatrix g;
  g.side = side;
  g.sites = solver.sites();
  g.site_to_idx.assign(static_cast<std::size_t>(side) * side, -1);
  for (std::int32_t k = 0; k < m; ++k) g.site_to_idx[g.sites[k]] = k;
  g.values.resize(m, m);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  for (int b = 0; b < m; ++b) {
    e[b] = 1.0;
    g.values.col(b) = solver.solve(e);
    e[b] = 0.0;
  }
  return g;
}

// P_{x0}( hit boundary of D(center, r) before hitting boundary of D(center, R) ),
// for r < d(x0, center) < R < side/2, by exact Dirichlet solve on the annulus.
inline double hitting_prob_exact(int side, TorusPoint center, double r, double R,
                                 TorusPoint x0) {
  if (!(0 < r && r < R)) throw GeometryViolation("hitting_prob_exact: need 0 < r < R");
  if (2 * R >= side) throw RadiusTooLarge("hitting_prob_exact: need R < side/2");
  double d = torus_distance(side, x0, center);
  if (!(d > r && d < R))
    throw GeometryViolation("hitting_prob_exact: need r < d(x0, center) < R");

  PointSet inner = ball(side, center, r);
  PointSet inner_bd = boundary(side, inner);
  if (inner_bd.contains(x0)) return 1.0;

  PointSet outer = ball(side, center, R);
  PointSet unknowns(side);
  for (std::int32_t idx : outer.indices())
    if (!inner_bd.contains_index(idx)) unknowns.insert_index(idx);

  GreenSolver solver(side, unknowns);
  const auto& sites = solver.sites();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(sites.size());
  for (std::size_t k = 0; k < sites.size(); ++k) {
    TorusPoint p = site_at(side, sites[k]);
    const TorusPoint nbrs[4] = {
        torus_point(side, p.i + 1, p.j), torus_point(side, p.i - 1, p.j),
        torus_point(side, p.i, p.j + 1), torus_point(side, p.i, p.j - 1)};
    int hits = 0;
    for (TorusPoint q : nbrs)
      if (inner_bd.contains(q)) ++hits;
    if (hits > 0) rhs[k] = 0.25 * hits;
  }
  Eigen::VectorXd h = solver.solve(rhs);
  int i0 = solver.index_of(x0);
  if (i0 < 0) throw SiteOutsideRegion("hitting_prob_exact: x0 outside solve region");
  return h[i0];
}

// k-th moment of the occupation of `center` before exiting D(center, R),
// started from x0: k! G(x0, c) G(c, c)^{k-1}.
inline double kac_moment(int side, TorusPoint center, double R, TorusPoint x0, int k) {
  if (k < 1) throw GeometryViolation("kac_moment: need k >= 1");
  PointSet region = ball(side, center, R);
  if (!region.contains(x0)) throw SiteOutsideRegion("kac_moment: x0 outside D(center, R)");
  GreenSolver solver(side, region);
  Eigen::VectorXd col = solver.column(center);
  double g_x0 = col[solver.index_of(x0)];
  double g_cc = col[solver.index_of(center)];
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  return fact * g_x0 * std::pow(g_cc, k - 1);
}

// E_{x0}[ exp( -(beta / G(c,c)) * L ) ] where L is the occupation of c before
// exiting D(center, R): equals 1 - (G(x0,c)/G(c,c)) * beta/(1+beta).
inline double laplace_excursion_transform(int side, TorusPoint center, double R,
                                          TorusPoint x0, double beta) {
  if (beta <= 0) throw GeometryViolation("laplace_excursion_transform: need beta > 0");
  PointSet region = ball(side, center, R);
  if (!region.contains(x0))
    throw SiteOutsideRegion("laplace_excursion_transform: x0 outside D(center, R)");
  GreenSolver solver(side, region);
  Eigen::VectorXd col = solver.column(center);
  double g_x0 = col[solver.index_of(x0)];
  double g_cc = col[solver.index_of(center)];
  return 1.0 - (g_x0 / g_cc) * beta / (1.0 + beta);
}

struct GreenLogRow {
  double R = 0;
  double g_center = 0;         // G_{D(R)}(c, c)
  double log_term = 0;         // (2/pi) log R
  double residual = 0;         // g_center - log_term
  double g_off = 0;            // G_{D(R)}(x0, c) at d(x0, c) ~ R/2
  double off_pred = 0;         // (2/pi) log(R / d)
  double off_residual = 0;
};

struct GreenLogTable {
  std::vector<GreenLogRow> rows;
  double max_center_residual = 0;
  double max_residual_delta = 0;  // max |residual(R_{k+1}) - residual(R_k)|
  double max_off_residual = 0;
};

// Sweep of centred and off-centre Green values against the (2/pi) log
// asymptotics. Residuals should settle near the lattice constant ~1.03 as R
// grows; the table reports them for callers to bound.
inline GreenLogTable green_log_residual(int side, const std::vector<double>& radii) {
  if (radii.empty()) throw InsufficientData("green_log_residual: no radii");
  GreenLogTable table;
  TorusPoint c{side / 2, side / 2};
  for (double R : radii) {
    PointSet region = ball(side, c, R);
    GreenSolver solver(side, region);
    Eigen::VectorXd col = solver.column(c);
    GreenLogRow row;
    row.R = R;
    row.g_center = col[solver.index_of(c)];
    row.log_term = 2.0 / M_PI * std::log(R);
    row.residual = row.g_center - row.log_term;

    int d = std::max(1, static_cast<int>(std::lround(R / 2)));
    TorusPoint x0 = torus_point(side, c.i + d, c.j);
    row.g_off = col[solver.index_of(x0)];
    row.off_pred = 2.0 / M_PI * std::log(R / torus_distance(side, x0, c));
    row.off_residual = row.g_off - row.off_pred;
    table.rows.push_back(row);

    table.max_center_residual = std::max(table.max_center_residual, std::abs(row.residual));
    table.max_off_residual = std::max(table.max_off_residual, std::abs(row.off_residual));
  }
  for (std::size_t k = 1; k < table.rows.size(); ++k)
    table.max_residual_delta =
        std::max(table.max_residual_delta,
                 std::abs(table.rows[k].residual - table.rows[k - 1].residual));
  return table;
}

}  // namespace ltlab
