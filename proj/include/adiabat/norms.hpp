#pragma once

#include "adiabat/model.hpp"

namespace adiabat {

// Uniform grid on [center - T, center + T] with m nodes.
struct Grid {
  double T = 1.0;
  int m = 3;
  double center = 0.0;

  Grid() = default;
  Grid(double T_, int m_, double center_ = 0.0);
  double dt() const { return 2.0 * T / (m - 1); }
  double t(int i) const { return center - T + i * dt(); }
  double t_mid(int i) const { return t(i) + 0.5 * dt(); }
  bool same_as(const Grid& o) const;
};

// Default policy: T = 20/(1-|b|^2), dt <= min(0.02/(1-|b|^2), eps/5, 1/rho(Q)).
Grid default_grid(const ProblemTriple& tr, double eps);
// Smallest odd m with spacing at most dt on [-T, T].
Grid grid_with_spacing(double T, double dt);

// Samples live on nodes (m of them) or on the midpoints between them (m - 1).
enum class Placement { nodes, cells };

struct GridPath {
  Grid grid;
  Placement where = Placement::nodes;
  Mat values;  // n x count, one column per sample

  GridPath() = default;
  GridPath(Grid g, int n, Placement p = Placement::nodes);
  int n() const { return static_cast<int>(values.rows()); }
  int count() const { return static_cast<int>(values.cols()); }
  double time(int i) const { return where == Placement::nodes ? grid.t(i) : grid.t_mid(i); }
  auto col(int i) { return values.col(i); }
  auto col(int i) const { return values.col(i); }
  Vec xi(int i) const { return values.col(i).head(n() - 1); }
  double zeta(int i) const { return values(n() - 1, i); }
  Eigen::Map<Vec> flat() { return Eigen::Map<Vec>(values.data(), values.size()); }
  Eigen::Map<const Vec> flat() const { return Eigen::Map<const Vec>(values.data(), values.size()); }
  void set_flat(const Vec& v);
};

GridPath sample(const Grid& g, int n, const std::function<Vec(double)>& f, Placement p = Placement::nodes);
GridPath sample_limit_solution(const ProblemTriple& tr, const Grid& g);
GridPath sample_limit_velocity(const ProblemTriple& tr, const Grid& g);

// Second-order differences: central inside, one-sided at the ends.
GridPath derivative(const GridPath& p);
// Fourth-order variant, used where the energy tolerance demands it.
GridPath derivative4(const GridPath& p);

// Constant data for the eps-weighted inner product g0 at h = 0.
struct WeightContext {
  double eps = 0.1;
  Vec b;
  Vec M;    // diag(eps, ..., eps, 1)
  Mat g0;   // metric at h = 0

  WeightContext() = default;
  WeightContext(double eps_, Vec b_);
  int n() const { return static_cast<int>(b.size()) + 1; }
};

WeightContext make_context(const ProblemTriple& tr, double eps);

double pointwise_norm(const WeightContext& ctx, const Vec& eta);
double g0_inner(const WeightContext& ctx, const Vec& a, const Vec& b);

// Trapezoid weights on nodes, midpoint weights dt on cells.
Vec quadrature_weights(const GridPath& p);
double l2_inner(const WeightContext& ctx, const GridPath& a, const GridPath& b);
double l2_norm(const WeightContext& ctx, const GridPath& p);
double w12_norm(const WeightContext& ctx, const GridPath& p, const GridPath& dp);
double w12_norm(const WeightContext& ctx, const GridPath& p);
double linf_norm(const WeightContext& ctx, const GridPath& p);
double sobolev_ratio(const WeightContext& ctx, const GridPath& p, const GridPath& dp);

// Resample p at times t + tau with cubic B-splines; values beyond the ends are held constant.
GridPath shifted(const GridPath& p, double tau);

// Zoom: gamma_x(t) = g_x(t/eps)/eps^2, gamma_z(t) = g_z(t/eps)/eps.
GridPath zoom(const GridPath& lambda_path, double eps);
GridPath unzoom(const GridPath& path, double eps);

}  // namespace adiabat
