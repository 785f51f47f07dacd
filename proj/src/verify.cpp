#include "adiabat/verify.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace adiabat {

namespace {

Vec energy_density(const ProblemTriple& tr, double eps, const GridPath& path) {
  if (path.where != Placement::nodes) throw InvalidInput("path_energy: node path expected");
  const GridPath d = derivative4(path);
  const WeightContext ctx(eps, tr.b());
  Vec q(path.count());
  for (int i = 0; i < path.count(); ++i) {
    const Vec v = d.col(i);
    q(i) = tr.h_is_zero() ? v.dot(ctx.g0 * v) : v.dot(metric(tr, eps, Vec(path.col(i))) * v);
  }
  return q;
}

double trapezoid(const Vec& q, double dt, int i0, int i1) {
  if (i0 == i1) return 0.0;
  return dt * (q.segment(i0, i1 - i0 + 1).sum() - 0.5 * (q(i0) + q(i1)));
}

}  // namespace

double path_energy(const ProblemTriple& tr, double eps, const GridPath& path, int i0, int i1) {
  if (i1 < 0) i1 = path.count() - 1;
  if (i0 < 0 || i1 >= path.count() || i0 > i1) throw InvalidInput("path_energy: bad index range");
  if (i0 == i1) return 0.0;
  return trapezoid(energy_density(tr, eps, path), path.grid.dt(), i0, i1);
}

namespace {

double fit_rate(const std::vector<double>& t, const std::vector<double>& s) {
  const double n = static_cast<double>(t.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double y = std::log(s[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace

DecayReport decay_fit(const ProblemTriple& tr, double eps, const GridPath& path, double tail_fraction) {
  if (!(tail_fraction > 0 && tail_fraction <= 1)) throw InvalidInput("decay_fit: tail_fraction must lie in (0, 1]");
  const int k = path.n() - 1;
  const double floor_noise = 1e-13;
  DecayReport rep;
  rep.floor = tr.rate();
  for (int side : {+1, -1}) {
    std::vector<double> t, s;
    for (int i = 0; i < path.count(); ++i) {
      const double ti = path.time(i);
      if (side * ti < 0) continue;
      const double dz = path.zeta(i) - side;
      const double v = eps * eps * path.col(i).head(k).squaredNorm() + dz * dz;
      if (v > floor_noise) {
        t.push_back(side * ti);
        s.push_back(v);
      }
    }
    // keep the outermost fraction of the resolved tail
    std::vector<std::size_t> idx(t.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
    const std::size_t keep = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(idx.size())));
    if (keep < 50) throw InvalidInput("decay_fit: tail under-resolved (fewer than 50 samples above the noise floor)");
    std::vector<double> tt, ss;
    for (std::size_t j = idx.size() - keep; j < idx.size(); ++j) {
      tt.push_back(t[idx[j]]);
      ss.push_back(s[idx[j]]);
    }
    const double rate = -fit_rate(tt, ss);
    if (side > 0) {
      rep.rate_plus = rate;
      rep.samples_plus = static_cast<int>(keep);
    } else {
      rep.rate_minus = rate;
      rep.samples_minus = static_cast<int>(keep);
    }
  }
  rep.pass = rep.rate_plus >= 0.9 * rep.floor && rep.rate_minus >= 0.9 * rep.floor;
  return rep;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nan("");
  const double n = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceReport convergence_study(const ProblemTriple& tr, const std::vector<double>& eps_list, const GridPolicy& policy) {
  struct One {
    double w12 = 0, linf = 0;
    bool ok = false;
  };
  std::vector<std::future<One>> jobs;
  for (double eps : eps_list) {
    jobs.push_back(std::async(std::launch::async, [&tr, &policy, eps] {
      One o;
      try {
        const LinearizedSystem sys = assemble(tr, eps, policy(tr, eps));
        const Solution sol = newton_solve(sys);
        o.w12 = w12_norm(sys.ctx, sol.eta);
        o.linf = std::sqrt(eps) * linf_norm(sys.ctx, sol.eta);
        o.ok = true;
      } catch (const SolverError&) {
        o.ok = false;
      }
      return o;
    }));
  }
  ConvergenceReport rep;
  rep.eps_list = eps_list;
  std::vector<double> e, a, b;
  bool all_zero = true;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const One o = jobs[i].get();
    rep.error_w12.push_back(o.w12);
    rep.error_linf.push_back(o.linf);
    rep.converged.push_back(o.ok);
    if (o.ok) {
      e.push_back(eps_list[i]);
      a.push_back(o.w12);
      b.push_back(o.linf);
      if (o.w12 > 1e-14) all_zero = false;
    }
  }
  rep.exact = all_zero && !e.empty();
  if (!rep.exact) {
    rep.slope_w12 = loglog_slope(e, a);
    rep.slope_linf = loglog_slope(e, b);
  } else {
    rep.slope_w12 = rep.slope_linf = std::nan("");
  }
  return rep;
}

double restricted_margin(const LinearizedSystem& sys, const SpMat& op, const Mat& extra) {
  SpMat R = sys.D_star;
  if (extra.cols() > 0) {
    SpMat X(R.rows(), R.cols() + extra.cols());
    std::vector<Eigen::Triplet<double>> t;
    for (int c = 0; c < R.outerSize(); ++c)
      for (SpMat::InnerIterator it(R, c); it; ++it) t.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (Eigen::Index c = 0; c < extra.cols(); ++c)
      for (Eigen::Index r = 0; r < extra.rows(); ++r)
        if (extra(r, c) != 0.0) t.emplace_back(static_cast<int>(r), static_cast<int>(R.cols() + c), extra(r, c));
    X.setFromTriplets(t.begin(), t.end());
    R = X;
  }
  return smallest_singular_values(op * R, identity(static_cast<int>(R.cols())), SpMat(R.transpose() * sys.W_nodes * R), sys.W_cells, 1).values.front();
}

double transversality_margin(const LinearizedSystem& sys, const Solution& sol) {
  return restricted_margin(sys, dF_eps(sys, sol.eta));
}

std::vector<GridPath> standard_seeds(const LinearizedSystem& sys, std::uint64_t seed) {
  std::vector<GridPath> seeds;
  seeds.push_back(sys.nodes());
  for (double s : {0.5, -0.5}) {
    GridPath p = sample(sys.grid, sys.n(), [&](double t) { return pack(limit_solution(sys.triple, t + s)); });
    p.values -= sys.base.values;
    seeds.push_back(p);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  GridPath noise = sys.nodes();
  const double T4 = sys.grid.T / 4;
  for (int i = 0; i < noise.count(); ++i) {
    const double win = std::exp(-std::pow(noise.time(i) / T4, 8));
    for (int r = 0; r < sys.n(); ++r) noise.values(r, i) = 1e-2 * N(rng) * win;
  }
  seeds.push_back(noise);
  return seeds;
}

UniquenessReport uniqueness_study(const LinearizedSystem& sys, const std::vector<GridPath>& seeds) {
  NewtonOptions opts;
  opts.linearization = Linearization::current;
  opts.linear_solve = LinearSolve::direct;
  opts.residual_tol = 1e-11;
  UniquenessReport rep;
  std::vector<GridPath> sols;
  for (const GridPath& s : seeds) {
    try {
      sols.push_back(newton_solve(sys, opts, &s).gamma);
      rep.converged.push_back(true);
      rep.notes.emplace_back("converged");
    } catch (const SolverError& e) {
      rep.converged.push_back(false);
      rep.notes.emplace_back(std::string("outside basin: ") + e.what());
    }
  }
  for (std::size_t i = 0; i < sols.size(); ++i) {
    for (std::size_t j = i + 1; j < sols.size(); ++j) {
      const Alignment a = align_and_compare(sys.ctx, sols[j], sols[i]);
      if (i == 0) rep.tau.push_back(a.tau);
      rep.max_distance = std::max(rep.max_distance, a.distance);
    }
  }
  return rep;
}

ShootingReport shooting_check(const LinearizedSystem& sys, const GridPath& gamma, double delta, double max_step) {
  const int n = sys.n();
  Vec pm = Vec::Zero(n);
  pm(n - 1) = -1.0;
  int start = 0;
  while (start < gamma.count() - 3 && (gamma.col(start) - pm).norm() < delta) ++start;
  const int m = sys.grid.m;
  if ((m - start) % 2 == 0) --start;
  start = std::max(start, 0);
  const double t0 = sys.grid.t(start);
  const double half = 0.5 * (sys.grid.t(m - 1) - t0);
  const Grid sub(half, m - start, t0 + half);
  const Vec v = unstable_direction(sys.triple, sys.eps());
  StepOptions so;
  so.max_step = max_step;
  const GridPath part = integrate(sys.triple, sys.eps(), unpack(pm + delta * v), sub, so);
  GridPath full = sys.nodes();
  for (int i = 0; i < m; ++i) full.col(i) = i < start ? pm : Vec(part.col(i - start));
  const Alignment a = align_and_compare(sys.ctx, full, gamma);
  return ShootingReport{a.tau, a.distance};
}

double adjointness_defect(const LinearizedSystem& sys, const GridPath& eta, const GridPath& u) {
  const double lhs = l2_inner(sys.ctx, apply_D(sys, eta), u);
  const double rhs = l2_inner(sys.ctx, eta, apply_D_star(sys, u));
  const double scale = l2_norm(sys.ctx, eta) * l2_norm(sys.ctx, u);
  return scale > 0 ? std::abs(lhs - rhs) / scale : 0.0;
}

TestField random_bumps(int n, double eps, double T, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N;
  struct Bump {
    Vec a;
    double c, s;
  };
  std::vector<Bump> bumps;
  for (int j = 0; j < 3; ++j) {
    Vec a(n);
    for (int r = 0; r < n; ++r) a(r) = N(rng) / (r + 1 < n ? eps : 1.0);
    bumps.push_back(Bump{a, T / 3 * (2 * U(rng) - 1), 0.5 + U(rng)});
  }
  TestField f;
  f.value = [bumps, n](double t) {
    Vec v = Vec::Zero(n);
    for (const auto& b : bumps) v += b.a * std::exp(-std::pow((t - b.c) / b.s, 2));
    return v;
  };
  f.derivative = [bumps, n](double t) {
    Vec v = Vec::Zero(n);
    for (const auto& b : bumps) {
      const double u = (t - b.c) / b.s;
      v += b.a * (-2 * u / b.s * std::exp(-u * u));
    }
    return v;
  };
  return f;
}

DoublingCheck doubling_identities(const LinearizedSystem& sys, const TestField& f) {
  const int n = sys.n();
  const ProblemTriple& tr = sys.triple;
  const double c = tr.rate();
  auto rhs_terms = [&](Placement where, double sign) {
    const GridPath v = sample(sys.grid, n, f.value, where);
    const GridPath d = sample(sys.grid, n, f.derivative, where);
    GridPath Qv = v;
    const Vec w = quadrature_weights(v);
    double cross = 0.0;
    for (int i = 0; i < v.count(); ++i) {
      const double t = v.time(i);
      const double z0 = std::tanh(c * t);
      const double zdot = c / std::pow(std::cosh(c * t), 2);
      Qv.col(i) = Q_matrix(tr, sys.eps(), z0) * v.col(i);
      cross += w(i) * 2 * zdot * v.zeta(i) * v.zeta(i);
    }
    const double a = l2_norm(sys.ctx, d);
    const double q = l2_norm(sys.ctx, Qv);
    return a * a + sign * cross + q * q;
  };
  DoublingCheck out;
  const GridPath en = sample(sys.grid, n, f.value, Placement::nodes);
  const double lhs_D = std::pow(l2_norm(sys.ctx, apply_D(sys, en)), 2);
  const double rhs_D = rhs_terms(Placement::nodes, -1.0);
  out.rel_error_D = std::abs(lhs_D - rhs_D) / std::max(lhs_D, 1e-300);
  const GridPath ec = sample(sys.grid, n, f.value, Placement::cells);
  const double lhs_S = std::pow(l2_norm(sys.ctx, apply_D_star(sys, ec)), 2);
  const double rhs_S = rhs_terms(Placement::cells, +1.0);
  out.rel_error_Dstar = std::abs(lhs_S - rhs_S) / std::max(lhs_S, 1e-300);
  return out;
}

std::vector<double> D_singular_values(const LinearizedSystem& sys, int k) {
  const SpMat Dd = D_dirichlet(sys);
  const SpMat Wi = block_weight(Vec::Constant(sys.grid.m - 2, sys.grid.dt()), sys.ctx.g0);
  return smallest_singular_values(Dd, identity(static_cast<int>(Dd.cols())), Wi, sys.W_cells, k).values;
}

double D_star_min_singular_value(const LinearizedSystem& sys) {
  return smallest_singular_values(sys.D_star, identity(sys.cell_dofs()), sys.W_cells, sys.W_nodes, 1).values.front();
}

double crucial_ratio(const LinearizedSystem& sys, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double sup = 0.0;
  for (int s = 0; s < samples; ++s) {
    const TestField f = random_bumps(sys.n(), sys.eps(), sys.grid.T, rng);
    const GridPath u = sample(sys.grid, sys.n(), f.value, Placement::cells);
    const GridPath eta = apply_D_star(sys, u);
    const double num = w12_norm(sys.ctx, eta);
    const double den = l2_norm(sys.ctx, apply_D(sys, eta));
    if (den > 0) sup = std::max(sup, num / den);
  }
  return sup;
}

TailEnergy tail_energy_check(const ProblemTriple& tr, double eps, const GridPath& gamma, double rho) {
  TailEnergy out;
  const int m = gamma.count();
  const int mid = m / 2;
  const Vec q = energy_density(tr, eps, gamma);
  const double dt = gamma.grid.dt();
  const double total = trapezoid(q, dt, 0, m - 1);
  for (int j = 1; j <= mid; ++j) {
    const double e = trapezoid(q, dt, mid - j, mid + j);
    if (e >= 4.0 / 3.0 - rho) {
      out.T_rho = gamma.time(mid + j) - gamma.time(mid);
      out.middle = e;
      out.tails = total - e;
      out.pass = out.tails < 2 * rho;
      return out;
    }
  }
  out.middle = total;
  return out;
}

bool monotone_z(const GridPath& gamma) {
  for (int i = 0; i + 1 < gamma.count(); ++i) {
    const double d = gamma.zeta(i + 1) - gamma.zeta(i);
    const bool saturated = 1.0 - std::abs(gamma.zeta(i)) < 1e-8;
    if (saturated ? d < -1e-13 : d <= 0) return false;
  }
  return true;
}

}  // namespace adiabat
