#include <gtest/gtest.h>

#include "adiabat/operators.hpp"
#include "adiabat/verify.hpp"
#include "fixtures.hpp"

using namespace adiabat;
using namespace fixtures;

namespace {

GridPath random_path(const LinearizedSystem& sys, Placement p, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N;
  GridPath out(sys.grid, sys.n(), p);
  const double T = sys.grid.T;
  std::vector<double> phase(static_cast<std::size_t>(sys.n()));
  for (auto& ph : phase) ph = N(rng);
  const double a = N(rng), c = N(rng);
  for (int i = 0; i < out.count(); ++i) {
    const double t = out.time(i);
    const double win = std::exp(-std::pow(t / (0.4 * T), 8) - 0.1 * t * t) * (1.0 + 0.3 * a * std::cos(c * t));
    for (int r = 0; r < sys.n(); ++r) out.values(r, i) = scale * win * std::sin((r + 1) * t + phase[static_cast<std::size_t>(r)]);
  }
  return out;
}

}  // namespace

TEST(Q, TwoFormulas) {
  const ProblemTriple tr = scalar_triple(0.5);
  EXPECT_LT((Q_matrix(tr, 0.1, 0.0) - Q_factored(tr, 0.1, 0.0)).norm(), 1e-12);
  std::mt19937_64 rng(3);
  const ProblemTriple t3 = ProblemTriple::make(random_spd(2, rng), Vec::Constant(2, 0.35));
  for (double z : {-0.9, 0.2, 0.7}) {
    const Mat a = Q_matrix(t3, 0.05, z), b = Q_factored(t3, 0.05, z);
    EXPECT_LT((a - b).norm(), 1e-12 * a.norm());
  }
  const ProblemTriple t0 = scalar_triple(0.0);
  const Mat Q = Q_matrix(t0, 0.1, 0.4);
  EXPECT_EQ(Q(0, 1), 0.0);
  EXPECT_EQ(Q(1, 0), 0.0);
  EXPECT_NEAR(Q(0, 0), 20.0, 1e-13);
  EXPECT_NEAR(Q(1, 1), 0.8, 1e-15);
}

TEST(Assemble, Validation) {
  const ProblemTriple tr = scalar_triple(0.5);
  EXPECT_THROW(assemble(tr, 0.0, Grid(5.0, 101)), InvalidInput);
  EXPECT_THROW(Grid(5.0, 1), InvalidInput);
}

TEST(ApplyD, LimitVelocity) {
  const ProblemTriple tr = scalar_triple(0.5);
  auto err = [&](double dt) {
    const LinearizedSystem sys = assemble(tr, 0.1, grid_with_spacing(8.0, dt));
    const GridPath Dw = apply_D(sys, sys.base_velocity);
    double e = 0;
    for (int i = 0; i < Dw.count(); ++i) {
      Vec expected = Vec::Zero(2);
      expected(0) = limit_acceleration(tr, Dw.time(i))(0);
      e = std::max(e, (Dw.col(i) - expected).norm());
    }
    return e;
  };
  const double e1 = err(0.01), e2 = err(0.005);
  EXPECT_LT(e1, 1e-3);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.3);
}

TEST(ApplyE, ZeroLinearAndDifferences) {
  const ProblemTriple t0 = scalar_triple(0.5);
  std::mt19937_64 rng(12);
  const LinearizedSystem s0 = assemble(t0, 0.1, Grid(6.0, 601));
  const GridPath eta = random_path(s0, Placement::nodes, rng);
  EXPECT_EQ(apply_E(s0, eta).values.norm(), 0.0);

  const ProblemTriple tr = ProblemTriple::make(scalar(2.0), vec1(0.5), random_affine_h(2, rng, 0.2));
  const double eps = 0.1;
  const LinearizedSystem sys = assemble(tr, eps, Grid(6.0, 601));
  const GridPath e1 = apply_E(sys, eta);
  GridPath scaled = eta;
  scaled.values *= 2.5;
  EXPECT_LT((apply_E(sys, scaled).values - 2.5 * e1.values).norm(), 1e-12 * (1 + e1.values.norm()));

  // Richardson-extrapolated differences of R along eta
  auto diff = [&](double s) {
    GridPath d = sys.nodes();
    for (int i = 0; i < d.count(); ++i) {
      const Vec g = sys.base.col(i);
      d.col(i) = -(remainder(tr, eps, Vec(g + s * eta.col(i))) - remainder(tr, eps, Vec(g - s * eta.col(i)))) / (2 * s);
    }
    return d;
  };
  const double s = 1e-3;
  const Mat rich = (4 * diff(s / 2).values - diff(s).values) / 3;
  EXPECT_LT((rich - e1.values).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, e1.values.cwiseAbs().maxCoeff()));

  // the assembled box matrix agrees with the pointwise action averaged onto cells
  const Vec Ev = sys.E * eta.flat();
  GridPath avg = sys.cells();
  for (int i = 0; i + 1 < sys.grid.m; ++i) avg.col(i) = 0.5 * (e1.col(i) + e1.col(i + 1));
  EXPECT_LT((Ev - avg.flat()).norm(), 1e-12 * (1 + Ev.norm()));
}

TEST(FEps, Examples) {
  const ProblemTriple t0 = scalar_triple(0.0);
  const LinearizedSystem s0 = assemble(t0, 0.1, default_grid(t0, 0.1));
  EXPECT_EQ(l2_norm(s0.ctx, F_eps(s0, s0.nodes())), 0.0);

  // F(0) averages (dgamma0_x, 0) onto cells; its size is O(eps)
  const ProblemTriple tr = scalar_triple(0.5);
  std::vector<double> norms;
  for (double eps : {0.2, 0.1, 0.05}) {
    const LinearizedSystem sys = assemble(tr, eps, default_grid(tr, eps));
    const GridPath F = F_eps(sys, sys.nodes());
    double e = 0;
    for (int i = 0; i < F.count(); ++i) {
      const double expected = 0.5 * (sys.base_velocity.values(0, i) + sys.base_velocity.values(0, i + 1));
      e = std::max(e, std::abs(F.values(0, i) - expected) + std::abs(F.values(1, i)));
    }
    EXPECT_LT(e, 1e-12);
    norms.push_back(l2_norm(sys.ctx, F));
  }
  EXPECT_NEAR(norms[0] / norms[1], 2.0, 0.1);
  EXPECT_NEAR(norms[1] / norms[2], 2.0, 0.1);
}

TEST(DFEps, EqualsDAtZeroAndMatchesDifferences) {
  const ProblemTriple t0 = scalar_triple(0.5);
  const LinearizedSystem s0 = assemble(t0, 0.1, Grid(6.0, 601));
  EXPECT_EQ(SpMat(dF_eps(s0, s0.nodes()) - s0.D).norm(), 0.0);

  std::mt19937_64 rng(4);
  const ProblemTriple tr = ProblemTriple::make(scalar(2.0), vec1(0.5), random_affine_h(2, rng, 0.2));
  const LinearizedSystem sys = assemble(tr, 0.1, Grid(6.0, 601));
  const GridPath eta = random_path(sys, Placement::nodes, rng, 0.2);
  const GridPath dir = random_path(sys, Placement::nodes, rng);
  const Vec J = dF_eps(sys, eta) * dir.flat();
  auto diff = [&](double s) {
    GridPath p = eta, m = eta;
    p.values += s * dir.values;
    m.values -= s * dir.values;
    return Vec((F_eps(sys, p).flat() - F_eps(sys, m).flat()) / (2 * s));
  };
  const double s = 1e-3;
  const Vec rich = (4 * diff(s / 2) - diff(s)) / 3;
  EXPECT_LT((rich - J).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, J.cwiseAbs().maxCoeff()));
  // E at the base is the h part of dF(0)
  EXPECT_LT(SpMat(dF_eps(sys, sys.nodes()) - sys.D - sys.E).norm(), 1e-10);
}

TEST(DFEps, QuadraticEstimateShape) {
  // |(dF(Delta) - dF(0)) v| grows linearly in |Delta|
  const ProblemTriple tr = scalar_triple(0.5);
  const LinearizedSystem sys = assemble(tr, 0.1, Grid(6.0, 601));
  std::mt19937_64 rng(2);
  const GridPath delta = random_path(sys, Placement::nodes, rng);
  const GridPath v = random_path(sys, Placement::nodes, rng);
  const SpMat d0 = dF_eps(sys, sys.nodes());
  std::vector<double> ratio;
  for (double s : {1e-1, 1e-2, 1e-3}) {
    GridPath d = delta;
    d.values *= s;
    const Vec diff = (dF_eps(sys, d) - d0) * v.flat();
    ratio.push_back(l2_norm(sys.ctx, from_flat(sys.grid, 2, Placement::cells, diff)) / (s * w12_norm(sys.ctx, delta)));
  }
  EXPECT_NEAR(ratio[0], ratio[2], 1e-8 * ratio[0]);
}

TEST(SolveNormal, ZeroAndManufactured) {
  const ProblemTriple tr = scalar_triple(0.5);
  const LinearizedSystem sys = assemble(tr, 0.05, default_grid(tr, 0.05));
  EXPECT_EQ(solve_normal(sys, sys.cells()).values.norm(), 0.0);
  std::mt19937_64 rng(6);
  const GridPath u = random_path(sys, Placement::cells, rng);
  const GridPath rhs = apply_D(sys, apply_D_star(sys, u));
  const GridPath got = solve_normal(sys, rhs);
  EXPECT_LT((got.values - u.values).norm(), 1e-8 * u.values.norm());
  const GridPath back = apply_D(sys, apply_D_star(sys, got));
  GridPath r = back;
  r.values -= rhs.values;
  EXPECT_LT(l2_norm(sys.ctx, r), 1e-10 * l2_norm(sys.ctx, rhs));
}

TEST(SolveNormal, FirstCorrectionIsOrderEps) {
  const ProblemTriple tr = scalar_triple(0.5);
  std::vector<double> sizes;
  for (double eps : {0.1, 0.05, 0.025}) {
    const LinearizedSystem sys = assemble(tr, eps, default_grid(tr, eps));
    GridPath rhs = F_eps(sys, sys.nodes());
    rhs.values *= -1;
    sizes.push_back(w12_norm(sys.ctx, apply_D_star(sys, solve_normal(sys, rhs))) / eps);
  }
  EXPECT_LT(*std::max_element(sizes.begin(), sizes.end()) / *std::min_element(sizes.begin(), sizes.end()), 1.5);
}

TEST(SliceSolve, Examples) {
  const ProblemTriple tr = scalar_triple(0.5);
  const LinearizedSystem sys = assemble(tr, 0.05, default_grid(tr, 0.05));
  std::mt19937_64 rng(7);
  const GridPath rhs = random_path(sys, Placement::cells, rng);
  const SliceResult r = slice_solve(sys, sys.D, rhs);
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 1);
  // eta is D* upsilon and solves the system
  EXPECT_LT((apply_D_star(sys, r.upsilon).values - r.eta.values).norm(), 1e-14 * (1 + r.eta.values.norm()));
  GridPath res = apply_D(sys, r.eta);
  res.values -= rhs.values;
  EXPECT_LT(l2_norm(sys.ctx, res), 1e-10 * l2_norm(sys.ctx, rhs));

  const ProblemTriple ta = ProblemTriple::make(scalar(2.0), vec1(0.5), random_affine_h(2, rng, 0.3));
  const LinearizedSystem sa = assemble(ta, 0.05, default_grid(ta, 0.05));
  const GridPath rhs2 = random_path(sa, Placement::cells, rng);
  const SpMat op = sa.D + sa.E;
  const SliceResult ra = slice_solve(sa, op, rhs2);
  EXPECT_TRUE(ra.report.converged);
  EXPECT_GT(ra.report.iterations, 1);
  EXPECT_LT(ra.report.contraction, 0.5);
  for (std::size_t k = 1; k < ra.report.residual_history.size(); ++k)
    EXPECT_LT(ra.report.residual_history[k], ra.report.residual_history[k - 1]);
  const Vec resid = op * ra.eta.flat() - rhs2.flat();
  EXPECT_LT(l2_norm(sa.ctx, from_flat(sa.grid, 2, Placement::cells, resid)), 1e-10 * l2_norm(sa.ctx, rhs2));

  // the same system solved directly
  const SliceResult rd = slice_solve_direct(sa, op, rhs2);
  EXPECT_LT((rd.eta.values - ra.eta.values).norm(), 1e-8 * ra.eta.values.norm());

  const SpMat bad = sys.D * 3.0;
  EXPECT_THROW(slice_solve(sys, bad, rhs), SolverError);
}

TEST(KernelVector, Properties) {
  const ProblemTriple t0 = scalar_triple(0.0);
  const LinearizedSystem s0 = assemble(t0, 0.1, default_grid(t0, 0.1));
  const GridPath w0 = kernel_vector(s0);
  GridPath d0 = w0;
  d0.values -= s0.base_velocity.values;
  EXPECT_LT(w12_norm(s0.ctx, d0), 1e-3 * w12_norm(s0.ctx, w0));

  const ProblemTriple tr = scalar_triple(0.5);
  std::vector<double> dev;
  for (double eps : {0.1, 0.05, 0.025}) {
    const LinearizedSystem sys = assemble(tr, eps, default_grid(tr, eps));
    const GridPath w = kernel_vector(sys);
    EXPECT_GT(l2_norm(sys.ctx, w), 0.1);
    EXPECT_LT(l2_norm(sys.ctx, apply_D(sys, w)), 1e-8 * w12_norm(sys.ctx, w));
    GridPath d = w;
    d.values -= sys.base_velocity.values;
    dev.push_back(w12_norm(sys.ctx, d) / eps);
    std::mt19937_64 rng(9);
    const GridPath u = apply_D_star(sys, random_path(sys, Placement::cells, rng));
    EXPECT_LT(std::abs(l2_inner(sys.ctx, w, u)), 1e-10 * l2_norm(sys.ctx, w) * l2_norm(sys.ctx, u));
  }
  EXPECT_LT(*std::max_element(dev.begin(), dev.end()) / *std::min_element(dev.begin(), dev.end()), 1.5);
}

TEST(Adjointness, ExactUnderRefinement) {
  const ProblemTriple tr = scalar_triple(0.5);
  std::mt19937_64 rng(10);
  for (double dt : {0.01, 0.005}) {
    const LinearizedSystem sys = assemble(tr, 0.05, grid_with_spacing(8.0, dt));
    const GridPath eta = random_path(sys, Placement::nodes, rng);
    const GridPath u = random_path(sys, Placement::cells, rng);
    EXPECT_LT(adjointness_defect(sys, eta, u), std::max(1e-13, dt * dt));
  }
}

TEST(Spectrum, DHasOneKernelDirection) {
  const ProblemTriple tr = scalar_triple(0.5);
  const LinearizedSystem sys = assemble(tr, 0.1, default_grid(tr, 0.1));
  const std::vector<double> sv = D_singular_values(sys, 3);
  EXPECT_LT(sv[0], 1e-6);
  EXPECT_GT(sv[1], 10 * std::max(sv[0], 1e-6));
  EXPECT_GT(D_star_min_singular_value(sys), 0.5);
}

TEST(Spectrum, SmallestSingularValuesOfDiagonal) {
  Vec d(6);
  d << 5, 0.1, 3, 2, 0.7, 9;
  const SpMat op = SpMat(Mat(d.asDiagonal()).sparseView());
  const SpMat I = identity(6);
  const SingularEstimate est = smallest_singular_values(op, I, I, I, 2);
  ASSERT_TRUE(est.converged);
  EXPECT_NEAR(est.values[0], 0.1, 1e-10);
  EXPECT_NEAR(est.values[1], 0.7, 1e-10);
}
