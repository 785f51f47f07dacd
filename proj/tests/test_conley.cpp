#include <gtest/gtest.h>

#include "adiabat/conley.hpp"
#include "adiabat/verify.hpp"
#include "fixtures.hpp"

using namespace adiabat;
using namespace fixtures;

namespace {

ProblemTriple saddle_triple(double beta) {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = -2.0;
  return ProblemTriple::make(A, Vec::Constant(2, beta / std::sqrt(2.0)));
}

}  // namespace

TEST(KConstant, Values) {
  EXPECT_NEAR(K_constant(Vec::Zero(1)), std::sqrt(2.0) + 4.0 / 3.0 * std::sqrt(32.0), 1e-14);
  EXPECT_NEAR(K_constant(Vec::Zero(1)), 8.9567, 1e-4);
  EXPECT_NEAR(K_constant(Vec::Constant(2, 0.5)), 9.2746, 1e-4);
  double prev = 0;
  for (double s = 0; s < 0.99; s += 0.05) {
    const double k = K_constant(vec1(s));
    EXPECT_GT(k, prev);
    prev = k;
  }
  EXPECT_THROW(K_constant(vec1(1.0)), InvalidInput);
}

TEST(ConleyConfig, RadiiAndValidation) {
  const ConleyConfig cfg = make_conley_config(scalar_triple(0.0), 0.01, 0.25);
  EXPECT_NEAR(cfg.r_plus, 0.316228, 1e-6);
  EXPECT_NEAR(cfg.r_minus_inner, 0.316228, 1e-6);
  EXPECT_NEAR(cfg.r_minus_outer, 17.7828, 1e-4);
  EXPECT_NEAR(cfg.K, 8.9567, 1e-4);
  EXPECT_THROW(make_conley_config(scalar_triple(0.0), 0.01, 0.7), InvalidInput);
  EXPECT_THROW(make_conley_config(scalar_triple(0.0), 1.5, 0.25), InvalidInput);
}

TEST(Projectors, Algebra) {
  std::mt19937_64 rng(3);
  const ProblemTriple tr = conley_triple();
  for (double eps : {0.1, 0.05, 0.02}) {
    for (int i = 0; i < 20; ++i) {
      const double z = std::uniform_real_distribution<double>(-9, 9)(rng);
      const Projectors P = spectral_projectors(tr, eps, z);
      const Mat I = Mat::Identity(2, 2);
      EXPECT_LT((P.plus + P.minus - I).norm(), 1e-12);
      EXPECT_LT((P.plus * P.minus).norm(), 1e-12);
      EXPECT_LT((P.plus * P.plus - P.plus).norm(), 1e-12);
      EXPECT_LT((P.minus - P.minus.transpose()).norm(), 1e-12);
      EXPECT_NEAR(P.plus.operatorNorm(), 1.0, 1e-12);
      EXPECT_NEAR(P.minus.operatorNorm(), 1.0, 1e-12);
      // pi+ A_eps is positive on its range
      const Mat Ap = P.plus * A_eps(tr, eps, z) * P.plus;
      Eigen::SelfAdjointEigenSolver<Mat> es(Ap);
      EXPECT_GT(es.eigenvalues().maxCoeff(), 0.0);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
  }
}

TEST(Projectors, Examples) {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = -1;
  const ProblemTriple tr = ProblemTriple::make(A, Vec::Zero(2));
  const Projectors P = spectral_projectors(tr, 0.0, 0.3);
  EXPECT_LT((P.plus - Mat(Vec(Vec::Unit(2, 0)).asDiagonal())).norm(), 1e-15);
  EXPECT_LT((P.minus - Mat(Vec(Vec::Unit(2, 1)).asDiagonal())).norm(), 1e-15);
  // b = 0: independent of z and eps
  const Projectors Q = spectral_projectors(tr, 0.2, -4.0);
  EXPECT_LT((Q.minus - P.minus).norm(), 1e-15);
  EXPECT_EQ(Q.dminus.norm(), 0.0);
}

TEST(Projectors, LipschitzInEpsAndDerivative) {
  const ProblemTriple tr = saddle_triple(0.5);
  const double K = K_constant(tr.b());
  double M = 0;
  for (double eps : {0.02, 0.01, 0.005}) {
    const Projectors P0 = spectral_projectors(tr, eps, 0.0);
    for (double z = -K; z <= K; z += K / 20) M = std::max(M, (spectral_projectors(tr, eps, z).minus - P0.minus).norm() / eps);
  }
  EXPECT_LT(M, 20.0);
  // analytic derivative against central differences
  const double eps = 0.05, z = 0.7, s = 1e-6;
  const Projectors P = spectral_projectors(tr, eps, z);
  const Mat fd = (spectral_projectors(tr, eps, z + s).minus - spectral_projectors(tr, eps, z - s).minus) / (2 * s);
  EXPECT_LT((P.dminus - fd).norm(), 1e-7);
  EXPECT_LT((P.dplus + fd).norm(), 1e-7);
}

TEST(Projectors, RejectsNearSingular) {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = -0.1;
  Vec b(2);
  b << 0.0, 0.5;
  const ProblemTriple tr = ProblemTriple::make(A, b);
  EXPECT_THROW(spectral_projectors(tr, 0.1, 2.0), SolverError);
}

TEST(Classify, Examples) {
  const ProblemTriple t0 = saddle_triple(0.0);
  const ConleyConfig c0 = make_conley_config(t0, 0.01, 0.25);
  EXPECT_EQ(classify_point(c0, limit_solution(t0, 0.4)), FaceLabel::interior_NL);
  EXPECT_EQ(classify_point(c0, Point{Vec::Zero(2), 0.0}), FaceLabel::interior_NL);
  EXPECT_EQ(classify_point(c0, Point{Vec::Zero(2), c0.K + 1}), FaceLabel::outside_N);
  EXPECT_EQ(classify_point(c0, Point{Vec::Zero(2), c0.K}), FaceLabel::face_d);

  // b != 0, w = -b at the origin: |pi- w| compared with the radii directly
  const ProblemTriple tr = saddle_triple(0.5);
  const ConleyConfig cfg = make_conley_config(tr, 1e-4, 0.25);
  const Projectors P = spectral_projectors(tr, cfg.eps, 0.0);
  const double wm = (P.minus * tr.b()).norm(), wp = (P.plus * tr.b()).norm();
  const FaceLabel f = classify_point(cfg, Point{Vec::Zero(2), 0.0});
  if (wp > cfg.r_plus) EXPECT_EQ(f, FaceLabel::outside_N);
  else if (wm > cfg.r_minus_inner) EXPECT_EQ(f, FaceLabel::in_L);
}

TEST(Classify, InteriorImpliesBounds) {
  const ProblemTriple tr = conley_triple();
  const ConleyConfig cfg = make_conley_config(tr, 0.05, 0.25);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-1, 1);
  int interior = 0;
  for (int i = 0; i < 2000; ++i) {
    const WPoint wp{Vec(Vec::Random(2) * cfg.r_minus_inner * 1.5), cfg.K * U(rng)};
    const Point p = from_w(tr, wp);
    if (classify_point(cfg, p) != FaceLabel::interior_NL) continue;
    ++interior;
    EXPECT_LE(wp.w.norm(), std::sqrt(2.0) * std::pow(cfg.eps, cfg.nu) + 1e-12);
    EXPECT_LE(std::abs(p.z), cfg.K);
  }
  EXPECT_GT(interior, 100);
}

TEST(Classify, XBoundFromW) {
  // |x(w, z)| <= 2 |A^-1| / eps for |w| <= sqrt(2)/eps and |z| <= K
  const ProblemTriple tr = conley_triple();
  const double eps = 0.05;
  const double K = K_constant(tr.b());
  const double Ainv = tr.A_inv().operatorNorm();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    Vec w = random_vec(2, rng);
    w *= std::sqrt(2.0) / eps * std::abs(U(rng)) / w.norm();
    const Point p = from_w(tr, WPoint{w, K * U(rng)});
    EXPECT_LE(p.x.norm(), 2 * Ainv / eps);
  }
}

TEST(FlowSign, ClosedFormWhenBZero) {
  const ProblemTriple tr = saddle_triple(0.0);
  const ConleyConfig cfg = make_conley_config(tr, 0.05, 0.25);
  Vec w = Vec::Zero(2);
  w(1) = cfg.r_minus_inner;
  const Point p = from_w(tr, WPoint{w, 0.3});
  const FlowSign s = boundary_flow_sign(cfg, p);
  EXPECT_EQ(s.face, FaceLabel::face_a);
  EXPECT_NEAR(s.rho1_dot, 2 * 2.0 / cfg.eps * w.squaredNorm(), 1e-10);
  EXPECT_TRUE(s.pass);
  EXPECT_THROW(boundary_flow_sign(cfg, Point{Vec::Zero(2), 0.0}), InvalidInput);
}

TEST(FlowSign, MatchesDifferenceAlongFlow) {
  const ProblemTriple tr = conley_triple();
  const ConleyConfig cfg = make_conley_config(tr, 0.05, 0.25);
  std::mt19937_64 rng(4);
  for (FaceLabel f : {FaceLabel::face_a, FaceLabel::face_c}) {
    const Point p = sample_face(cfg, f, rng);
    const FlowSign s = boundary_flow_sign(cfg, p);
    const Vec v = rhs(tr, cfg.eps, p);
    auto rho = [&](double h) {
      const Point q = unpack(Vec(pack(p) + h * v));
      const Projectors P = spectral_projectors(tr, cfg.eps, q.z);
      const Vec w = to_w(tr, q).w;
      return f == FaceLabel::face_c ? (P.plus * w).squaredNorm() : (P.minus * w).squaredNorm();
    };
    const double h = 1e-7;
    const double fd = (rho(h) - rho(-h)) / (2 * h);
    const double an = f == FaceLabel::face_c ? s.rho2_dot : s.rho1_dot;
    EXPECT_NEAR(an, fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(FlowSign, FaceSamplesPassAtSmallEps) {
  const ConleyConfig cfg = make_conley_config(conley_triple(), 0.02, 0.25);
  std::mt19937_64 rng(99);
  for (FaceLabel f : {FaceLabel::face_a, FaceLabel::face_b, FaceLabel::face_c}) {
    for (int i = 0; i < 200; ++i) {
      const Point p = sample_face(cfg, f, rng);
      EXPECT_EQ(classify_point(cfg, p), f);
      EXPECT_TRUE(boundary_flow_sign(cfg, p).pass) << to_string(f);
    }
  }
  EXPECT_THROW(sample_face(cfg, FaceLabel::face_d, rng), InvalidInput);
  const ConleyConfig pos = make_conley_config(scalar_triple(0.5), 0.02, 0.25);
  EXPECT_THROW(sample_face(pos, FaceLabel::face_a, rng), InvalidInput);
}

TEST(ExitCheck, Examples) {
  const ProblemTriple tr = conley_triple();
  const ConleyConfig cfg = make_conley_config(tr, 0.02, 0.25);
  const Grid g(1.0, 11);
  const GridPath rest = sample(g, 3, [](double) { Vec v = Vec::Zero(3); v(2) = -1; return v; });
  const ExitReport r = exit_value_check(cfg, rest);
  EXPECT_FALSE(r.exit_index.has_value());
  EXPECT_TRUE(r.pass);

  GridPath out = rest;
  out.values(2, 5) = cfg.K + 2;
  const ExitReport e = exit_value_check(cfg, out);
  ASSERT_TRUE(e.exit_index.has_value());
  EXPECT_EQ(*e.exit_index, 5);
  EXPECT_NEAR(e.f_at_exit, 2.0 / 3.0, 1e-14);
  EXPECT_FALSE(e.pass);

  GridPath bad = rest;
  bad.values(2, 0) = cfg.K + 2;
  EXPECT_THROW(exit_value_check(cfg, bad), InvalidInput);
}

TEST(Apriori, Examples) {
  const ProblemTriple tr = scalar_triple(0.5);
  const ConleyConfig cfg = make_conley_config(tr, 0.05, 0.25);
  GridPath g = sample_limit_solution(tr, Grid(10.0, 1001));
  EXPECT_TRUE(apriori_check(cfg, g));
  g.values(0, 500) += 2 * cfg.r_plus / tr.A()(0, 0);
  EXPECT_FALSE(apriori_check(cfg, g));
  const Solution s = newton_solve(tr, 0.05, default_grid(tr, 0.05));
  EXPECT_TRUE(apriori_check(cfg, s.gamma));
}

TEST(EnergyProbe, Examples) {
  const ProblemTriple tr = scalar_triple(0.5);
  const ConleyConfig cfg = make_conley_config(tr, 0.05, 0.25);
  const GridPath rest = sample(Grid(1.0, 11), 2, [](double) { Vec v(2); v << 0, 1; return v; });
  const EnergyProbe r = energy_length_probe(cfg, rest, -1);
  EXPECT_FALSE(r.triggered);
  EXPECT_NEAR(r.energy, 0.0, 1e-15);

  const Solution s = newton_solve(tr, 0.05, default_grid(tr, 0.05));
  const EnergyProbe h = energy_length_probe(cfg, s.gamma, -1);
  EXPECT_FALSE(h.triggered);
  EXPECT_NEAR(h.energy, 4.0 / 3.0, 1e-6);

  // a run past z = -K - 1 from just below p-
  StepOptions o;
  o.stop = [&](const Point& p) { return std::abs(p.z) > cfg.K + 1; };
  const GridPath run = integrate(tr, 0.05, Point{vec1(0.0), -1 - 1e-6}, Grid(15.0, 3001, 15.0), o);
  const EnergyProbe p = energy_length_probe(cfg, run, -1);
  EXPECT_TRUE(p.triggered);
  EXPECT_GT(p.energy, 4.0 / 3.0);
  EXPECT_TRUE(p.pass);
}
