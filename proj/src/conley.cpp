#include "adiabat/conley.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "adiabat/verify.hpp"

namespace adiabat {

double K_constant(const Vec& b) {
  const double s = b.squaredNorm();
  if (!(s < 1)) throw InvalidInput("K_constant: |b| must be < 1");
  return std::sqrt((2 - s) / (1 - s)) + (4.0 / 3.0) * std::sqrt(32.0);
}

ConleyConfig make_conley_config(const ProblemTriple& tr, double eps, double nu) {
  if (!(nu > 0 && nu < 0.5)) throw InvalidInput("conley: nu must lie in (0, 1/2)");
  if (!(eps > 0 && eps < 1)) throw InvalidInput("conley: eps must lie in (0, 1)");
  return ConleyConfig{tr, eps, nu, K_constant(tr.b()), std::pow(eps, nu), std::pow(eps, nu),
                      std::pow(eps, (2 * nu - 3) / 4)};
}

Projectors spectral_projectors(const ProblemTriple& tr, double eps, double z) {
  const Mat Az = A_eps(tr, eps, z);
  Eigen::SelfAdjointEigenSolver<Mat> es(Az);
  const double kappa = Eigen::SelfAdjointEigenSolver<Mat>(tr.A()).eigenvalues().cwiseAbs().minCoeff();
  const Vec& lam = es.eigenvalues();
  const Mat& V = es.eigenvectors();
  if (lam.cwiseAbs().minCoeff() <= 0.5 * kappa)
    throw SolverError("spectral_projectors: A_eps(z) nearly singular (eps*z too large)");
  const Eigen::Index k = lam.size();
  Projectors P{Mat::Zero(k, k), Mat::Zero(k, k), Mat::Zero(k, k), Mat::Zero(k, k)};
  for (Eigen::Index i = 0; i < k; ++i) {
    const Mat vv = V.col(i) * V.col(i).transpose();
    (lam(i) > 0 ? P.plus : P.minus) += vv;
  }
  // first-order perturbation of the negative spectral projector, A' = 2 eps b b^T
  const Mat dA = 2 * eps * tr.b() * tr.b().transpose();
  for (Eigen::Index i = 0; i < k; ++i) {
    if (lam(i) > 0) continue;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (lam(j) < 0) continue;
      const double c = V.col(i).dot(dA * V.col(j)) / (lam(i) - lam(j));
      const Mat X = c * V.col(i) * V.col(j).transpose();
      P.dminus += X + X.transpose();
    }
  }
  P.dplus = -P.dminus;
  return P;
}

std::string to_string(FaceLabel f) {
  switch (f) {
    case FaceLabel::interior_NL: return "interior_NL";
    case FaceLabel::face_a: return "face_a";
    case FaceLabel::face_b: return "face_b";
    case FaceLabel::face_c: return "face_c";
    case FaceLabel::face_d: return "face_d";
    case FaceLabel::in_L: return "in_L";
    case FaceLabel::outside_N: return "outside_N";
  }
  return "?";
}

namespace {

struct Radii {
  double wp, wm, z;
};

Radii measure(const ConleyConfig& cfg, const Point& p) {
  const WPoint wp = to_w(cfg.triple, p);
  const Projectors P = spectral_projectors(cfg.triple, cfg.eps, p.z);
  return Radii{(P.plus * wp.w).norm(), (P.minus * wp.w).norm(), std::abs(p.z)};
}

bool near(double a, double r, double tol) { return std::abs(a - r) <= tol * std::max(1.0, r); }

}  // namespace

FaceLabel classify_point(const ConleyConfig& cfg, const Point& p, double tol) {
  const Radii r = measure(cfg, p);
  auto above = [&](double a, double lim) { return a > lim + tol * std::max(1.0, lim); };
  if (above(r.z, cfg.K) || above(r.wp, cfg.r_plus) || above(r.wm, cfg.r_minus_outer)) return FaceLabel::outside_N;
  if (near(r.z, cfg.K, tol)) return FaceLabel::face_d;
  if (near(r.wp, cfg.r_plus, tol)) return FaceLabel::face_c;
  if (near(r.wm, cfg.r_minus_outer, tol)) return FaceLabel::face_b;
  if (near(r.wm, cfg.r_minus_inner, tol)) return FaceLabel::face_a;
  if (r.wm > cfg.r_minus_inner) return FaceLabel::in_L;
  return FaceLabel::interior_NL;
}

FlowSign boundary_flow_sign(const ConleyConfig& cfg, const Point& p) {
  const FaceLabel face = classify_point(cfg, p);
  if (face != FaceLabel::face_a && face != FaceLabel::face_b && face != FaceLabel::face_c)
    throw InvalidInput("boundary_flow_sign: point is on " + to_string(face) + ", not a checkable face");
  const ProblemTriple& tr = cfg.triple;
  const Vec v = rhs(tr, cfg.eps, p);
  const Eigen::Index k = p.x.size();
  const double zdot = v(k);
  const Vec wdot = tr.A() * v.head(k) + 2 * p.z * zdot * tr.b();
  const Vec w = to_w(tr, p).w;
  const Projectors P = spectral_projectors(tr, cfg.eps, p.z);
  const Vec wm = P.minus * w;
  const Vec wp = P.plus * w;
  FlowSign s;
  s.face = face;
  s.rho1_dot = 2 * wm.dot(P.dminus * w * zdot + P.minus * wdot);
  s.rho2_dot = 2 * wp.dot(P.dplus * w * zdot + P.plus * wdot);
  s.pass = face == FaceLabel::face_c ? s.rho2_dot < 0 : s.rho1_dot > 0;
  return s;
}

Point sample_face(const ConleyConfig& cfg, FaceLabel face, std::mt19937_64& rng) {
  return sample_face(cfg, face, rng, -cfg.K, cfg.K);
}

Point sample_face(const ConleyConfig& cfg, FaceLabel face, std::mt19937_64& rng, double z_lo, double z_hi) {
  if (!(z_lo <= z_hi) || z_lo < -cfg.K || z_hi > cfg.K) throw InvalidInput("sample_face: z range must lie in [-K, K]");
  const ProblemTriple& tr = cfg.triple;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N;
  const double z = z_lo + (z_hi - z_lo) * U(rng);
  const Mat Az = A_eps(tr, cfg.eps, z);
  Eigen::SelfAdjointEigenSolver<Mat> es(Az);
  std::vector<Eigen::Index> neg, pos;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) (es.eigenvalues()(i) < 0 ? neg : pos).push_back(i);
  auto direction = [&](const std::vector<Eigen::Index>& idx) {
    Vec d = Vec::Zero(Az.rows());
    for (auto i : idx) d += N(rng) * es.eigenvectors().col(i);
    const double nd = d.norm();
    return nd > 0 ? Vec(d / nd) : d;
  };
  auto ball = [&](const std::vector<Eigen::Index>& idx, double r) {
    if (idx.empty()) return Vec(Vec::Zero(Az.rows()));
    return Vec(direction(idx) * (r * std::pow(U(rng), 1.0 / static_cast<double>(idx.size()))));
  };
  Vec w;
  switch (face) {
    case FaceLabel::face_a:
    case FaceLabel::face_b:
      if (neg.empty()) throw InvalidInput("sample_face: A has no negative eigenspace, faces a and b are empty");
      w = direction(neg) * (face == FaceLabel::face_a ? cfg.r_minus_inner : cfg.r_minus_outer) + ball(pos, cfg.r_plus);
      break;
    case FaceLabel::face_c:
      if (pos.empty()) throw InvalidInput("sample_face: A has no positive eigenspace, face c is empty");
      w = direction(pos) * cfg.r_plus + ball(neg, cfg.r_minus_outer);
      break;
    default:
      throw InvalidInput("sample_face: only faces a, b, c are sampled");
  }
  return from_w(tr, WPoint{w, z});
}

ExitReport exit_value_check(const ConleyConfig& cfg, const GridPath& path) {
  ExitReport rep;
  for (int i = 0; i < path.count(); ++i) {
    const Point p = unpack(path.col(i));
    const FaceLabel f = classify_point(cfg, p);
    if (f == FaceLabel::in_L) rep.entered_L = true;
    if (f == FaceLabel::outside_N) {
      if (i == 0) throw InvalidInput("exit_value_check: path must start inside N");
      rep.exit_index = i;
      rep.f_at_exit = potential(cfg.triple, cfg.eps, Vec(path.col(i - 1)));
      rep.pass = rep.f_at_exit < -2.0 / 3.0;
      return rep;
    }
  }
  return rep;
}

bool apriori_check(const ConleyConfig& cfg, const GridPath& path) {
  double wmax = 0, zmax = 0;
  for (int i = 0; i < path.count(); ++i) {
    const Point p = unpack(path.col(i));
    wmax = std::max(wmax, to_w(cfg.triple, p).w.norm());
    zmax = std::max(zmax, std::abs(p.z));
  }
  return wmax <= cfg.r_plus && zmax <= cfg.K;
}

EnergyProbe energy_length_probe(const ConleyConfig& cfg, const GridPath& path, int T_exit) {
  if (T_exit < 0 || T_exit >= path.count()) T_exit = path.count() - 1;
  EnergyProbe pr;
  for (int i = 0; i <= T_exit; ++i)
    if (std::abs(path.zeta(i)) > cfg.K) pr.triggered = true;
  pr.energy = path_energy(cfg.triple, cfg.eps, path, 0, T_exit);
  pr.pass = !pr.triggered || pr.energy > 4.0 / 3.0;
  return pr;
}

}  // namespace adiabat
