#pragma once

#include <optional>
#include <random>
#include <string>

#include "adiabat/norms.hpp"

namespace adiabat {

double K_constant(const Vec& b);

// Index-pair geometry around w = 0.
//
// The outer radius of the exit set uses eps^{(2 nu - 3)/4}. A positive
// exponent such as (3 - 2 nu)/2 would put the outer shell inside the inner
// one; only the negative exponent matches the flow-direction cases, the sup
// bound |w| <= sqrt(2)/eps and the f < -2/3 exit estimate.
struct ConleyConfig {
  ProblemTriple triple;
  double eps;
  double nu;
  double K;
  double r_plus;
  double r_minus_inner;
  double r_minus_outer;
};

ConleyConfig make_conley_config(const ProblemTriple& tr, double eps, double nu = 0.25);

struct Projectors {
  Mat plus;
  Mat minus;
  Mat dplus;   // d/dz
  Mat dminus;  // d/dz
};

// Symmetric eigendecomposition of A_eps(z). Throws SolverError when A_eps(z)
// has an eigenvalue in [-kappa/2, kappa/2], kappa = min |eig A|.
Projectors spectral_projectors(const ProblemTriple& tr, double eps, double z);

enum class FaceLabel { interior_NL, face_a, face_b, face_c, face_d, in_L, outside_N };
std::string to_string(FaceLabel f);

FaceLabel classify_point(const ConleyConfig& cfg, const Point& p, double tol = 1e-9);

struct FlowSign {
  double rho1_dot = 0.0;  // d/dt |pi^- w|^2
  double rho2_dot = 0.0;  // d/dt |pi^+ w|^2
  FaceLabel face = FaceLabel::interior_NL;
  bool pass = false;
};

// Throws InvalidInput unless p is on face a, b or c.
FlowSign boundary_flow_sign(const ConleyConfig& cfg, const Point& p);

// Uniform random point on face a, b or c.
Point sample_face(const ConleyConfig& cfg, FaceLabel face, std::mt19937_64& rng);
// Same with z uniform in [z_lo, z_hi].
Point sample_face(const ConleyConfig& cfg, FaceLabel face, std::mt19937_64& rng, double z_lo, double z_hi);

struct ExitReport {
  std::optional<int> exit_index;  // first sample outside N
  double f_at_exit = 0.0;         // potential at the last sample inside N
  bool pass = true;               // no exit, or exit with f < -2/3
  bool entered_L = false;
};

ExitReport exit_value_check(const ConleyConfig& cfg, const GridPath& path);

bool apriori_check(const ConleyConfig& cfg, const GridPath& path);

struct EnergyProbe {
  double energy = 0.0;
  bool triggered = false;  // |z| exceeded K before T_exit
  bool pass = true;        // not triggered, or energy > 4/3
};

EnergyProbe energy_length_probe(const ConleyConfig& cfg, const GridPath& path, int T_exit);

}  // namespace adiabat
