#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "adiabat/solver.hpp"

namespace adiabat {

// Integral of g_eps(gamma', gamma') over nodes [i0, i1] (i1 < 0: last node),
// with fourth-order differences and trapezoid quadrature.
double path_energy(const ProblemTriple& tr, double eps, const GridPath& path, int i0 = 0, int i1 = -1);

struct DecayReport {
  double rate_plus = 0.0;
  double rate_minus = 0.0;
  double floor = 0.0;  // 1 - |b|^2
  int samples_plus = 0;
  int samples_minus = 0;
  bool pass = false;  // both rates >= 0.9 floor
};

// Log-linear fit of eps^2 |x|^2 + (z -+ 1)^2 on each tail. Throws InvalidInput
// when a tail has fewer than 50 samples above the 1e-13 noise floor.
DecayReport decay_fit(const ProblemTriple& tr, double eps, const GridPath& path, double tail_fraction = 0.5);

using GridPolicy = std::function<Grid(const ProblemTriple&, double)>;

struct ConvergenceReport {
  std::vector<double> eps_list;
  std::vector<double> error_w12;
  std::vector<double> error_linf;  // eps^{1/2} |gamma - gamma_0|_{Linf_eps}
  std::vector<bool> converged;
  double slope_w12 = 0.0;
  double slope_linf = 0.0;
  bool exact = false;  // every error at round-off, slopes undefined
};

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ConvergenceReport convergence_study(const ProblemTriple& tr, const std::vector<double>& eps_list,
                                    const GridPolicy& policy = default_grid);

// Smallest weighted singular value of op on range(D*) + span(extra columns).
double restricted_margin(const LinearizedSystem& sys, const SpMat& op, const Mat& extra = Mat());
double transversality_margin(const LinearizedSystem& sys, const Solution& sol);

struct UniquenessReport {
  std::vector<bool> converged;
  std::vector<std::string> notes;
  std::vector<double> tau;  // alignment of each solution against the first
  double max_distance = 0.0;
};

// Zero, shifted limit solutions (+-0.5) and windowed noise of size 1e-2.
std::vector<GridPath> standard_seeds(const LinearizedSystem& sys, std::uint64_t seed);
UniquenessReport uniqueness_study(const LinearizedSystem& sys, const std::vector<GridPath>& seeds);

struct ShootingReport {
  double tau = 0.0;
  double distance = 0.0;
};

// Integrates from (0, -1) + delta v along the unstable direction and aligns
// the result against gamma.
ShootingReport shooting_check(const LinearizedSystem& sys, const GridPath& gamma, double delta = 1e-7,
                              double max_step = 0.0);

// Operator suite.
double adjointness_defect(const LinearizedSystem& sys, const GridPath& eta, const GridPath& u);

struct DoublingCheck {
  double rel_error_D = 0.0;
  double rel_error_Dstar = 0.0;
};

// A smooth compactly supported test field and its exact derivative.
struct TestField {
  std::function<Vec(double)> value;
  std::function<Vec(double)> derivative;
};
TestField random_bumps(int n, double eps, double T, std::mt19937_64& rng);
DoublingCheck doubling_identities(const LinearizedSystem& sys, const TestField& f);

std::vector<double> D_singular_values(const LinearizedSystem& sys, int k = 3);
double D_star_min_singular_value(const LinearizedSystem& sys);
// sup over samples of |D* u|_{W12} / |D D* u|_{L2}
double crucial_ratio(const LinearizedSystem& sys, int samples, std::uint64_t seed);

// Energy over |t| > T_rho with the middle carrying 4/3 - rho.
struct TailEnergy {
  double T_rho = 0.0;
  double middle = 0.0;
  double tails = 0.0;
  bool pass = false;  // tails < 2 rho
};
TailEnergy tail_energy_check(const ProblemTriple& tr, double eps, const GridPath& gamma, double rho = 0.05);

bool monotone_z(const GridPath& gamma);

}  // namespace adiabat
