#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "periodica/periodic.hpp"

namespace periodica {

// Deformation of an m-periodic representation: volume-preserving change of
// the quadratic form through exp(H) with Tr H = 0, plus per-coset
// translation perturbations.
struct DeformationParams {
  Eigen::MatrixXd H;
  std::vector<Eigen::VectorXd> t;

  static DeformationParams zero(int n, int m);
  void validate(int n, int m) const;  // symmetry, trace, sizes
};

// Rigorous truncation control. theta_bound is an upper bound on
// sum_{w in t+L} e^{-c' |w|^2} for every offset t, from a covering-radius
// Voronoi argument; tails of weighted sums sum_{|w|^2 > R2} |w|^{2p} e^{-c q}
// follow by splitting off e^{-(c-c') q}.
struct TailModel {
  int n = 0;
  double vol = 0;
  double mu = 0;  // covering radius upper bound

  static TailModel for_lattice(const Lattice& L);
  double theta_bound(double cprime) const;
  double tail(double r2, double c, int w2pow = 0) const;
  double choose_r2(double c, double tol, int w2pow = 0) const;
};

struct EnergyReport {
  double c = 0;
  double value = 0;
  double r2_trunc = 0;
  double tail = 0;  // the reported value is within tail of the full sum
  std::vector<std::pair<double, double>> shell_contributions;
};

EnergyReport energy(const PeriodicSetRep& rep, double c, double tol,
                    bool want_shells = false);

struct EnergyValue {
  double value = 0;
  double tail = 0;
  double r2_trunc = 0;
};

EnergyValue deformed_energy(const PeriodicSetRep& rep, double c,
                            const DeformationParams& params, double tol);

struct GradientReport {
  Eigen::MatrixXd G_H;  // Riesz representer on trace-zero symmetric matrices
  std::vector<Eigen::VectorXd> g_t;
  double bound_H = 0;  // norm-level error bound: truncation + accumulation
  double bound_t = 0;
  double r2_trunc = 0;

  double norm_H() const { return G_H.norm(); }
  double norm_t() const {
    double s = 0;
    for (const auto& g : g_t) s += g.squaredNorm();
    return std::sqrt(s);
  }
};

GradientReport gradient(const PeriodicSetRep& rep, double c, double tol);

// Orthonormal basis of trace-zero symmetric matrices: n-1 diagonal
// difference directions followed by the off-diagonal units (i<j), scaled
// by 1/sqrt(2).
std::vector<Eigen::MatrixXd> tracezero_basis(int n);

// Quadratic term of the energy expansion: E(x) = E(0) + <grad, x> + x^T Q x
// + o(|x|^2) in the fixed parameter basis (trace-zero basis, then one
// translation block of n coordinates per coset).
struct HessianForm {
  int n = 0, m = 0, dim = 0;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd gauge;  // dim x n orthonormal global-translation directions
  double err_bound = 0;   // entrywise assembly error (tail + rounding)
  double r2_trunc = 0;
};

HessianForm hessian(const PeriodicSetRep& rep, double c, double tol,
                    double r2_override = -1);

// coordinates of explicit parameters in the HessianForm basis
Eigen::VectorXd pack_params(int n, int m, const DeformationParams& params);

struct LocalMinReport {
  std::string verdict;  // POSITIVE | NEGATIVE | INCONCLUSIVE
  double lambda_min = 0;
  double gap = 0;
  double err_bound = 0;
  double gauge_residual = 0;
  int near_zero_modes = 0;
  int complement_dim = 0;
  Eigen::VectorXd spectrum;  // ascending, on the gauge complement
  HessianForm form;
};

LocalMinReport certify_local_min(const PeriodicSetRep& rep, double c, double tol,
                                 double gap = -1,
                                 bool allow_non_critical = false);

struct ReorderedValue {
  double value = 0;
  double tail = 0;
};

// Three-sum reordering of the deformed energy of a 2-periodic set; must
// agree with deformed_energy on the same inputs.
ReorderedValue reordered_energy_2periodic(const PeriodicSetRep& rep,
                                          const TwoPeriodicStructure& st,
                                          double c,
                                          const DeformationParams& params,
                                          double tol);

}  // namespace periodica
