#pragma once

#include <string>
#include <vector>

#include "periodica/designs.hpp"
#include "periodica/energy.hpp"
#include "periodica/periodic.hpp"

namespace periodica {

// Quadratic invariants of the hyperoctahedral actions on symmetric matrices:
// F1 = (Tr H)^2, F2 = Tr H^2, F3 = sum_{i<j} h_ij^2.
struct InvariantTriple {
  double f1 = 0, f2 = 0, f3 = 0;
};
InvariantTriple invariant_basis_eval(const Eigen::MatrixXd& h);

struct InvariantCoefficients {
  Rat alpha, beta, gamma;
};

// sum_w H[w]^2 = alpha F1 + beta F2 + gamma F3 over the shell; validated
// exactly on the elementary basis of S^n before returning.
InvariantCoefficients abc_coefficients(const Shell& shell);

// Exact per-shell statistics of one coset ball, streamed (nothing stored
// per vector): counts, fourth-power sums, optionally the per-coordinate
// split and the full cubic moment check.
struct ExactShellStats {
  Rat r2;
  i64 count = 0;
  Rat z;                     // sum_w sum_i w_i^4
  std::vector<Rat> z_per_i;  // per-coordinate fourth powers (want_split)
  std::vector<Rat> z_pair;   // packed i<j: sum w_i^2 w_j^2 (want_split)
  bool odd3_zero = true;     // all cubic moments vanish (want_odd3)
};
std::vector<ExactShellStats> exact_coset_shell_stats(const Lattice& L,
                                                     const RatVec& tau,
                                                     const Rat& r2max,
                                                     bool want_split,
                                                     bool want_odd3);

// Union shells Lambda(r) of D_n^+ (odd n): integral shells live in D_n with
// weight 1, half-integral shells in +-1/2 + D_n with weight 1/2.
struct DnShellStats {
  Rat r2;
  bool half_integral = false;
  i64 count = 0;  // distinct vectors of Lambda(r)
  Rat weight;     // constant nu on the shell
  Rat z_r;        // sum over Lambda(r) of sum_i w_i^4
  Rat a_r;        // Z_r - 3/(n+2) r^4 |Lambda(r)|
  std::vector<Rat> z_per_i, z_pair;
  bool odd3_zero = true;
};
std::vector<DnShellStats> dnplus_shell_stats(int n, const Rat& r2max,
                                             bool want_split = false,
                                             bool want_odd3 = false);

struct BlockReport {
  Rat r2;
  bool half_integral = false;
  i64 count = 0;
  Rat weight;
  Rat weight_sum;  // nu * count
  Rat z_r, a_r;
  Rat alpha, beta, gamma;
  bool ii_zero = false;          // mixed term certified to vanish
  double transl_threshold_c = 0; // I(r) >= 0 iff c >= n/(2 r^2)
  double bracket1 = 0, bracket2 = 0;
  double coeff1 = 0, coeff2 = 0; // invariant sector coefficients at the scan c
};

struct DnBlocks {
  int n = 0;
  double c = 0;
  std::vector<BlockReport> shells;
  TwoPeriodicStructure structure;
};

// The Hessian block decomposition of a refined D_n^+ representation.
DnBlocks hessian_blocks(const PeriodicSetRep& rep, double c, const Rat& r2max);

struct BlockValues {
  double i_r = 0, ii_r = 0, iii_r = 0;
};
// Evaluate the per-shell blocks at explicit deformation parameters.
BlockValues evaluate_blocks(const BlockReport& blk, const DnBlocks& ctxt,
                            const DeformationParams& params);
// (c/m) sum_r [I+II+III](r) e^{-c r^2}: the block route to the Hessian form.
double block_quadratic_value(const DnBlocks& blocks,
                             const DeformationParams& params);

enum class ThetaKind { One, FourthMomentHarmonic };

// Fourier coefficients (r^2, sum_{|x|=r} P(x)) by direct enumeration.
std::vector<std::pair<Rat, Rat>> theta_coefficients(const Lattice& L,
                                                    const RatVec& rho_ambient,
                                                    ThetaKind p,
                                                    const Rat& r2max);
// Average theta series of a periodic set: (1/m) sum_{i,j} theta_{t_i-t_j+L,P}.
std::vector<std::pair<Rat, Rat>> theta_average(const PeriodicSetRep& rep,
                                               ThetaKind p, const Rat& r2max);

struct CuspDecayReport {
  std::vector<std::pair<double, double>> samples;  // (r, |a_r| / (r^4 |L(r)|))
  double ls_slope = 0;
  double envelope_slope = 0;  // через running maxima from large r
  bool identically_zero = false;
};
CuspDecayReport cusp_decay_estimate(int n, const Rat& r2max);

struct ScanVerdict {
  double c = 0;
  bool translational_ok = false;
  bool lattice_ok = false;  // aggregated sector coefficients positive
  bool tail_ok = false;     // heuristic envelope control beyond R2max
  double c1_total = 0, c2_total = 0;
  std::string obstruction;
};

struct ThresholdScan {
  int n = 0;
  double r2max = 0;
  std::vector<ScanVerdict> verdicts;
  bool found = false;
  double c_n_estimate = 0;  // smallest passing grid point
  double envelope_slope = 0;
  std::string certified_flag;  // CERTIFIED-UP-TO-R2MAX
  std::string tail_flag;       // HEURISTIC-TAIL
  std::vector<DnShellStats> shells;
};

ThresholdScan threshold_scan(int n, const std::vector<double>& c_grid,
                             const Rat& r2max, double tol);
std::vector<double> default_c_grid(int n);

}  // namespace periodica
