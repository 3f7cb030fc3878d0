#pragma once

#include <vector>

#include "periodica/designs.hpp"
#include "periodica/lattice.hpp"

namespace periodica {

// m translates of a lattice, pairwise incongruent mod L. Exact reps carry
// rational translation coordinates reduced to the fundamental parallelepiped.
struct PeriodicSetRep {
  Lattice L;
  std::vector<Eigen::VectorXd> trans;  // ambient translations
  bool exact = false;
  std::vector<RatVec> tau;  // coordinates: t_i = B tau_i, entries in [0,1)
  bool is_minimal = false;

  int m() const { return int(trans.size()); }
  double point_density() const;
};

PeriodicSetRep make_rep(const Lattice& L,
                        const std::vector<Eigen::VectorXd>& translations);
PeriodicSetRep make_rep_coords(const Lattice& L, const std::vector<RatVec>& tau);

struct MaximalReduction {
  Lattice lmax;
  PeriodicSetRep minimal;
  int m_min = 0;
  int index = 1;  // [L_max : L]
};

// Enlarge the period lattice by coset-permuting differences t_i - t_j until
// none is left; requires the exact path.
MaximalReduction maximal_period_lattice(const PeriodicSetRep& rep);

// nu(w) = (1/m) |{i : w in Lambda_{t_i}}| on a minimal representation;
// w given as an ambient rational vector.
Rat weight(const PeriodicSetRep& minimal_rep, const RatVec& w_ambient);

// Lambda(r) for all r^2 <= R2max: distinct difference vectors with weights.
std::vector<Shell> weighted_difference_shells(const PeriodicSetRep& minimal_rep,
                                              const Rat& r2max);

struct TwoPeriodicStructure {
  std::vector<int> J, Jp;     // indices with t_i in L_max resp. v + L_max
  Eigen::MatrixXi sigma;      // sigma(i,k), 0-based
  Lattice lmax;
  Eigen::VectorXd v_ambient;  // Lambda = L_max u (v + L_max)
  RatVec v_coords;            // in L_max coordinates
};

// Index partition and reordering map of a 2-periodic set containing 0.
TwoPeriodicStructure two_periodic_structure(const PeriodicSetRep& rep);

struct AutomorphismCheck {
  bool ok = false;
  std::vector<int> sigma;  // coset permutation when ok
};

// Tests the congruence criterion phi(t_i - t_1) = t_{sigma(i)} - t_{sigma(1)}
// mod L_max for an orthogonal phi stabilizing L_max.
AutomorphismCheck is_orthogonal_automorphism(const PeriodicSetRep& minimal_rep,
                                             const Eigen::MatrixXd& phi);

// Checkerboard lattice D_n and the 2-periodic set D_n^+ = D_n u (1/2 + D_n).
Lattice build_dn(int n);
PeriodicSetRep build_dn_plus(int n);

// Re-represent over the sublattice spanned by B*S (S integer, |det S| > 0),
// multiplying the coset count by |det S|.
PeriodicSetRep refine(const PeriodicSetRep& rep, const IMat& s);

}  // namespace periodica
