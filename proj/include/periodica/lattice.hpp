#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "periodica/enumerate.hpp"
#include "periodica/exact.hpp"

namespace periodica {

// Full-rank lattice given by basis columns. Two optional layers of exactness:
//  - gram exactness: gram_den * gram is an integer matrix (spec denominator d)
//  - ambient exactness: basis_den * basis is an integer matrix, which makes
//    vector coordinates themselves rational (needed by design certificates)
struct Lattice {
  int n = 0;
  Eigen::MatrixXd basis;  // columns are generators
  Eigen::MatrixXd gram;   // basis^T basis

  bool exact = false;
  i64 gram_den = 1;
  IMat gram_num;  // = gram_den * gram

  bool ambient_exact = false;
  i64 basis_den = 1;
  IMat basis_num;  // = basis_den * basis

  // Build from a float basis; exactness layers are recovered when the
  // entries are recognizable small rationals. A declared gram denominator
  // from input data overrides the recovered one.
  static Lattice from_basis(const Eigen::MatrixXd& B,
                            std::optional<i64> declared_den = std::nullopt);
  static Lattice from_integer_basis(const IMat& bnum, i64 bden);

  double det_gram() const;
  RatMat gram_rat() const;   // requires exact
  RatMat basis_rat() const;  // requires ambient_exact

  // coordinates z with B z = ambient, exact (requires ambient_exact)
  RatVec coords_of(const RatVec& ambient) const;
  RatVec ambient_of(const RatVec& coords) const;
  Eigen::VectorXd ambient_of_f(const Eigen::VectorXd& coords) const;
  Eigen::VectorXd coords_of_f(const Eigen::VectorXd& ambient) const;

  // (z+tau)^T A (z+tau), exact (requires exact)
  Rat norm2_of_coords(const RatVec& coords) const;

  EnumContext enum_context() const { return make_enum_context(gram); }
};

struct CosetVector {
  Eigen::VectorXi z;  // w = B(z + tau)
  int offset_index = 0;
  double norm2 = 0;
  bool exact = false;
  Rat norm2_exact;
};

// All w = t + l, l in L, with |w|^2 <= R2; emitted in lexicographic order of
// the integer coordinates. Exact when the offset has rational coordinates
// and the lattice carries an exact gram.
std::vector<CosetVector> enumerate_coset_ball(const Lattice& L,
                                              const Eigen::VectorXd& t_ambient,
                                              double r2, int offset_index = 0);
std::vector<CosetVector> enumerate_coset_ball_coords(const Lattice& L,
                                                     const RatVec& tau,
                                                     const Rat& r2,
                                                     int offset_index = 0);

struct ShellFragment {
  bool exact = false;
  double r2 = 0;
  Rat r2_exact;
  std::vector<CosetVector> vecs;
};

// Ball partitioned by squared norm, ordered by increasing r^2. Exact path
// groups by rational value; float path bins with eps_shell and refuses
// ambiguous gaps.
inline constexpr double kEpsShell = 1e-9;
std::vector<ShellFragment> shells(const Lattice& L,
                                  const Eigen::VectorXd& t_ambient,
                                  double r2max);
std::vector<ShellFragment> shells_coords(const Lattice& L, const RatVec& tau,
                                         const Rat& r2max);

// squared norm of a shortest nonzero vector
double minimal_norm(const Lattice& L);
Rat minimal_norm_exact(const Lattice& L);

// exact determinant of the integer matrix d*A via Bareiss elimination
i128 int_det(const IMat& m);

}  // namespace periodica
