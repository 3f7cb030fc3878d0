#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "periodica/exact.hpp"

namespace periodica {

struct PeriodicSetRep;

// Weighted shell with exact ambient coordinates: vector k is
// coords[k*n .. k*n+n-1] / den, weight nu in (0,1].
struct Shell {
  int n = 0;
  Rat r2;
  i64 den = 1;
  std::vector<std::int32_t> coords;
  std::vector<Rat> weights;

  size_t size() const { return weights.size(); }
  const std::int32_t* vec(size_t k) const { return coords.data() + k * size_t(n); }
  Rat weight_sum() const {
    Rat s;
    for (const Rat& w : weights) s += w;
    return s;
  }
};

struct BalancedResult {
  bool ok = false;
  std::string witness;  // offending coordinate sum when not balanced
};

// sum_x x = 0, exactly (unit weights)
BalancedResult is_balanced(const Shell& shell);

struct TwoDesignResult {
  bool ok = false;
  Rat c_r;  // sum nu x x^T = c_r Id when ok
  std::string witness;
};

// weighted 1- and 2-design moment identities, exactly
TwoDesignResult is_weighted_2design(const Shell& shell);

// Largest t <= tmax (tmax <= 4) such that all moment tensors up to degree t
// equal their rotation-invariant values, exactly.
int design_strength(const Shell& shell, int tmax);

// a_r = sum_w P(w) with P(x) = sum x_i^4 - 3/(n+2) (sum x_i^2)^2, exactly.
Rat fourth_moment_deviation(const Shell& shell);

struct ShellRecord {
  Rat r2;
  bool balanced = false;  // every per-point shell Lambda_x(r) balanced
  bool design2 = false;
  Rat c_r;
  int strength = 0;
  Rat a_r;
  bool pass = false;
  std::string witness;
};

struct CriticalityCertificate {
  bool pass = false;
  bool exact = true;
  std::vector<ShellRecord> shells;
  std::string witness;
};

// Criticality for all c > 0: every Lambda_x(r) balanced and every Lambda(r)
// a weighted 2-design, for all r^2 <= R2max.
CriticalityCertificate certify_critical(const PeriodicSetRep& rep,
                                        const Rat& r2max);

}  // namespace periodica
