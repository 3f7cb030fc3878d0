#include "periodica/designs.hpp"

#include <algorithm>
#include <sstream>

#include "periodica/periodic.hpp"

namespace periodica {

namespace {

i64 weight_den(const Shell& s) {
  i64 w = 1;
  for (const Rat& v : s.weights) w = lcm_checked(w, v.den());
  return w;
}

std::string vec_str(const std::vector<Rat>& v) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i].str();
  os << ")";
  return os.str();
}

}  // namespace

BalancedResult is_balanced(const Shell& shell) {
  const int n = shell.n;
  std::vector<i128> sum(size_t(n), 0);
  for (size_t k = 0; k < shell.size(); ++k) {
    const std::int32_t* u = shell.vec(k);
    for (int i = 0; i < n; ++i) sum[size_t(i)] += u[i];
  }
  BalancedResult r;
  r.ok = true;
  for (int i = 0; i < n; ++i)
    if (sum[size_t(i)] != 0) r.ok = false;
  if (!r.ok) {
    std::vector<Rat> w(size_t(n));
    for (int i = 0; i < n; ++i)
      w[size_t(i)] = Rat(narrow_checked(sum[size_t(i)]), shell.den);
    r.witness = "sum " + vec_str(w);
  }
  return r;
}

TwoDesignResult is_weighted_2design(const Shell& shell) {
  const int n = shell.n;
  const i64 W = weight_den(shell);
  std::vector<i128> m1(size_t(n), 0);
  std::vector<i128> m2(size_t(n) * size_t(n), 0);
  for (size_t k = 0; k < shell.size(); ++k) {
    const std::int32_t* u = shell.vec(k);
    const Rat& nu = shell.weights[k];
    i64 wk = nu.num() * (W / nu.den());
    for (int i = 0; i < n; ++i) {
      m1[size_t(i)] += i128(wk) * u[i];
      for (int j = 0; j <= i; ++j)
        m2[size_t(i) * n + j] += i128(wk) * u[i] * u[j];
    }
  }
  TwoDesignResult r;
  for (int i = 0; i < n; ++i)
    if (m1[size_t(i)] != 0) {
      r.witness = "weighted first moment nonzero in coordinate " + std::to_string(i);
      return r;
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (m2[size_t(i) * n + j] != 0) {
        r.witness = "second moment entry (" + std::to_string(i) + "," +
                    std::to_string(j) + ") nonzero";
        return r;
      }
  for (int i = 1; i < n; ++i)
    if (m2[size_t(i) * n + i] != m2[0]) {
      r.witness = "second moment diagonal not scalar";
      return r;
    }
  r.ok = true;
  // c_r = r^2 (sum nu) / n; the trace identity makes this the diagonal value
  r.c_r = shell.r2 * shell.weight_sum() / Rat(n);
  Rat diag = Rat::from_i128(m2[0], 1) / (Rat(W) * Rat(shell.den) * Rat(shell.den));
  if (diag != r.c_r) throw math_error("2-design constant fails the trace identity");
  return r;
}

namespace {

int pack3(int n, int i, int j, int k) {  // i <= j <= k
  (void)n;
  return ((k * (k + 1) * (k + 2)) / 6) + ((j * (j + 1)) / 2) + i;
}

int pack4(int n, int i, int j, int k, int l) {  // i <= j <= k <= l
  (void)n;
  return ((l * (l + 1) * (l + 2) * (l + 3)) / 24) + ((k * (k + 1) * (k + 2)) / 6) +
         ((j * (j + 1)) / 2) + i;
}

}  // namespace

int design_strength(const Shell& shell, int tmax) {
  if (tmax > 4) throw input_error("design strength beyond t=4 is unsupported");
  const int n = shell.n;
  const i64 W = weight_den(shell);

  std::vector<i128> m1(size_t(n), 0);
  std::vector<i128> m2(size_t(n) * size_t(n), 0);
  std::vector<i128> m3(size_t(pack3(n, n - 1, n - 1, n - 1)) + 1, 0);
  std::vector<i128> m4(size_t(pack4(n, n - 1, n - 1, n - 1, n - 1)) + 1, 0);

  for (size_t v = 0; v < shell.size(); ++v) {
    const std::int32_t* u = shell.vec(v);
    const Rat& nu = shell.weights[v];
    i64 wk = nu.num() * (W / nu.den());
    for (int i = 0; i < n; ++i) m1[size_t(i)] += i128(wk) * u[i];
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i)
        m2[size_t(j) * n + i] += i128(wk) * u[i] * u[j];
    if (tmax >= 3)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j <= k; ++j) {
          i128 ujk = i128(u[j]) * u[k];
          for (int i = 0; i <= j; ++i)
            m3[size_t(pack3(n, i, j, k))] += i128(wk) * u[i] * ujk;
        }
    if (tmax >= 4)
      for (int l = 0; l < n; ++l)
        for (int k = 0; k <= l; ++k) {
          i128 ukl = i128(u[k]) * u[l];
          for (int j = 0; j <= k; ++j) {
            i128 ujkl = u[j] * ukl;
            for (int i = 0; i <= j; ++i)
              m4[size_t(pack4(n, i, j, k, l))] += i128(wk) * u[i] * ujkl;
          }
        }
  }

  // degree 1
  for (int i = 0; i < n; ++i)
    if (m1[size_t(i)] != 0) return 0;
  // degree 2: scalar matrix
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      i128 v = m2[size_t(j) * n + i];
      if (i != j && v != 0) return 1;
      if (i == j && v != m2[0]) return 1;
    }
  if (tmax < 3) return 2;
  // degree 3: all moments vanish
  for (const i128& v : m3)
    if (v != 0) return 2;
  if (tmax < 4) return 3;
  // degree 4: sym multiple of (delta delta + ...) with mu = r^4 sum(nu)/(n(n+2))
  Rat scale = Rat(W) * Rat(shell.den) * Rat(shell.den) * Rat(shell.den) *
              Rat(shell.den);
  Rat mu = shell.r2 * shell.r2 * shell.weight_sum() / (Rat(n) * Rat(n + 2));
  auto m4_rat = [&](int a, int b, int c, int d) {
    int idx[4] = {a, b, c, d};
    std::sort(idx, idx + 4);
    return Rat::from_i128(m4[size_t(pack4(n, idx[0], idx[1], idx[2], idx[3]))], 1) /
           scale;
  };
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int c = b; c < n; ++c)
        for (int d = c; d < n; ++d) {
          int kron = 0;
          if (a == b && c == d) ++kron;
          if (a == c && b == d) ++kron;
          if (a == d && b == c) ++kron;
          if (m4_rat(a, b, c, d) != Rat(kron) * mu) return 3;
        }
  return 4;
}

Rat fourth_moment_deviation(const Shell& shell) {
  const int n = shell.n;
  i128 z = 0;  // sum of fourth powers of scaled entries
  for (size_t k = 0; k < shell.size(); ++k) {
    const std::int32_t* u = shell.vec(k);
    for (int i = 0; i < n; ++i) {
      i128 sq = i128(u[i]) * u[i];
      z += sq * sq;
    }
  }
  Rat den4 = Rat(shell.den) * Rat(shell.den) * Rat(shell.den) * Rat(shell.den);
  Rat z_r = Rat::from_i128(z, 1) / den4;
  Rat count = Rat(i64(shell.size()));
  return z_r - Rat(3, n + 2) * shell.r2 * shell.r2 * count;
}

CriticalityCertificate certify_critical(const PeriodicSetRep& rep_in,
                                        const Rat& r2max) {
  if (!rep_in.exact || !rep_in.L.ambient_exact)
    throw math_error("criticality certificates require exact arithmetic");
  PeriodicSetRep rep = rep_in;
  if (!rep.is_minimal) rep = maximal_period_lattice(rep_in).minimal;
  const int n = rep.L.n;
  const int m = rep.m();

  // union shells with weights
  std::vector<Shell> lam = weighted_difference_shells(rep, r2max);

  // per-point shells Lambda_{t_k}(r), assembled from the coset fragments
  // (one k at a time; balancedness is a plain unweighted sum)
  std::map<Rat, std::vector<RatVec>> coset_sums;  // r2 -> per-k coordinate sums
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      RatVec delta(size_t(n));
      for (int i = 0; i < n; ++i)
        delta[size_t(i)] = rep.tau[size_t(l)][size_t(i)] - rep.tau[size_t(k)][size_t(i)];
      auto frags = shells_coords(rep.L, delta, r2max);
      for (const auto& f : frags) {
        if (f.r2_exact.is_zero()) continue;
        auto& per_k = coset_sums[f.r2_exact];
        if (per_k.empty()) per_k.assign(size_t(m), RatVec(size_t(n)));
        for (const auto& cv : f.vecs)
          for (int i = 0; i < n; ++i)
            per_k[size_t(k)][size_t(i)] += Rat(cv.z[i]) + delta[size_t(i)];
      }
    }
  }

  CriticalityCertificate cert;
  cert.pass = true;
  for (const Shell& s : lam) {
    ShellRecord rec;
    rec.r2 = s.r2;
    rec.balanced = true;
    auto it = coset_sums.find(s.r2);
    if (it != coset_sums.end()) {
      // sum of B(z+delta) vanishes iff the coordinate sum does
      for (int k = 0; k < m && rec.balanced; ++k)
        for (int i = 0; i < n; ++i)
          if (!it->second[size_t(k)][size_t(i)].is_zero()) {
            rec.balanced = false;
            rec.witness = "shell of point " + std::to_string(k) +
                          " at r2=" + s.r2.str() + " is unbalanced";
            break;
          }
    }
    TwoDesignResult d2 = is_weighted_2design(s);
    rec.design2 = d2.ok;
    if (d2.ok)
      rec.c_r = d2.c_r;
    else if (rec.witness.empty())
      rec.witness = "r2=" + s.r2.str() + ": " + d2.witness;
    rec.strength = design_strength(s, 4);
    rec.a_r = fourth_moment_deviation(s);
    rec.pass = rec.balanced && rec.design2;
    if (!rec.pass) {
      cert.pass = false;
      if (cert.witness.empty()) cert.witness = rec.witness;
    }
    cert.shells.push_back(std::move(rec));
  }
  return cert;
}

}  // namespace periodica
