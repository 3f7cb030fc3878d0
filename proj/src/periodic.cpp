#include "periodica/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace periodica {

namespace {

RatVec reduce_mod_1(const RatVec& v) {
  RatVec r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = v[i].frac();
  return r;
}

bool is_integral(const RatVec& v) {
  for (const Rat& x : v)
    if (!x.is_integer()) return false;
  return true;
}

RatVec sub(const RatVec& a, const RatVec& b) {
  RatVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

RatVec add(const RatVec& a, const RatVec& b) {
  RatVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

RatVec neg(const RatVec& a) {
  RatVec r(a.size());
  for (size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

bool eq(const RatVec& a, const RatVec& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

int find_reduced(const std::vector<RatVec>& list, const RatVec& v) {
  for (size_t i = 0; i < list.size(); ++i)
    if (eq(list[i], v)) return int(i);
  return -1;
}

// does translation by d (reduced coordinates) permute the coset list?
bool permutes_cosets(const std::vector<RatVec>& tau, const RatVec& d) {
  for (const RatVec& t : tau)
    if (find_reduced(tau, reduce_mod_1(add(t, d))) < 0) return false;
  return true;
}

}  // namespace

double PeriodicSetRep::point_density() const {
  return m() / std::sqrt(L.det_gram());
}

PeriodicSetRep make_rep_coords(const Lattice& L, const std::vector<RatVec>& tau) {
  if (!L.ambient_exact) throw math_error("operation requires exact arithmetic");
  PeriodicSetRep rep;
  rep.L = L;
  rep.exact = true;
  rep.tau.reserve(tau.size());
  for (const RatVec& t : tau) rep.tau.push_back(reduce_mod_1(t));
  for (size_t i = 0; i < rep.tau.size(); ++i)
    for (size_t j = i + 1; j < rep.tau.size(); ++j)
      if (eq(rep.tau[i], rep.tau[j]))
        throw input_error("translations congruent mod the lattice");
  for (const RatVec& t : rep.tau) {
    RatVec amb = L.ambient_of(t);
    Eigen::VectorXd v(L.n);
    for (int i = 0; i < L.n; ++i) v[i] = amb[size_t(i)].to_double();
    rep.trans.push_back(v);
  }
  return rep;
}

PeriodicSetRep make_rep(const Lattice& L,
                        const std::vector<Eigen::VectorXd>& translations) {
  if (L.ambient_exact) {
    std::vector<RatVec> tau;
    bool ok = true;
    for (const auto& t : translations) {
      RatVec amb(size_t(L.n));
      for (int i = 0; i < L.n && ok; ++i) {
        auto r = rationalize(t[i]);
        if (!r)
          ok = false;
        else
          amb[size_t(i)] = *r;
      }
      if (!ok) break;
      tau.push_back(L.coords_of(amb));
    }
    if (ok) return make_rep_coords(L, tau);
  }
  PeriodicSetRep rep;
  rep.L = L;
  rep.exact = false;
  for (const auto& t : translations) {
    Eigen::VectorXd c = L.coords_of_f(t);
    Eigen::VectorXd cf = c.array() - c.array().floor();
    rep.trans.push_back(L.ambient_of_f(cf));
  }
  for (size_t i = 0; i < rep.trans.size(); ++i)
    for (size_t j = i + 1; j < rep.trans.size(); ++j) {
      Eigen::VectorXd d = L.coords_of_f(rep.trans[i] - rep.trans[j]);
      Eigen::VectorXd dr = d.array() - d.array().round();
      if (dr.lpNorm<Eigen::Infinity>() < 1e-9)
        throw input_error("translations congruent mod the lattice");
    }
  return rep;
}

MaximalReduction maximal_period_lattice(const PeriodicSetRep& rep) {
  if (!rep.exact || !rep.L.ambient_exact)
    throw math_error("maximal period lattice requires exact arithmetic");
  const int n = rep.L.n;
  const int m0 = rep.m();

  // coordinates of the growing lattice relative to the original basis
  RatMat u_total = RatMat::identity(n);
  std::vector<RatVec> tau = rep.tau;

  while (true) {
    bool enlarged = false;
    const int m = int(tau.size());
    for (int i = 0; i < m && !enlarged; ++i)
      for (int j = 0; j < m && !enlarged; ++j) {
        if (i == j) continue;
        RatVec d = reduce_mod_1(sub(tau[size_t(i)], tau[size_t(j)]));
        if (is_integral(d)) continue;
        if (!permutes_cosets(tau, d)) continue;
        // enlarge: lattice generated by Z^n and d (in current coordinates)
        i64 q = common_den(d);
        IMat gens(n, n + 1);
        gens.setZero();
        for (int r = 0; r < n; ++r) gens(r, r) = q;
        for (int r = 0; r < n; ++r)
          gens(r, n) = narrow_checked(i128(d[size_t(r)].num()) *
                                      (q / d[size_t(r)].den()));
        IMat h = hnf_basis(gens);
        RatMat u = RatMat::from_int(h, q);
        RatMat u_inv = u.inverse();
        // re-express and re-reduce the translations
        std::vector<RatVec> tau_new;
        for (const RatVec& t : tau) {
          RatVec tn = reduce_mod_1(u_inv.apply(t));
          if (find_reduced(tau_new, tn) < 0) tau_new.push_back(tn);
        }
        if (int(tau_new.size()) >= m)
          throw math_error("maximal period lattice failed to shrink the representation");
        tau = std::move(tau_new);
        u_total = u_total.mul(u);
        enlarged = true;
      }
    if (!enlarged) break;
  }

  // canonical basis: HNF of the accumulated coordinate matrix
  i64 qt = u_total.common_den();
  IMat gens(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gens(i, j) = narrow_checked(i128(u_total(i, j).num()) *
                                  (qt / u_total(i, j).den()));
  IMat h = hnf_basis(gens);
  RatMat u_canon = RatMat::from_int(h, qt);

  RatMat b0 = rep.L.basis_rat();
  RatMat bmax = b0.mul(u_canon);
  i64 bden = bmax.common_den();
  IMat bnum(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      bnum(i, j) =
          narrow_checked(i128(bmax(i, j).num()) * (bden / bmax(i, j).den()));

  MaximalReduction red;
  red.lmax = Lattice::from_integer_basis(bnum, bden);

  // translations relative to the canonical basis
  RatMat u_canon_inv = u_canon.inverse();
  std::vector<RatVec> tau_min;
  for (const RatVec& t : rep.tau) {
    RatVec tn = reduce_mod_1(u_canon_inv.apply(t));
    if (find_reduced(tau_min, tn) < 0) tau_min.push_back(tn);
  }
  std::sort(tau_min.begin(), tau_min.end(), [](const RatVec& a, const RatVec& b) {
    for (size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  });
  red.minimal = make_rep_coords(red.lmax, tau_min);
  red.minimal.is_minimal = true;
  red.m_min = red.minimal.m();
  if (red.m_min == 0 || m0 % red.m_min != 0)
    throw math_error("maximal period lattice produced an inconsistent index");
  red.index = m0 / red.m_min;
  return red;
}

Rat weight(const PeriodicSetRep& minimal_rep, const RatVec& w_ambient) {
  if (!minimal_rep.exact) throw math_error("operation requires exact arithmetic");
  if (!minimal_rep.is_minimal)
    throw input_error("weight requires a minimal representation");
  RatVec zeta = minimal_rep.L.coords_of(w_ambient);
  const int m = minimal_rep.m();
  int count = 0;
  // w in Lambda_{t_k}  <=>  w + t_k in Lambda
  for (int k = 0; k < m; ++k) {
    RatVec s = reduce_mod_1(add(zeta, minimal_rep.tau[size_t(k)]));
    if (find_reduced(minimal_rep.tau, s) >= 0) ++count;
  }
  if (count == 0) throw math_error("not a difference vector");
  return Rat(count, m);
}

namespace {

struct VecKey {
  std::vector<std::int32_t> u;
  bool operator<(const VecKey& o) const { return u < o.u; }
};

}  // namespace

std::vector<Shell> weighted_difference_shells(const PeriodicSetRep& rep,
                                              const Rat& r2max) {
  if (!rep.exact || !rep.L.ambient_exact)
    throw math_error("operation requires exact arithmetic");
  const int n = rep.L.n;
  const int m = rep.m();

  // common denominator of all pairwise offsets
  i64 qd = 1;
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l)
      qd = lcm_checked(qd, common_den(sub(rep.tau[size_t(l)], rep.tau[size_t(k)])));
  const i64 den_total = lcm_checked(rep.L.basis_den, 1) * qd;

  // per-shell map: ambient numerator vector -> number of difference sets
  std::map<Rat, std::map<VecKey, int>> shells_map;
  for (int k = 0; k < m; ++k) {
    for (int l = 0; l < m; ++l) {
      RatVec delta = sub(rep.tau[size_t(l)], rep.tau[size_t(k)]);
      auto ball = enumerate_coset_ball_coords(rep.L, delta, r2max);
      for (const auto& cv : ball) {
        if (cv.norm2_exact.is_zero()) continue;
        VecKey key;
        key.u.resize(size_t(n));
        for (int r = 0; r < n; ++r) {
          i128 acc = 0;
          for (int c = 0; c < n; ++c) {
            const Rat& dc = delta[size_t(c)];
            i128 num_c = i128(cv.z[c]) * qd + i128(dc.num()) * (qd / dc.den());
            acc += i128(rep.L.basis_num(r, c)) * num_c;
          }
          key.u[size_t(r)] = std::int32_t(narrow_checked(acc));
        }
        shells_map[cv.norm2_exact][key] += 1;
      }
    }
  }

  std::vector<Shell> out;
  for (auto& [r2, vm] : shells_map) {
    Shell s;
    s.n = n;
    s.r2 = r2;
    s.den = den_total;
    s.coords.reserve(vm.size() * size_t(n));
    s.weights.reserve(vm.size());
    for (auto& [key, count] : vm) {
      for (int i = 0; i < n; ++i) s.coords.push_back(key.u[size_t(i)]);
      s.weights.push_back(Rat(count, m));
    }
    out.push_back(std::move(s));
  }
  return out;
}

TwoPeriodicStructure two_periodic_structure(const PeriodicSetRep& rep) {
  if (!rep.exact) throw math_error("operation requires exact arithmetic");
  MaximalReduction red = maximal_period_lattice(rep);
  if (red.m_min != 2) throw math_error("not 2-periodic");

  const int n = rep.L.n;
  const int m = rep.m();
  // membership of t_i in L_max: integral coordinates relative to B_max
  RatMat binv = red.lmax.basis_rat().inverse();
  RatMat b0 = rep.L.basis_rat();
  RatMat to_max = binv.mul(b0);  // coords(L) -> coords(L_max)

  TwoPeriodicStructure st;
  st.lmax = red.lmax;
  for (int i = 0; i < m; ++i) {
    if (is_integral(to_max.apply(rep.tau[size_t(i)])))
      st.J.push_back(i);
    else
      st.Jp.push_back(i);
  }
  if (st.J.empty())
    throw input_error("representation does not contain the origin");
  if (st.J.size() != st.Jp.size())
    throw math_error("two-periodic partition is not equipotent");

  // v: any translate outside L_max
  st.v_coords = to_max.apply(rep.tau[size_t(st.Jp.front())]);
  RatVec v_amb = red.lmax.ambient_of(st.v_coords);
  st.v_ambient.resize(n);
  for (int i = 0; i < n; ++i) st.v_ambient[i] = v_amb[size_t(i)].to_double();

  st.sigma.resize(m, m);
  std::vector<bool> in_j(size_t(m), false);
  for (int i : st.J) in_j[size_t(i)] = true;
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < m; ++i) {
      RatVec d = sub(rep.tau[size_t(i)], rep.tau[size_t(k)]);
      int target = -1;
      if (in_j[size_t(k)])
        target = find_reduced(rep.tau, reduce_mod_1(d));
      else
        target = find_reduced(rep.tau, reduce_mod_1(neg(d)));
      if (target < 0) throw math_error("two-periodic reordering map is incomplete");
      st.sigma(i, k) = target;
    }
  }

  // bijection and J/J' mapping checks
  for (int k = 0; k < m; ++k) {
    std::vector<bool> seen(size_t(m), false);
    for (int i = 0; i < m; ++i) {
      int s = st.sigma(i, k);
      if (seen[size_t(s)]) throw math_error("two-periodic reordering map not bijective");
      seen[size_t(s)] = true;
      bool same_class = in_j[size_t(i)] == in_j[size_t(s)];
      if (in_j[size_t(k)] ? !same_class : same_class)
        throw math_error("two-periodic reordering map violates the partition");
    }
  }
  return st;
}

AutomorphismCheck is_orthogonal_automorphism(const PeriodicSetRep& rep,
                                             const Eigen::MatrixXd& phi) {
  if (!rep.exact) throw math_error("operation requires exact arithmetic");
  if (!rep.is_minimal)
    throw input_error("automorphism test requires a minimal representation");
  const int n = rep.L.n;
  if ((phi.transpose() * phi - Eigen::MatrixXd::Identity(n, n))
          .lpNorm<Eigen::Infinity>() > 1e-12)
    throw input_error("map is not orthogonal");

  // phi stabilizes L iff B^{-1} phi B is integral and unimodular
  Eigen::MatrixXd cf = rep.L.basis.colPivHouseholderQr().solve(phi * rep.L.basis);
  IMat c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double r = std::round(cf(i, j));
      if (std::abs(cf(i, j) - r) > 1e-9)
        throw input_error("map does not stabilize the lattice");
      c(i, j) = i64(r);
    }
  i128 det = int_det(c);
  if (det != 1 && det != -1)
    throw input_error("map does not stabilize the lattice");

  const int m = rep.m();
  RatMat cr = RatMat::from_int(c, 1);
  AutomorphismCheck result;
  for (int l = 0; l < m; ++l) {
    std::vector<int> sigma(size_t(m), -1);
    std::vector<bool> used(size_t(m), false);
    bool ok = true;
    for (int i = 0; i < m && ok; ++i) {
      RatVec d = sub(rep.tau[size_t(i)], rep.tau[0]);
      RatVec target = reduce_mod_1(add(cr.apply(d), rep.tau[size_t(l)]));
      int k = find_reduced(rep.tau, target);
      if (k < 0 || used[size_t(k)])
        ok = false;
      else {
        sigma[size_t(i)] = k;
        used[size_t(k)] = true;
      }
    }
    if (ok) {
      result.ok = true;
      result.sigma = sigma;
      return result;
    }
  }
  return result;
}

Lattice build_dn(int n) {
  if (n < 3) throw input_error("D_n requires n >= 3");
  IMat b = IMat::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    b(i, i) = 1;
    b(i + 1, i) = -1;
  }
  b(n - 2, n - 1) = 1;
  b(n - 1, n - 1) = 1;
  return Lattice::from_integer_basis(b, 1);
}

PeriodicSetRep build_dn_plus(int n) {
  Lattice dn = build_dn(n);
  RatVec half(size_t(n), Rat(1, 2));
  std::vector<RatVec> tau;
  tau.push_back(RatVec(size_t(n)));
  tau.push_back(dn.coords_of(half));
  return make_rep_coords(dn, tau);
}

PeriodicSetRep refine(const PeriodicSetRep& rep, const IMat& s) {
  if (!rep.exact) throw math_error("operation requires exact arithmetic");
  const int n = rep.L.n;
  IMat h = hnf_basis(s);
  std::vector<IVec> reps = hnf_coset_reps(h);

  RatMat b0 = rep.L.basis_rat();
  RatMat sr = RatMat::from_int(s, 1);
  RatMat bs = b0.mul(sr);
  i64 bden = bs.common_den();
  IMat bnum(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      bnum(i, j) = narrow_checked(i128(bs(i, j).num()) * (bden / bs(i, j).den()));
  Lattice sub_lat = Lattice::from_integer_basis(bnum, bden);

  RatMat s_inv = sr.inverse();
  std::vector<RatVec> tau_new;
  for (const RatVec& t : rep.tau)
    for (const IVec& r : reps) {
      RatVec shifted(size_t(n));
      for (int i = 0; i < n; ++i) shifted[size_t(i)] = t[size_t(i)] + Rat(r[i]);
      tau_new.push_back(reduce_mod_1(s_inv.apply(shifted)));
    }
  return make_rep_coords(sub_lat, tau_new);
}

}  // namespace periodica
