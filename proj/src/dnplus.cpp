#include "periodica/dnplus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "periodica/enumerate.hpp"

namespace periodica {

InvariantTriple invariant_basis_eval(const Eigen::MatrixXd& h) {
  if (h.rows() != h.cols()) throw input_error("matrix must be square");
  if ((h - h.transpose()).lpNorm<Eigen::Infinity>() >
      1e-12 * std::max(1.0, h.norm()))
    throw input_error("matrix must be symmetric");
  InvariantTriple t;
  double tr = h.trace();
  t.f1 = tr * tr;
  t.f2 = h.squaredNorm();
  for (int i = 0; i < h.rows(); ++i)
    for (int j = i + 1; j < h.cols(); ++j) t.f3 += h(i, j) * h(i, j);
  return t;
}

namespace {

int pack3(int i, int j, int k) {  // i <= j <= k
  return ((k * (k + 1) * (k + 2)) / 6) + ((j * (j + 1)) / 2) + i;
}

int pair_index(int n, int i, int j) {  // i < j
  return (j * (j - 1)) / 2 + i;
}

struct ShellAcc {
  i64 count = 0;
  i128 z = 0;
  std::vector<i128> z_i;
  std::vector<i128> z_pair;
  std::vector<i128> m3;
};

struct StatsAccum {
  int n = 0;
  bool want_split = false, want_odd3 = false;
  std::vector<i64> bq;   // n*n: basis_num * qt
  std::vector<i64> off;  // basis_num * tau_num
  i128 keep_lhs_factor = 1, keep_rhs = 0;  // s * r2.den <= r2.num * den^2
  std::unordered_map<i64, ShellAcc> shells;
  std::vector<i64> u;

  void point(const std::int32_t* z, double) {
    i64 s = 0;
    for (int r = 0; r < n; ++r) {
      i64 acc = off[size_t(r)];
      const i64* row = bq.data() + size_t(r) * n;
      for (int c = 0; c < n; ++c) acc += row[c] * z[c];
      u[size_t(r)] = acc;
      s += acc * acc;
    }
    if (i128(s) * keep_lhs_factor > keep_rhs) return;
    ShellAcc& sh = shells[s];
    if (sh.z_i.empty() && (want_split || want_odd3)) {
      if (want_split) {
        sh.z_i.assign(size_t(n), 0);
        sh.z_pair.assign(size_t(n) * (n - 1) / 2, 0);
      }
      if (want_odd3) sh.m3.assign(size_t(pack3(n - 1, n - 1, n - 1)) + 1, 0);
    }
    sh.count += 1;
    for (int i = 0; i < n; ++i) {
      i128 sq = i128(u[size_t(i)]) * u[size_t(i)];
      sh.z += sq * sq;
      if (want_split) sh.z_i[size_t(i)] += sq * sq;
    }
    if (want_split)
      for (int j = 1; j < n; ++j)
        for (int i = 0; i < j; ++i)
          sh.z_pair[size_t(pair_index(n, i, j))] +=
              (i128(u[size_t(i)]) * u[size_t(i)]) * (i128(u[size_t(j)]) * u[size_t(j)]);
    if (want_odd3)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j <= k; ++j) {
          i128 ujk = i128(u[size_t(j)]) * u[size_t(k)];
          for (int i = 0; i <= j; ++i)
            sh.m3[size_t(pack3(i, j, k))] += i128(u[size_t(i)]) * ujk;
        }
  }
};

Rat rat_div_pow(i128 v, i64 den, int p) {
  i128 d = 1;
  for (int i = 0; i < p; ++i) d *= den;
  return Rat::from_i128(v, d);
}

}  // namespace

std::vector<ExactShellStats> exact_coset_shell_stats(const Lattice& L,
                                                     const RatVec& tau,
                                                     const Rat& r2max,
                                                     bool want_split,
                                                     bool want_odd3) {
  if (!L.ambient_exact) throw math_error("operation requires exact arithmetic");
  if (r2max < Rat(0)) throw input_error("negative squared radius");
  const int n = L.n;
  i64 qt = common_den(tau);
  i64 den = narrow_checked(i128(L.basis_den) * qt);

  StatsAccum proto;
  proto.n = n;
  proto.want_split = want_split;
  proto.want_odd3 = want_odd3;
  proto.bq.assign(size_t(n) * n, 0);
  proto.off.assign(size_t(n), 0);
  proto.u.assign(size_t(n), 0);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      proto.bq[size_t(r) * n + c] = narrow_checked(i128(L.basis_num(r, c)) * qt);
      const Rat& tc = tau[size_t(c)];
      proto.off[size_t(r)] +=
          narrow_checked(i128(L.basis_num(r, c)) * tc.num() * (qt / tc.den()));
    }
  }
  proto.keep_lhs_factor = r2max.den();
  proto.keep_rhs = i128(r2max.num()) * den * den;

  Eigen::VectorXd tau_f(n);
  for (int i = 0; i < n; ++i) tau_f[i] = tau[size_t(i)].to_double();
  EnumContext ctx = L.enum_context();
  std::vector<StatsAccum> accs;
  parallel_ball_scan(ctx, tau_f, r2max.to_double(), proto, accs,
                     [](StatsAccum& a, const std::int32_t* z, double q) {
                       a.point(z, q);
                     });

  std::map<i64, ShellAcc> merged;
  for (auto& a : accs)
    for (auto& [s, sh] : a.shells) {
      ShellAcc& dst = merged[s];
      if (dst.z_i.empty() && !sh.z_i.empty()) dst.z_i.assign(sh.z_i.size(), 0);
      if (dst.z_pair.empty() && !sh.z_pair.empty())
        dst.z_pair.assign(sh.z_pair.size(), 0);
      if (dst.m3.empty() && !sh.m3.empty()) dst.m3.assign(sh.m3.size(), 0);
      dst.count += sh.count;
      dst.z += sh.z;
      for (size_t i = 0; i < sh.z_i.size(); ++i) dst.z_i[i] += sh.z_i[i];
      for (size_t i = 0; i < sh.z_pair.size(); ++i) dst.z_pair[i] += sh.z_pair[i];
      for (size_t i = 0; i < sh.m3.size(); ++i) dst.m3[i] += sh.m3[i];
    }

  std::vector<ExactShellStats> out;
  for (auto& [s, sh] : merged) {
    ExactShellStats st;
    st.r2 = Rat::from_i128(s, i128(den) * den);
    st.count = sh.count;
    st.z = rat_div_pow(sh.z, den, 4);
    if (want_split) {
      st.z_per_i.resize(size_t(n));
      for (int i = 0; i < n; ++i) st.z_per_i[size_t(i)] = rat_div_pow(sh.z_i[size_t(i)], den, 4);
      st.z_pair.resize(sh.z_pair.size());
      for (size_t i = 0; i < sh.z_pair.size(); ++i)
        st.z_pair[i] = rat_div_pow(sh.z_pair[i], den, 4);
    }
    if (want_odd3)
      for (const i128& v : sh.m3)
        if (v != 0) st.odd3_zero = false;
    out.push_back(std::move(st));
  }
  return out;
}

InvariantCoefficients abc_coefficients(const Shell& shell) {
  const int n = shell.n;
  // exact moment sums from the stored vectors
  i128 z = 0;
  std::vector<i128> z_i(size_t(n), 0);
  std::vector<i128> z_pair(size_t(n) * (n - 1) / 2, 0);
  for (size_t k = 0; k < shell.size(); ++k) {
    const std::int32_t* u = shell.vec(k);
    for (int i = 0; i < n; ++i) {
      i128 sq = i128(u[i]) * u[i];
      z += sq * sq;
      z_i[size_t(i)] += sq * sq;
    }
    for (int j = 1; j < n; ++j)
      for (int i = 0; i < j; ++i)
        z_pair[size_t(pair_index(n, i, j))] +=
            (i128(u[i]) * u[i]) * (i128(u[j]) * u[j]);
  }
  Rat den4 = Rat(shell.den) * Rat(shell.den) * Rat(shell.den) * Rat(shell.den);
  Rat z_r = Rat::from_i128(z, 1) / den4;
  Rat count = Rat(i64(shell.size()));
  Rat r4n = shell.r2 * shell.r2 * count;

  InvariantCoefficients co;
  Rat nn1 = Rat(i64(n) * (n - 1));
  co.alpha = (r4n - z_r) / nn1;
  co.beta = z_r / Rat(n - 1) - r4n / nn1;
  co.gamma = Rat(-2 * i64(n + 2)) * z_r / nn1 + Rat(6) * r4n / nn1;

  // the linear combination must reproduce the exact moment sums on the
  // elementary basis of S^n, otherwise the shell is not invariant enough
  for (int i = 0; i < n; ++i) {
    Rat lhs = Rat::from_i128(z_i[size_t(i)], 1) / den4;
    if (lhs != co.alpha + co.beta) throw math_error("invariant theory inapplicable");
  }
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < j; ++i) {
      Rat lhs = Rat(4) * Rat::from_i128(z_pair[size_t(pair_index(n, i, j))], 1) / den4;
      if (lhs != Rat(2) * co.beta + co.gamma)
        throw math_error("invariant theory inapplicable");
    }
  return co;
}

std::vector<DnShellStats> dnplus_shell_stats(int n, const Rat& r2max,
                                             bool want_split, bool want_odd3) {
  if (n < 5 || n % 2 == 0)
    throw input_error("D_n^+ shell statistics require odd n >= 5");
  Lattice dn = build_dn(n);
  RatVec zero(size_t(n));
  RatVec half(size_t(n), Rat(1, 2));
  RatVec tau_half = dn.coords_of(half);

  auto stats0 = exact_coset_shell_stats(dn, zero, r2max, want_split, want_odd3);
  auto stats_h =
      exact_coset_shell_stats(dn, tau_half, r2max, want_split, want_odd3);

  std::map<Rat, DnShellStats> merged;
  for (const auto& st : stats0) {
    if (st.r2.is_zero()) continue;
    DnShellStats d;
    d.r2 = st.r2;
    d.half_integral = false;
    d.count = st.count;
    d.weight = Rat(1);
    d.z_r = st.z;
    d.z_per_i = st.z_per_i;
    d.z_pair = st.z_pair;
    d.odd3_zero = st.odd3_zero;
    merged[st.r2] = std::move(d);
  }
  for (const auto& st : stats_h) {
    if (merged.count(st.r2))
      throw math_error("invariant theory inapplicable");  // mixed-weight shell
    // the shell of -1/2 + D_n is the mirror image: double the even sums
    DnShellStats d;
    d.r2 = st.r2;
    d.half_integral = true;
    d.count = 2 * st.count;
    d.weight = Rat(1, 2);
    d.z_r = Rat(2) * st.z;
    if (want_split) {
      d.z_per_i.resize(st.z_per_i.size());
      for (size_t i = 0; i < st.z_per_i.size(); ++i)
        d.z_per_i[i] = Rat(2) * st.z_per_i[i];
      d.z_pair.resize(st.z_pair.size());
      for (size_t i = 0; i < st.z_pair.size(); ++i)
        d.z_pair[i] = Rat(2) * st.z_pair[i];
    }
    d.odd3_zero = st.odd3_zero;
    merged[st.r2] = std::move(d);
  }

  std::vector<DnShellStats> out;
  for (auto& [r2, d] : merged) {
    d.a_r = d.z_r - Rat(3, n + 2) * d.r2 * d.r2 * Rat(d.count);
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

void shell_coefficients(BlockReport& blk, int n, double c) {
  double r2 = blk.r2.to_double();
  double r4n = r2 * r2 * double(blk.count);
  double ratio = blk.a_r.to_double() / r4n;
  blk.transl_threshold_c = double(n) / (2.0 * r2);
  blk.bracket1 = (1.0 - double(n + 2) / (2.0 * c * r2)) -
                 double(n + 2) / double(n - 1) * ratio;
  blk.bracket2 = (1.0 - double(n + 2) / (2.0 * c * r2)) +
                 double(n) * (n + 2) / (2.0 * double(n - 1)) * ratio;
  blk.coeff1 = 2.0 * c / (double(n) * (n + 2)) * r4n * blk.bracket1;
  blk.coeff2 = c / (double(n) * (n + 2)) * r4n * blk.bracket2;
}

}  // namespace

DnBlocks hessian_blocks(const PeriodicSetRep& rep, double c, const Rat& r2max) {
  DnBlocks blocks;
  blocks.structure = two_periodic_structure(rep);  // throws when not 2-periodic
  const int n = rep.L.n;
  blocks.n = n;
  blocks.c = c;

  const Lattice& lmax = blocks.structure.lmax;
  RatVec zero(size_t(n));
  RatVec vpos = blocks.structure.v_coords;
  RatVec vneg(size_t(n));
  for (int i = 0; i < n; ++i) vneg[size_t(i)] = -vpos[size_t(i)];

  auto stats0 = exact_coset_shell_stats(lmax, zero, r2max, true, true);
  auto stats_p = exact_coset_shell_stats(lmax, vpos, r2max, true, true);
  auto stats_m = exact_coset_shell_stats(lmax, vneg, r2max, true, true);

  std::map<Rat, BlockReport> merged;
  for (const auto& st : stats0) {
    if (st.r2.is_zero()) continue;
    BlockReport b;
    b.r2 = st.r2;
    b.half_integral = false;
    b.count = st.count;
    b.weight = Rat(1);
    b.z_r = st.z;
    b.ii_zero = st.odd3_zero;
    merged[st.r2] = std::move(b);
  }
  auto add_half = [&](const ExactShellStats& st) {
    auto it = merged.find(st.r2);
    if (it != merged.end() && !it->second.half_integral)
      throw math_error("invariant theory inapplicable");  // weight not constant
    BlockReport& b = merged[st.r2];
    b.r2 = st.r2;
    b.half_integral = true;
    b.count += st.count;
    b.weight = Rat(1, 2);
    b.z_r += st.z;
    b.ii_zero = b.count == st.count ? st.odd3_zero : (b.ii_zero && st.odd3_zero);
  };
  for (const auto& st : stats_p) add_half(st);
  for (const auto& st : stats_m) add_half(st);

  // alpha/beta/gamma from the closed forms, verified on the basis split
  std::map<Rat, std::pair<std::vector<Rat>, std::vector<Rat>>> splits;
  for (const auto& st : stats0)
    if (!st.r2.is_zero()) splits[st.r2] = {st.z_per_i, st.z_pair};
  for (const auto& stv : {stats_p, stats_m})
    for (const auto& st : stv) {
      auto& sp = splits[st.r2];
      if (sp.first.empty()) {
        sp.first.assign(st.z_per_i.size(), Rat(0));
        sp.second.assign(st.z_pair.size(), Rat(0));
      }
      for (size_t i = 0; i < st.z_per_i.size(); ++i) sp.first[i] += st.z_per_i[i];
      for (size_t i = 0; i < st.z_pair.size(); ++i) sp.second[i] += st.z_pair[i];
    }

  for (auto& [r2, b] : merged) {
    b.weight_sum = b.weight * Rat(b.count);
    b.a_r = b.z_r - Rat(3, n + 2) * b.r2 * b.r2 * Rat(b.count);
    Rat r4n = b.r2 * b.r2 * Rat(b.count);
    Rat nn1 = Rat(i64(n) * (n - 1));
    b.alpha = (r4n - b.z_r) / nn1;
    b.beta = b.z_r / Rat(n - 1) - r4n / nn1;
    b.gamma = Rat(-2 * i64(n + 2)) * b.z_r / nn1 + Rat(6) * r4n / nn1;
    const auto& sp = splits[r2];
    for (const Rat& v : sp.first)
      if (v != b.alpha + b.beta) throw math_error("invariant theory inapplicable");
    for (const Rat& v : sp.second)
      if (Rat(4) * v != Rat(2) * b.beta + b.gamma)
        throw math_error("invariant theory inapplicable");
    shell_coefficients(b, n, c);
    blocks.shells.push_back(b);
  }
  return blocks;
}

BlockValues evaluate_blocks(const BlockReport& blk, const DnBlocks& ctxt,
                            const DeformationParams& params) {
  const int n = ctxt.n;
  const int m = ctxt.structure.sigma.rows();
  const double c = ctxt.c;
  const auto& k_range = blk.half_integral ? ctxt.structure.Jp : ctxt.structure.J;
  double t_sum = 0;
  for (int i = 0; i < m; ++i)
    for (int k : k_range) {
      int s = ctxt.structure.sigma(i, k);
      t_sum += (params.t[size_t(i)] - params.t[size_t(s)]).squaredNorm();
    }
  double r2 = blk.r2.to_double();
  BlockValues v;
  v.i_r = 2.0 / m * (2.0 * c * r2 / n - 1.0) * blk.weight_sum.to_double() * t_sum;
  v.ii_r = 0.0;
  InvariantTriple f = invariant_basis_eval(params.H);
  double q4 = blk.alpha.to_double() * f.f1 + blk.beta.to_double() * f.f2 +
              blk.gamma.to_double() * f.f3;
  double tr_h2 = f.f2;
  v.iii_r = m * blk.weight.to_double() *
            (0.5 * c * q4 - 0.5 * (r2 * double(blk.count) / n) * tr_h2);
  return v;
}

double block_quadratic_value(const DnBlocks& blocks,
                             const DeformationParams& params) {
  const int m = blocks.structure.sigma.rows();
  double total = 0;
  for (const auto& blk : blocks.shells) {
    BlockValues v = evaluate_blocks(blk, blocks, params);
    total += (v.i_r + v.ii_r + v.iii_r) * std::exp(-blocks.c * blk.r2.to_double());
  }
  return blocks.c / m * total;
}

namespace {

std::vector<std::pair<Rat, Rat>> theta_from_stats(
    const std::vector<ExactShellStats>& stats, int n, ThetaKind p,
    const Rat& r2max, i64 grid_den) {
  std::map<Rat, Rat> coeffs;
  for (const auto& st : stats) {
    Rat v;
    if (p == ThetaKind::One)
      v = Rat(st.count);
    else
      v = st.z - Rat(3, n + 2) * st.r2 * st.r2 * Rat(st.count);
    coeffs[st.r2] += v;
  }
  std::vector<std::pair<Rat, Rat>> out;
  // fill the norm grid with explicit zeros when it is small enough
  i128 steps = i128(r2max.num()) * grid_den / r2max.den();
  if (grid_den > 0 && steps <= 4096) {
    for (i64 s = 0; s <= i64(steps); ++s) {
      Rat r2(s, grid_den);
      auto it = coeffs.find(r2);
      out.emplace_back(r2, it == coeffs.end() ? Rat(0) : it->second);
    }
    for (const auto& [r2, v] : coeffs)
      if (r2.num() * grid_den % r2.den() != 0)  // off-grid entry, keep it
        out.emplace_back(r2, v);
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  } else {
    for (const auto& [r2, v] : coeffs) out.emplace_back(r2, v);
  }
  return out;
}

}  // namespace

std::vector<std::pair<Rat, Rat>> theta_coefficients(const Lattice& L,
                                                    const RatVec& rho_ambient,
                                                    ThetaKind p,
                                                    const Rat& r2max) {
  RatVec tau = L.coords_of(rho_ambient);
  auto stats = exact_coset_shell_stats(L, tau, r2max, false, false);
  i64 qt = common_den(tau);
  i64 den = narrow_checked(i128(L.basis_den) * qt);
  return theta_from_stats(stats, L.n, p, r2max, narrow_checked(i128(den) * den));
}

std::vector<std::pair<Rat, Rat>> theta_average(const PeriodicSetRep& rep,
                                               ThetaKind p, const Rat& r2max) {
  if (!rep.exact) throw math_error("operation requires exact arithmetic");
  const int m = rep.m();
  const int n = rep.L.n;
  std::map<Rat, Rat> coeffs;
  i64 grid_den = 1;
  auto accumulate = [&](const RatVec& tau, int mult) {
    auto stats = exact_coset_shell_stats(rep.L, tau, r2max, false, false);
    i64 qt = common_den(tau);
    i64 den = narrow_checked(i128(rep.L.basis_den) * qt);
    grid_den = lcm_checked(grid_den, narrow_checked(i128(den) * den));
    for (const auto& st : stats) {
      Rat v;
      if (p == ThetaKind::One)
        v = Rat(st.count);
      else
        v = st.z - Rat(3, n + 2) * st.r2 * st.r2 * Rat(st.count);
      coeffs[st.r2] += Rat(mult, m) * v;
    }
  };
  RatVec zero(size_t(n));
  accumulate(zero, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      RatVec d(size_t(n));
      for (int k = 0; k < n; ++k)
        d[size_t(k)] = rep.tau[size_t(i)][size_t(k)] - rep.tau[size_t(j)][size_t(k)];
      accumulate(d, 2);  // (i,j) and its mirror (j,i)
    }
  std::vector<std::pair<Rat, Rat>> out;
  for (const auto& [r2, v] : coeffs) out.emplace_back(r2, v);
  return out;
}

CuspDecayReport cusp_decay_estimate(int n, const Rat& r2max) {
  if (n % 2 == 0) throw input_error("cusp decay estimate requires odd n");
  auto stats = dnplus_shell_stats(n, r2max);
  if (stats.size() < 5) throw math_error("insufficient data");
  CuspDecayReport rep;
  std::vector<std::pair<double, double>> logpts;
  for (const auto& st : stats) {
    double r = std::sqrt(st.r2.to_double());
    double r4n = st.r2.to_double() * st.r2.to_double() * double(st.count);
    double ratio = std::abs(st.a_r.to_double()) / r4n;
    rep.samples.emplace_back(r, ratio);
    if (ratio > 0) logpts.emplace_back(std::log(r), std::log(ratio));
  }
  if (logpts.empty()) {
    rep.identically_zero = true;
    return rep;
  }
  auto fit = [](const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double k = double(pts.size());
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
  };
  rep.ls_slope = fit(logpts);
  // upper envelope: points not dominated by any later (larger r) sample
  std::vector<std::pair<double, double>> env;
  double running_max = -std::numeric_limits<double>::infinity();
  for (auto it = logpts.rbegin(); it != logpts.rend(); ++it) {
    if (it->second >= running_max) {
      env.push_back(*it);
      running_max = it->second;
    }
  }
  std::reverse(env.begin(), env.end());
  rep.envelope_slope = env.size() >= 2 ? fit(env) : rep.ls_slope;
  return rep;
}

std::vector<double> default_c_grid(int n) {
  std::vector<double> grid;
  double lo = n / 8.0, hi = 4.0 * n;
  for (int k = 0; k <= 32; ++k)
    grid.push_back(lo * std::pow(hi / lo, k / 32.0));
  return grid;
}

ThresholdScan threshold_scan(int n, const std::vector<double>& c_grid,
                             const Rat& r2max, double tol) {
  if (n < 9 || n % 2 == 0)
    throw input_error("threshold scan requires odd n >= 9");
  if (c_grid.empty()) throw input_error("empty c grid");
  for (size_t i = 1; i < c_grid.size(); ++i)
    if (c_grid[i] <= c_grid[i - 1]) throw input_error("c grid must be increasing");

  ThresholdScan scan;
  scan.n = n;
  scan.r2max = r2max.to_double();
  scan.shells = dnplus_shell_stats(n, r2max);
  if (scan.shells.empty()) throw math_error("insufficient data");

  double r2_min = scan.shells.front().r2.to_double();
  for (const auto& s : scan.shells)
    r2_min = std::min(r2_min, s.r2.to_double());

  // tail control: fitted upper envelope of the cusp ratio
  CuspDecayReport cusp = cusp_decay_estimate(n, r2max);
  scan.envelope_slope = cusp.envelope_slope;
  double env_at_r2max = 0;
  {
    // envelope value extrapolated at r = sqrt(r2max)
    double best = 0;
    for (auto& [r, ratio] : cusp.samples) {
      double extr = ratio * std::pow(std::sqrt(scan.r2max) / r,
                                     std::min(cusp.envelope_slope, 0.0));
      best = std::max(best, extr);
    }
    env_at_r2max = best;
  }

  for (double c : c_grid) {
    ScanVerdict v;
    v.c = c;
    v.translational_ok = c > double(n) / (2.0 * r2_min);
    double worst1 = 0, worst2 = 0, mass1 = 0, mass2 = 0;
    Rat worst1_r2, worst2_r2;
    v.c1_total = 0;
    v.c2_total = 0;
    for (const auto& s : scan.shells) {
      BlockReport b;
      b.r2 = s.r2;
      b.count = s.count;
      b.a_r = s.a_r;
      shell_coefficients(b, n, c);
      double damp = std::exp(-c * s.r2.to_double());
      double w = s.weight.to_double();
      double term1 = w * b.coeff1 * damp;
      double term2 = w * b.coeff2 * damp;
      v.c1_total += term1;
      v.c2_total += term2;
      mass1 += std::abs(term1);
      mass2 += std::abs(term2);
      if (term1 < worst1) {
        worst1 = term1;
        worst1_r2 = s.r2;
      }
      if (term2 < worst2) {
        worst2 = term2;
        worst2_r2 = s.r2;
      }
    }
    double margin1 = tol * (1.0 + mass1), margin2 = tol * (1.0 + mass2);
    v.lattice_ok = v.c1_total > margin1 && v.c2_total > margin2;

    double b1_tail = (1.0 - double(n + 2) / (2.0 * c * scan.r2max)) -
                     double(n + 2) / double(n - 1) * env_at_r2max;
    double b2_tail = (1.0 - double(n + 2) / (2.0 * c * scan.r2max)) -
                     double(n) * (n + 2) / (2.0 * double(n - 1)) * env_at_r2max;
    v.tail_ok = cusp.envelope_slope < 0 && b1_tail > 0 && b2_tail > 0;

    if (!v.translational_ok)
      v.obstruction = "translational bound c <= n/(2 r_min^2)";
    else if (!v.lattice_ok)
      v.obstruction = "shell r2=" +
                      (v.c1_total <= margin1 ? worst1_r2 : worst2_r2).str() +
                      " dominates a negative sector coefficient";
    else if (!v.tail_ok)
      v.obstruction = "cusp envelope tail not under control";
    scan.verdicts.push_back(v);
    if (!scan.found && v.translational_ok && v.lattice_ok && v.tail_ok) {
      scan.found = true;
      scan.c_n_estimate = c;
    }
  }
  scan.certified_flag = "CERTIFIED-UP-TO-R2MAX";
  scan.tail_flag = "HEURISTIC-TAIL";
  return scan;
}

}  // namespace periodica
