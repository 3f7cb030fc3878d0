#include "periodica/energy.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "periodica/enumerate.hpp"

namespace periodica {

namespace {

// rounding-model constants: compensated Gaussian path vs plain per-point path
constexpr double kRoundGauss = 4e-14;
constexpr double kRoundHess = 1e-12;

Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  return es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

struct PairGroup {
  int i = 0, j = 0;        // i == j encodes the diagonal group
  double mult = 1;         // number of ordered pairs represented
  Eigen::VectorXd tau;     // offset coordinates for enumeration
  bool exclude_zero = false;
};

// Unordered pair decomposition of the double coset sum: the diagonal group
// carries all (i,i) pairs; each off-diagonal group represents (i,j) and
// (j,i), whose coset is the negation of the stored one.
std::vector<PairGroup> pair_groups(const PeriodicSetRep& rep,
                                   const DeformationParams* params) {
  const int n = rep.L.n;
  const int m = rep.m();
  std::vector<Eigen::VectorXd> tau_f(size_t(m));
  for (int i = 0; i < m; ++i) {
    if (rep.exact) {
      tau_f[size_t(i)].resize(n);
      for (int d = 0; d < n; ++d)
        tau_f[size_t(i)][d] = rep.tau[size_t(i)][size_t(d)].to_double();
    } else {
      tau_f[size_t(i)] = rep.L.coords_of_f(rep.trans[size_t(i)]);
    }
  }
  std::vector<PairGroup> groups;
  PairGroup diag;
  diag.i = diag.j = 0;
  diag.mult = m;
  diag.tau = Eigen::VectorXd::Zero(n);
  diag.exclude_zero = true;
  groups.push_back(diag);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      PairGroup g;
      g.i = i;
      g.j = j;
      g.mult = 2;
      g.tau = tau_f[size_t(i)] - tau_f[size_t(j)];
      if (params)
        g.tau += rep.L.coords_of_f(params->t[size_t(i)] - params->t[size_t(j)]);
      groups.push_back(g);
    }
  return groups;
}

std::vector<std::int32_t> zero_point(int n) {
  return std::vector<std::int32_t>(size_t(n), 0);
}

double binom(int n, int k) {
  double v = 1;
  for (int i = 0; i < k; ++i) v = v * double(n - i) / double(i + 1);
  return v;
}

TailModel tail_model_for_gram(const Eigen::MatrixXd& gram) {
  TailModel tm;
  tm.n = int(gram.rows());
  tm.vol = std::sqrt(gram.determinant());
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw math_error("degenerate lattice");
  Eigen::VectorXd d = Eigen::MatrixXd(llt.matrixU()).diagonal();
  tm.mu = 0.5 * d.norm();
  return tm;
}

}  // namespace

DeformationParams DeformationParams::zero(int n, int m) {
  DeformationParams p;
  p.H = Eigen::MatrixXd::Zero(n, n);
  p.t.assign(size_t(m), Eigen::VectorXd::Zero(n));
  return p;
}

void DeformationParams::validate(int n, int m) const {
  if (H.rows() != n || H.cols() != n)
    throw input_error("deformation matrix has wrong dimensions");
  if (int(t.size()) != m)
    throw input_error("deformation has wrong number of translation vectors");
  double scale = std::max(1.0, H.norm());
  if ((H - H.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * scale)
    throw input_error("deformation matrix must be symmetric");
  if (std::abs(H.trace()) > 1e-12 * scale)
    throw input_error("deformation matrix must be trace-zero");
  for (const auto& v : t)
    if (v.size() != n) throw input_error("translation perturbation has wrong dimension");
}

TailModel TailModel::for_lattice(const Lattice& L) {
  return tail_model_for_gram(L.gram);
}

double TailModel::theta_bound(double cprime) const {
  double surface = 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
  double val = std::pow(mu, n) / n;
  for (int k = 0; k < n; ++k)
    val += binom(n - 1, k) * std::pow(mu, n - 1 - k) * 0.5 *
           std::tgamma(0.5 * (k + 1)) * std::pow(cprime, -0.5 * (k + 1));
  return surface / vol * val;
}

double TailModel::tail(double r2, double c, int w2pow) const {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 60; ++j) {
    double f = std::exp(std::log(1e-4) +
                        j * (std::log(0.995) - std::log(1e-4)) / 59.0);
    double cp = c * f;
    if ((c - cp) * r2 < double(w2pow)) continue;  // monotone past r2 only then
    double cand = std::pow(r2, w2pow) * std::exp(-(c - cp) * r2) * theta_bound(cp);
    best = std::min(best, cand);
  }
  return best;
}

double TailModel::choose_r2(double c, double tol, int w2pow) const {
  if (!(c > 0)) throw math_error("divergent energy");
  if (!(tol > 0)) throw input_error("tolerance must be positive");
  double r2 = 1.0;
  while (tail(r2, c, w2pow) > tol) {
    r2 *= 1.15;
    if (r2 > 1e7)
      throw math_error("tolerance unreachable: truncation radius overflow");
  }
  double lo = r2 / 1.15, hi = r2;
  for (int it = 0; it < 40; ++it) {
    double mid = 0.5 * (lo + hi);
    if (tail(mid, c, w2pow) <= tol)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

EnergyReport energy(const PeriodicSetRep& rep, double c, double tol,
                    bool want_shells) {
  if (!(c > 0)) throw math_error("divergent energy");
  if (!(tol > 0)) throw input_error("tolerance must be positive");
  const int m = rep.m();
  TailModel tm = TailModel::for_lattice(rep.L);
  double r2 = tm.choose_r2(c, tol / m, 0);
  EnumContext ctx = rep.L.enum_context();
  auto groups = pair_groups(rep, nullptr);
  auto zp = zero_point(rep.L.n);

  EnergyReport rep_out;
  rep_out.c = c;
  rep_out.r2_trunc = r2;
  rep_out.tail = m * tm.tail(r2, c, 0);
  double total = 0;
  for (const auto& g : groups) {
    GaussMoments mm = gauss_ball_moments(ctx, g.tau, r2, c, false,
                                         g.exclude_zero ? zp.data() : nullptr);
    total += g.mult * mm.s0;
  }
  rep_out.value = total / m;

  if (want_shells) {
    std::map<i64, double> bins;
    for (const auto& g : groups) {
      for_each_ball_point(
          ctx, g.tau, r2,
          [&](const std::int32_t*, double q) {
            bins[llround(q / kEpsShell)] += g.mult * std::exp(-c * q) / m;
          },
          g.exclude_zero ? zp.data() : nullptr);
    }
    for (const auto& [k, v] : bins)
      rep_out.shell_contributions.emplace_back(double(k) * kEpsShell, v);
  }
  return rep_out;
}

EnergyValue deformed_energy(const PeriodicSetRep& rep, double c,
                            const DeformationParams& params, double tol) {
  if (!(c > 0)) throw math_error("divergent energy");
  if (!(tol > 0)) throw input_error("tolerance must be positive");
  params.validate(rep.L.n, rep.m());
  if (params.H.norm() > 1.0 + 1e-12)
    throw input_error("deformation too large for the exponential parameterization");
  const int m = rep.m();
  Eigen::MatrixXd g = sym_exp(params.H);
  Eigen::MatrixXd gram_def = rep.L.basis.transpose() * g * rep.L.basis;
  TailModel tm = tail_model_for_gram(gram_def);
  double r2 = tm.choose_r2(c, tol / m, 0);
  EnumContext ctx = make_enum_context(gram_def);
  auto groups = pair_groups(rep, &params);
  auto zp = zero_point(rep.L.n);

  EnergyValue out;
  out.r2_trunc = r2;
  out.tail = m * tm.tail(r2, c, 0);
  double total = 0;
  for (const auto& grp : groups) {
    GaussMoments mm = gauss_ball_moments(ctx, grp.tau, r2, c, false,
                                         grp.exclude_zero ? zp.data() : nullptr);
    total += grp.mult * mm.s0;
  }
  out.value = total / m;
  return out;
}

GradientReport gradient(const PeriodicSetRep& rep, double c, double tol) {
  if (!(c > 0)) throw math_error("divergent energy");
  const int n = rep.L.n;
  const int m = rep.m();
  TailModel tm = TailModel::for_lattice(rep.L);
  double r2 = tm.choose_r2(c, tol / (c * m), 1);
  EnumContext ctx = rep.L.enum_context();
  auto groups = pair_groups(rep, nullptr);
  auto zp = zero_point(n);

  Eigen::MatrixXd m2_tot = Eigen::MatrixXd::Zero(n, n);
  GradientReport out;
  out.r2_trunc = r2;
  out.g_t.assign(size_t(m), Eigen::VectorXd::Zero(n));
  double abs_e = 0, abs_qe = 0;
  for (const auto& grp : groups) {
    GaussMoments mm = gauss_ball_moments(ctx, grp.tau, r2, c, true,
                                         grp.exclude_zero ? zp.data() : nullptr);
    abs_e += grp.mult * mm.abs_e;
    abs_qe += grp.mult * mm.abs_qe;
    m2_tot += grp.mult * rep.L.basis * mm.s2 * rep.L.basis.transpose();
    if (grp.i != grp.j) {
      Eigen::VectorXd v = rep.L.basis * mm.s1;
      out.g_t[size_t(grp.i)] -= (4.0 * c / m) * v;
      out.g_t[size_t(grp.j)] += (4.0 * c / m) * v;
    }
  }
  out.G_H = -(c / m) * (m2_tot - (m2_tot.trace() / n) * Eigen::MatrixXd::Identity(n, n));

  double tail0 = tm.tail(r2, c, 0), tail1 = tm.tail(r2, c, 1);
  double entry_h = (c / m) * (m * double(m)) * tail1 + (c / m) * kRoundGauss * abs_qe;
  out.bound_H = n * entry_h;
  double entry_t = (4.0 * c / m) * (0.5 * m * (tail0 + tail1)) +
                   (4.0 * c / m) * kRoundGauss * 0.5 * (abs_e + abs_qe);
  out.bound_t = std::sqrt(double(m) * n) * entry_t;
  return out;
}

std::vector<Eigen::MatrixXd> tracezero_basis(int n) {
  std::vector<Eigen::MatrixXd> basis;
  for (int k = 1; k < n; ++k) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    double s = 1.0 / std::sqrt(double(k) * (k + 1));
    for (int i = 0; i < k; ++i) e(i, i) = s;
    e(k, k) = -double(k) * s;
    basis.push_back(e);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
      e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
      basis.push_back(e);
    }
  return basis;
}

Eigen::VectorXd pack_params(int n, int m, const DeformationParams& params) {
  auto basis = tracezero_basis(n);
  const int dim_h = int(basis.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_h + m * n);
  for (int a = 0; a < dim_h; ++a)
    x[a] = (basis[size_t(a)].array() * params.H.array()).sum();
  for (int k = 0; k < m; ++k)
    for (int d = 0; d < n; ++d) x[dim_h + k * n + d] = params.t[size_t(k)][d];
  return x;
}

namespace {

// per-point moment accumulation up to fourth order, in lattice coordinates
struct HessMoments {
  int n = 0;
  double s0 = 0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
  std::vector<double> s3;  // packed i<=j<=k
  std::vector<double> s4;  // packed i<=j<=k<=l
  double abs_e = 0, abs_qe = 0, abs_q2e = 0;

  static int pack3(int i, int j, int k) {
    return ((k * (k + 1) * (k + 2)) / 6) + ((j * (j + 1)) / 2) + i;
  }
  static int pack4(int i, int j, int k, int l) {
    return ((l * (l + 1) * (l + 2) * (l + 3)) / 24) +
           ((k * (k + 1) * (k + 2)) / 6) + ((j * (j + 1)) / 2) + i;
  }

  void init(int dim) {
    n = dim;
    s1 = Eigen::VectorXd::Zero(dim);
    s2 = Eigen::MatrixXd::Zero(dim, dim);
    s3.assign(size_t(pack3(dim - 1, dim - 1, dim - 1)) + 1, 0.0);
    s4.assign(size_t(pack4(dim - 1, dim - 1, dim - 1, dim - 1)) + 1, 0.0);
  }
  void add(const HessMoments& o) {
    s0 += o.s0;
    s1 += o.s1;
    s2 += o.s2;
    for (size_t i = 0; i < s3.size(); ++i) s3[i] += o.s3[i];
    for (size_t i = 0; i < s4.size(); ++i) s4[i] += o.s4[i];
    abs_e += o.abs_e;
    abs_qe += o.abs_qe;
    abs_q2e += o.abs_q2e;
  }
};

struct HessAccum {
  HessMoments mom;
  Eigen::VectorXd tau;
  double c = 0;
  std::vector<double> y;

  void point(const std::int32_t* z, double q) {
    const int n = mom.n;
    double g = std::exp(-c * q);
    if (g == 0) return;
    mom.s0 += g;
    mom.abs_e += g;
    mom.abs_qe += q * g;
    mom.abs_q2e += q * q * g;
    for (int i = 0; i < n; ++i) y[size_t(i)] = double(z[i]) + tau[i];
    for (int i = 0; i < n; ++i) mom.s1[i] += y[size_t(i)] * g;
    for (int j = 0; j < n; ++j) {
      double yjg = y[size_t(j)] * g;
      for (int i = 0; i <= j; ++i) mom.s2(j, i) += y[size_t(i)] * yjg;
    }
    double* p3 = mom.s3.data();
    double* p4 = mom.s4.data();
    for (int k = 0; k < n; ++k) {
      double yk = y[size_t(k)];
      for (int j = 0; j <= k; ++j) {
        double yjk_g = y[size_t(j)] * yk * g;
        double* row3 = p3 + HessMoments::pack3(0, j, k);
        for (int i = 0; i <= j; ++i) row3[i] += y[size_t(i)] * yjk_g;
      }
    }
    for (int l = 0; l < n; ++l) {
      double yl = y[size_t(l)];
      for (int k = 0; k <= l; ++k) {
        double ykl = y[size_t(k)] * yl;
        for (int j = 0; j <= k; ++j) {
          double yjkl_g = y[size_t(j)] * ykl * g;
          double* row4 = p4 + HessMoments::pack4(0, j, k, l);
          for (int i = 0; i <= j; ++i) row4[i] += y[size_t(i)] * yjkl_g;
        }
      }
    }
  }
};

HessMoments hess_ball_moments(const EnumContext& ctx, const Eigen::VectorXd& tau,
                              double r2, double c, bool exclude_zero) {
  auto zp = zero_point(ctx.n);
  HessAccum proto;
  proto.mom.init(ctx.n);
  proto.tau = tau;
  proto.c = c;
  proto.y.assign(size_t(ctx.n), 0.0);
  std::vector<HessAccum> accs;
  parallel_ball_scan(
      ctx, tau, r2, proto, accs,
      [](HessAccum& a, const std::int32_t* z, double q) { a.point(z, q); },
      exclude_zero ? zp.data() : nullptr);
  HessMoments total;
  total.init(ctx.n);
  for (const auto& a : accs) total.add(a.mom);
  // mirror the lower triangle
  for (int j = 0; j < ctx.n; ++j)
    for (int i = 0; i < j; ++i) total.s2(i, j) = total.s2(j, i);
  return total;
}

double hess_err_tail(const TailModel& tm, double r2, double c, int m) {
  double t0 = tm.tail(r2, c, 0), t1 = tm.tail(r2, c, 1), t2 = tm.tail(r2, c, 2);
  return c * m * ((1.5 * c + 1.0) * t2 + (3.0 * c + 3.0) * t1 + 3.0 * t0);
}

}  // namespace

HessianForm hessian(const PeriodicSetRep& rep, double c, double tol,
                    double r2_override) {
  if (!(c > 0)) throw math_error("divergent energy");
  const int n = rep.L.n;
  const int m = rep.m();
  TailModel tm = TailModel::for_lattice(rep.L);
  double r2;
  if (r2_override > 0) {
    r2 = r2_override;
  } else {
    r2 = 1.0;
    while (hess_err_tail(tm, r2, c, m) > tol) {
      r2 *= 1.15;
      if (r2 > 1e7)
        throw math_error("tolerance unreachable: truncation radius overflow");
    }
  }
  EnumContext ctx = rep.L.enum_context();
  auto groups = pair_groups(rep, nullptr);

  std::vector<HessMoments> moments;
  moments.reserve(groups.size());
  for (const auto& grp : groups)
    moments.push_back(hess_ball_moments(ctx, grp.tau, r2, c, grp.exclude_zero));

  auto basis = tracezero_basis(n);
  const int dim_h = int(basis.size());
  const int dim = dim_h + m * n;
  const Eigen::MatrixXd& b = rep.L.basis;
  Eigen::MatrixXd gram_inv = rep.L.gram.inverse();

  // coordinate forms of the basis elements
  std::vector<Eigen::MatrixXd> ebar(basis.size());
  for (size_t a = 0; a < basis.size(); ++a)
    ebar[a] = b.transpose() * basis[a] * b;

  // global even moments
  Eigen::MatrixXd s2g = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> s4g(moments[0].s4.size(), 0.0);
  double abs_e = 0, abs_qe = 0, abs_q2e = 0;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    s2g += groups[gi].mult * moments[gi].s2;
    for (size_t k = 0; k < s4g.size(); ++k)
      s4g[k] += groups[gi].mult * moments[gi].s4[k];
    abs_e += groups[gi].mult * moments[gi].abs_e;
    abs_qe += groups[gi].mult * moments[gi].abs_qe;
    abs_q2e += groups[gi].mult * moments[gi].abs_q2e;
  }

  // dense fourth-moment tensor
  std::vector<double> t4(size_t(n) * n * n * n);
  {
    auto at = [&](int a1, int a2, int a3, int a4) -> double& {
      return t4[size_t(((a1 * n + a2) * n + a3)) * size_t(n) + size_t(a4)];
    };
    for (int a1 = 0; a1 < n; ++a1)
      for (int a2 = 0; a2 < n; ++a2)
        for (int a3 = 0; a3 < n; ++a3)
          for (int a4 = 0; a4 < n; ++a4) {
            int idx[4] = {a1, a2, a3, a4};
            std::sort(idx, idx + 4);
            at(a1, a2, a3, a4) =
                s4g[size_t(HessMoments::pack4(idx[0], idx[1], idx[2], idx[3]))];
          }
  }

  HessianForm form;
  form.n = n;
  form.m = m;
  form.dim = dim;
  form.r2_trunc = r2;
  form.Q = Eigen::MatrixXd::Zero(dim, dim);

  // H-H block: (c/m) [ (c/2) <T4, Ea x Eb> - 1/2 <S2, sym(Ea A^{-1} Eb)> ]
  std::vector<Eigen::MatrixXd> va(basis.size());
  for (size_t a = 0; a < basis.size(); ++a) {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
    for (int c1 = 0; c1 < n; ++c1)
      for (int c2 = 0; c2 < n; ++c2) {
        double acc = 0;
        for (int e1 = 0; e1 < n; ++e1)
          for (int e2 = 0; e2 < n; ++e2)
            acc += t4[size_t(((e1 * n + e2) * n + c1)) * size_t(n) + size_t(c2)] *
                   ebar[a](e1, e2);
        v(c1, c2) = acc;
      }
    va[a] = v;
  }
  for (int a = 0; a < dim_h; ++a)
    for (int bb = a; bb < dim_h; ++bb) {
      double term4 = (va[size_t(a)].array() * ebar[size_t(bb)].array()).sum();
      Eigen::MatrixXd k =
          0.5 * (ebar[size_t(a)] * gram_inv * ebar[size_t(bb)] +
                 ebar[size_t(bb)] * gram_inv * ebar[size_t(a)]);
      double term2 = (s2g.array() * k.array()).sum();
      double v = (c / m) * (0.5 * c * term4 - 0.5 * term2);
      form.Q(a, bb) = v;
      form.Q(bb, a) = v;
    }

  // translation and cross blocks from the off-diagonal pair groups
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& grp = groups[gi];
    if (grp.i == grp.j) continue;
    const HessMoments& mm = moments[gi];
    Eigen::MatrixXd m2_amb = b * mm.s2 * b.transpose();
    Eigen::VectorXd m1_amb = b * mm.s1;

    // t-t: bilinear 2c (w.u)(w.v) - u.v summed over both orderings
    Eigen::MatrixXd tt = (c / m) * grp.mult *
                         (2.0 * c * m2_amb - mm.s0 * Eigen::MatrixXd::Identity(n, n));
    int oi = dim_h + grp.i * n;
    int oj = dim_h + grp.j * n;
    form.Q.block(oi, oi, n, n) += tt;
    form.Q.block(oj, oj, n, n) += tt;
    form.Q.block(oi, oj, n, n) -= tt;
    form.Q.block(oj, oi, n, n) -= tt;

    // cross: -2 w^T H u + 2c (w.u) H[w]
    // dense third moment tensor of this group
    std::vector<double> t3(size_t(n) * n * n);
    for (int a1 = 0; a1 < n; ++a1)
      for (int a2 = 0; a2 < n; ++a2)
        for (int a3 = 0; a3 < n; ++a3) {
          int idx[3] = {a1, a2, a3};
          std::sort(idx, idx + 3);
          t3[size_t((a1 * n + a2)) * size_t(n) + size_t(a3)] =
              mm.s3[size_t(HessMoments::pack3(idx[0], idx[1], idx[2]))];
        }
    for (int a = 0; a < dim_h; ++a) {
      // w3[e] = sum_{f,g} T3[e,f,g] Ebar_a(f,g); amb3 = B w3
      Eigen::VectorXd w3 = Eigen::VectorXd::Zero(n);
      for (int e = 0; e < n; ++e) {
        double acc = 0;
        for (int f = 0; f < n; ++f)
          for (int g2 = 0; g2 < n; ++g2)
            acc += t3[size_t((e * n + f)) * size_t(n) + size_t(g2)] *
                   ebar[size_t(a)](f, g2);
        w3[e] = acc;
      }
      Eigen::VectorXd amb3 = b * w3;
      Eigen::VectorXd eam = basis[size_t(a)] * m1_amb;
      for (int d = 0; d < n; ++d) {
        double coef = (c / m) * grp.mult * (-2.0 * eam[d] + 2.0 * c * amb3[d]);
        // half on each off-diagonal entry of the symmetric form
        form.Q(a, oi + d) += 0.5 * coef;
        form.Q(oi + d, a) += 0.5 * coef;
        form.Q(a, oj + d) -= 0.5 * coef;
        form.Q(oj + d, a) -= 0.5 * coef;
      }
    }
  }

  // gauge: simultaneous translation of all cosets
  form.gauge = Eigen::MatrixXd::Zero(dim, n);
  for (int d = 0; d < n; ++d)
    for (int k = 0; k < m; ++k) form.gauge(dim_h + k * n + d, d) = 1.0 / std::sqrt(m);

  double round_mass = c * ((1.5 * c + 1.0) * abs_q2e + (3.0 * c + 3.0) * abs_qe +
                           3.0 * abs_e) / m;
  form.err_bound = hess_err_tail(tm, r2, c, m) + kRoundHess * round_mass;
  return form;
}

LocalMinReport certify_local_min(const PeriodicSetRep& rep, double c, double tol,
                                 double gap, bool allow_non_critical) {
  GradientReport g = gradient(rep, c, tol);
  bool critical = g.norm_H() <= g.bound_H && g.norm_t() <= g.bound_t;
  if (!critical && !allow_non_critical)
    throw math_error("hessian certification requested at a non-critical point");

  HessianForm form = hessian(rep, c, tol);
  const int n = form.n, m = form.m, dim = form.dim;
  const int dim_h = dim - m * n;

  LocalMinReport rep_out;
  rep_out.form = form;
  rep_out.gap = gap > 0 ? gap : 1e-8 * form.Q.cwiseAbs().maxCoeff();
  rep_out.err_bound = form.err_bound * dim;

  double gres = 0;
  for (int a = 0; a < n; ++a)
    gres = std::max(gres, (form.Q * form.gauge.col(a)).norm());
  rep_out.gauge_residual = gres;

  // orthonormal complement of the gauge: full H block plus the
  // zero-mean translation combinations
  const int cdim = dim - n;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim, cdim);
  for (int a = 0; a < dim_h; ++a) p(a, a) = 1.0;
  int col = dim_h;
  for (int k = 1; k < m; ++k) {
    double s = 1.0 / std::sqrt(double(k) * (k + 1));
    for (int d = 0; d < n; ++d, ++col) {
      for (int j = 0; j < k; ++j) p(dim_h + j * n + d, col) = s;
      p(dim_h + k * n + d, col) = -double(k) * s;
    }
  }
  rep_out.complement_dim = cdim;

  Eigen::MatrixXd qc = p.transpose() * form.Q * p;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qc);
  rep_out.spectrum = es.eigenvalues();
  rep_out.lambda_min = es.eigenvalues()[0];

  double thr = rep_out.gap + rep_out.err_bound;
  int near_zero = 0;
  for (int i = 0; i < rep_out.spectrum.size(); ++i)
    if (std::abs(rep_out.spectrum[i]) <= thr) ++near_zero;
  rep_out.near_zero_modes = near_zero;

  if (rep_out.lambda_min > thr)
    rep_out.verdict = "POSITIVE";
  else if (rep_out.lambda_min < -thr)
    rep_out.verdict = "NEGATIVE";
  else
    rep_out.verdict = "INCONCLUSIVE";
  return rep_out;
}

ReorderedValue reordered_energy_2periodic(const PeriodicSetRep& rep,
                                          const TwoPeriodicStructure& st,
                                          double c,
                                          const DeformationParams& params,
                                          double tol) {
  if (!(c > 0)) throw math_error("divergent energy");
  params.validate(rep.L.n, rep.m());
  const int m = rep.m();
  if (st.sigma.rows() != m) throw input_error("structure does not match the representation");
  if (int(st.J.size() + st.Jp.size()) != m) throw math_error("not 2-periodic");

  Eigen::MatrixXd g = sym_exp(params.H);
  Eigen::MatrixXd gram_def =
      st.lmax.basis.transpose() * g * st.lmax.basis;
  TailModel tm = tail_model_for_gram(gram_def);
  // m*m/2 enumerations over L_max cosets in total
  double r2 = tm.choose_r2(c, tol / 2.0, 0);
  EnumContext ctx = make_enum_context(gram_def);
  auto zp = zero_point(rep.L.n);

  auto coset_sum = [&](const Eigen::VectorXd& ambient_offset, bool exclude) {
    Eigen::VectorXd tau = st.lmax.coords_of_f(ambient_offset);
    GaussMoments mm =
        gauss_ball_moments(ctx, tau, r2, c, false, exclude ? zp.data() : nullptr);
    return mm.s0;
  };

  double total = 0;
  // part over L_max \ {0}: all i, k in J
  for (int i = 0; i < m; ++i)
    for (int k : st.J) {
      int s = st.sigma(i, k);
      total += coset_sum(params.t[size_t(i)] - params.t[size_t(s)], true);
    }
  // part over -(v + L_max): i in J, k in J'
  for (int i : st.J)
    for (int k : st.Jp) {
      int s = st.sigma(i, k);
      total += coset_sum(-st.v_ambient + params.t[size_t(i)] - params.t[size_t(s)],
                         false);
    }
  // part over (v + L_max): i in J', k in J'
  for (int i : st.Jp)
    for (int k : st.Jp) {
      int s = st.sigma(i, k);
      total += coset_sum(st.v_ambient + params.t[size_t(i)] - params.t[size_t(s)],
                         false);
    }

  ReorderedValue out;
  out.value = 2.0 / (double(m) * m) * total;
  out.tail = 2.0 * tm.tail(r2, c, 0);
  return out;
}

}  // namespace periodica
