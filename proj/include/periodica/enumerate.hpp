#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "periodica/exact.hpp"
#include "periodica/parallel.hpp"

namespace periodica {

// Branch-and-bound enumeration of lattice cosets B(z+tau) inside a ball,
// driven by the Cholesky factor of the gram matrix (Fincke-Pohst bounds).
// Points are visited as maximal "runs" along the innermost coordinate so
// that Gaussian sums can use multiplicative recurrences.

struct EnumContext {
  int n = 0;
  Eigen::MatrixXd R;  // upper triangular, gram = R^T R
};

inline EnumContext make_enum_context(const Eigen::MatrixXd& gram) {
  EnumContext ctx;
  ctx.n = int(gram.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw math_error("degenerate lattice");
  ctx.R = llt.matrixU();
  if (!(ctx.R.diagonal().minCoeff() > 0)) throw math_error("degenerate lattice");
  return ctx;
}

// Completeness slack added to the squared radius before pruning; candidates
// past the true radius are filtered by the caller (exactly on the exact path,
// by shell binning on the float path).
inline double enum_margin(double r2) { return 1e-9 * (1.0 + r2); }

namespace detail {

// RunFn(const int32_t* z, int count, double q0, double q1, double q2, int skip):
// points z + t*e0, t = 0..count-1, squared norm q(t) = q0 + q1 t + q2 t^2;
// skip >= 0 flags the index of an excluded lattice point.
template <class RunFn>
class RunEnumerator {
 public:
  RunEnumerator(const EnumContext& ctx, const Eigen::VectorXd& tau, double r2,
                const std::int32_t* exclude, RunFn& fn)
      : n_(ctx.n),
        R_(ctx.R),
        tau_(tau),
        budget0_(r2 + enum_margin(r2)),
        exclude_(exclude),
        fn_(fn) {
    z_.assign(size_t(n_), 0);
    partial_.assign(size_t(n_) * size_t(n_), 0.0);
  }

  void top_range(std::int64_t& lo, std::int64_t& hi) const {
    interval(n_ - 1, budget0_, 0.0, lo, hi);
  }

  void run_all() {
    if (n_ == 1) {
      emit_run(budget0_, 0.0, exclude_ != nullptr);
      return;
    }
    std::int64_t lo, hi;
    top_range(lo, hi);
    for (std::int64_t zt = lo; zt <= hi; ++zt) run_top(zt);
  }

  // subtree with the outermost coordinate fixed (parallel driver); n >= 2
  void run_top(std::int64_t ztop) {
    const int l = n_ - 1;
    double v = R_(l, l) * (double(ztop) + tau_[l]);
    double q = v * v;
    if (q > budget0_) return;
    z_[size_t(l)] = std::int32_t(ztop);
    bool match = exclude_ != nullptr && exclude_[l] == ztop;
    for (int i = 0; i < l; ++i)
      partial_at(l - 1, i) = R_(i, l) * (double(ztop) + tau_[l]);
    descend(l - 1, budget0_ - q, q, match);
  }

 private:
  double& partial_at(int level, int i) {
    return partial_[size_t(level) * size_t(n_) + size_t(i)];
  }

  void interval(int l, double budget, double shift, std::int64_t& lo,
                std::int64_t& hi) const {
    double rll = R_(l, l);
    double c = -shift / rll - tau_[l];
    double s = std::sqrt(std::max(0.0, budget)) / rll;
    lo = std::int64_t(std::ceil(c - s));
    hi = std::int64_t(std::floor(c + s));
  }

  void descend(int l, double budget, double acc, bool match) {
    if (l == 0) {
      emit_run(budget, acc, match);
      return;
    }
    std::int64_t lo, hi;
    interval(l, budget, partial_at(l, l), lo, hi);
    for (std::int64_t zl = lo; zl <= hi; ++zl) {
      double v = R_(l, l) * (double(zl) + tau_[l]) + partial_at(l, l);
      double q = v * v;
      if (q > budget) continue;
      z_[size_t(l)] = std::int32_t(zl);
      for (int i = 0; i < l; ++i)
        partial_at(l - 1, i) = partial_at(l, i) + R_(i, l) * (double(zl) + tau_[l]);
      descend(l - 1, budget - q, acc + q,
              match && exclude_ != nullptr && exclude_[l] == zl);
    }
  }

  void emit_run(double budget, double acc, bool match) {
    std::int64_t lo, hi;
    double shift = (n_ == 1) ? 0.0 : partial_at(0, 0);
    interval(0, budget, shift, lo, hi);
    if (lo > hi) return;
    double a = R_(0, 0);
    double b = a * (double(lo) + tau_[0]) + shift;
    double q0 = acc + b * b;
    double q1 = 2.0 * a * b;
    double q2 = a * a;
    int skip = -1;
    if (match && exclude_[0] >= lo && exclude_[0] <= hi)
      skip = int(exclude_[0] - lo);
    z_[0] = std::int32_t(lo);
    fn_(z_.data(), int(hi - lo + 1), q0, q1, q2, skip);
  }

  int n_;
  const Eigen::MatrixXd& R_;
  Eigen::VectorXd tau_;
  double budget0_;
  const std::int32_t* exclude_;
  RunFn& fn_;
  std::vector<std::int32_t> z_;
  std::vector<double> partial_;
};

}  // namespace detail

// Serial run-level traversal.
template <class RunFn>
void for_each_run(const EnumContext& ctx, const Eigen::VectorXd& tau, double r2,
                  RunFn&& fn, const std::int32_t* exclude = nullptr) {
  detail::RunEnumerator<RunFn> e(ctx, tau, r2, exclude, fn);
  e.run_all();
}

// Serial per-point traversal; f(const int32_t* z, double norm2). The
// pointed-to z has its first entry advanced across the run.
template <class PointFn>
void for_each_ball_point(const EnumContext& ctx, const Eigen::VectorXd& tau,
                         double r2, PointFn&& f,
                         const std::int32_t* exclude = nullptr) {
  std::vector<std::int32_t> zbuf(size_t(ctx.n));
  auto run = [&](const std::int32_t* z, int count, double q0, double q1,
                 double q2, int skip) {
    for (int i = 0; i < ctx.n; ++i) zbuf[size_t(i)] = z[i];
    for (int t = 0; t < count; ++t) {
      if (t != skip) {
        double td = double(t);
        f(zbuf.data(), q0 + td * (q1 + q2 * td));
      }
      ++zbuf[0];
    }
  };
  for_each_run(ctx, tau, r2, run, exclude);
}

// Parallel scan: accs is resized to the worker count (each worker owns one
// slot) and merged by the caller in index order afterwards.
// PointFn(Acc&, const int32_t* z, double norm2).
template <class Acc, class PointFn>
void parallel_ball_scan(const EnumContext& ctx, const Eigen::VectorXd& tau,
                        double r2, const Acc& proto, std::vector<Acc>& accs,
                        PointFn&& f, const std::int32_t* exclude = nullptr) {
  std::int64_t lo = 0, hi = -1;
  if (ctx.n >= 2) {
    struct Nop {
      void operator()(const std::int32_t*, int, double, double, double, int) {}
    } nop;
    detail::RunEnumerator<Nop> probe(ctx, tau, r2, exclude, nop);
    probe.top_range(lo, hi);
  }
  std::int64_t ntasks = hi - lo + 1;
  int nt = effective_threads();
  if (ctx.n == 1 || nt <= 1 || ntasks <= 1) {
    accs.assign(1, proto);
    for_each_ball_point(ctx, tau, r2,
                        [&](const std::int32_t* z, double q) { f(accs[0], z, q); },
                        exclude);
    return;
  }
  if (std::int64_t(nt) > ntasks) nt = int(ntasks);
  accs.assign(size_t(nt), proto);
  // worker w handles tasks == w (mod nt), matching parallel_for's split, so
  // each slot is touched by exactly one worker
  parallel_for(ntasks, [&](std::int64_t task) {
    Acc& acc = accs[size_t(task % nt)];
    std::vector<std::int32_t> zbuf(size_t(ctx.n));
    auto run = [&](const std::int32_t* z, int count, double q0, double q1,
                   double q2, int skip) {
      for (int i = 0; i < ctx.n; ++i) zbuf[size_t(i)] = z[i];
      for (int t = 0; t < count; ++t) {
        if (t != skip) {
          double td = double(t);
          f(acc, zbuf.data(), q0 + td * (q1 + q2 * td));
        }
        ++zbuf[0];
      }
    };
    detail::RunEnumerator<decltype(run)> e(ctx, tau, r2, exclude, run);
    e.run_top(lo + task);
  });
}

// ---------------------------------------------------------------------------
// Gaussian moment accumulation: S0 = sum e^{-c q}, S1 = sum y e^{-c q},
// S2 = sum y y^T e^{-c q} over the coset ball, y = z + tau in lattice
// coordinates, q = |B y|^2. Inner runs use the multiplicative Gaussian
// recurrence re-anchored every few steps; per-run subtotals are folded with
// Neumaier compensation so the final rounding error is a small multiple of
// machine epsilon times the absolute mass.

struct NeuAcc {
  double s = 0, comp = 0;
  inline void add(double x) {
    double t = s + x;
    comp += (std::abs(s) >= std::abs(x)) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  double get() const { return s + comp; }
};

struct GaussMoments {
  int n = 0;
  double s0 = 0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
  double abs_e = 0;    // sum e (all terms positive)
  double abs_qe = 0;   // sum q e
  std::int64_t npoints = 0;

  void init(int dim) {
    n = dim;
    s1 = Eigen::VectorXd::Zero(dim);
    s2 = Eigen::MatrixXd::Zero(dim, dim);
  }
  void add(const GaussMoments& o) {
    s0 += o.s0;
    s1 += o.s1;
    s2 += o.s2;
    abs_e += o.abs_e;
    abs_qe += o.abs_qe;
    npoints += o.npoints;
  }
  void negate_odd() { s1 = -s1; }  // moments of the negated coset
  void scale(double f) {
    s0 *= f;
    s1 *= f;
    s2 *= f;
    abs_e *= f;
    abs_qe *= f;
  }
};

namespace detail {

constexpr int kGaussChunk = 32;

// Gaussian power sums over one run: S0 = sum g, St = sum t g, St2 = sum t^2 g
// for g(t) = exp(-c(q0 + q1 t + q2 t^2)), t = 0..count-1 except skip.
inline void gauss_run_sums(int count, double q0, double q1, double q2, int skip,
                           double c, double vstep, double& S0, double& St,
                           double& St2) {
  S0 = St = St2 = 0;
  int t = 0;
  while (t < count) {
    int chunk = std::min(kGaussChunk, count - t);
    double td = double(t);
    double g = std::exp(-c * (q0 + td * (q1 + q2 * td)));
    double u = std::exp(-c * (q1 + q2 * (2.0 * td + 1.0)));
    for (int k = 0; k < chunk; ++k) {
      S0 += g;
      double tg = td * g;
      St += tg;
      St2 += td * tg;
      g *= u;
      u *= vstep;
      td += 1.0;
    }
    t += chunk;
  }
  if (skip >= 0) {
    double td = double(skip);
    double g = std::exp(-c * (q0 + td * (q1 + q2 * td)));
    S0 -= g;
    St -= td * g;
    St2 -= td * td * g;
  }
}

class GaussAccum {
 public:
  GaussAccum() = default;
  void init(int n, const Eigen::VectorXd& tau, double c, double q2diag,
            bool want_s2) {
    n_ = n;
    tau_ = tau;
    c_ = c;
    vstep_ = std::exp(-2.0 * c * q2diag);
    want_s2_ = want_s2;
    s1_.assign(size_t(n), NeuAcc{});
    if (want_s2) s2_.assign(size_t(n) * (size_t(n) + 1) / 2, NeuAcc{});
    p_.resize(n);
  }

  void operator()(const std::int32_t* z, int count, double q0, double q1,
                  double q2, int skip) {
    double S0, St, St2;
    gauss_run_sums(count, q0, q1, q2, skip, c_, vstep_, S0, St, St2);
    npoints_ += count - (skip >= 0 ? 1 : 0);
    if (S0 == 0 && St == 0 && St2 == 0) return;
    s0_.add(S0);
    abs_qe_.add(q0 * S0 + q1 * St + q2 * St2);
    for (int i = 0; i < n_; ++i) p_[i] = double(z[i]) + tau_[i];
    s1_[0].add(p_[0] * S0 + St);
    for (int i = 1; i < n_; ++i) s1_[size_t(i)].add(p_[i] * S0);
    if (!want_s2_) return;
    // lower triangle of sum y y^T g; y = p + t e0
    NeuAcc* row = s2_.data();
    row[0].add(p_[0] * p_[0] * S0 + 2.0 * p_[0] * St + St2);
    for (int j = 1; j < n_; ++j) {
      NeuAcc* base = s2_.data() + size_t(j) * (size_t(j) + 1) / 2;
      double pj = p_[j];
      base[0].add(pj * (p_[0] * S0 + St));
      for (int k = 1; k <= j; ++k) base[k].add(pj * p_[k] * S0);
    }
  }

  GaussMoments result() const {
    GaussMoments m;
    m.init(n_);
    m.s0 = s0_.get();
    m.abs_e = m.s0;
    m.abs_qe = abs_qe_.get();
    m.npoints = npoints_;
    for (int i = 0; i < n_; ++i) m.s1[i] = s1_[size_t(i)].get();
    if (want_s2_)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k <= j; ++k) {
          double v = s2_[size_t(j) * (size_t(j) + 1) / 2 + size_t(k)].get();
          m.s2(j, k) = v;
          m.s2(k, j) = v;
        }
    return m;
  }

 private:
  int n_ = 0;
  Eigen::VectorXd tau_;
  Eigen::VectorXd p_;
  double c_ = 0, vstep_ = 0;
  bool want_s2_ = false;
  NeuAcc s0_, abs_qe_;
  std::vector<NeuAcc> s1_;
  std::vector<NeuAcc> s2_;
  std::int64_t npoints_ = 0;
};

}  // namespace detail

inline GaussMoments gauss_ball_moments(const EnumContext& ctx,
                                       const Eigen::VectorXd& tau, double r2,
                                       double c, bool want_s2,
                                       const std::int32_t* exclude = nullptr) {
  const double q2diag = ctx.R(0, 0) * ctx.R(0, 0);
  int nt = effective_threads();
  GaussMoments total;
  total.init(ctx.n);
  if (ctx.n == 1 || nt <= 1) {
    detail::GaussAccum acc;
    acc.init(ctx.n, tau, c, q2diag, want_s2);
    for_each_run(ctx, tau, r2, acc, exclude);
    total.add(acc.result());
    return total;
  }
  struct Nop {
    void operator()(const std::int32_t*, int, double, double, double, int) {}
  } nop;
  detail::RunEnumerator<Nop> probe(ctx, tau, r2, exclude, nop);
  std::int64_t lo, hi;
  probe.top_range(lo, hi);
  if (lo > hi) return total;
  std::int64_t ntasks = hi - lo + 1;
  if (std::int64_t(nt) > ntasks) nt = int(ntasks);
  std::vector<detail::GaussAccum> accs(size_t(nt));
  for (auto& a : accs) a.init(ctx.n, tau, c, q2diag, want_s2);
  parallel_for(ntasks, [&](std::int64_t task) {
    auto& acc = accs[size_t(task % nt)];
    detail::RunEnumerator<detail::GaussAccum> e(ctx, tau, r2, exclude, acc);
    e.run_top(lo + task);
  });
  for (const auto& a : accs) total.add(a.result());
  return total;
}

}  // namespace periodica
