#include "periodica/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace periodica {

namespace {

// try to read a float matrix as integer/denominator data
bool rationalize_matrix(const Eigen::MatrixXd& m, IMat& num, i64& den) {
  std::vector<Rat> entries;
  entries.reserve(size_t(m.size()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      auto r = rationalize(m(i, j));
      if (!r) return false;
      entries.push_back(*r);
    }
  i64 d = 1;
  for (const Rat& r : entries) d = lcm_checked(d, r.den());
  num.resize(m.rows(), m.cols());
  size_t k = 0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j, ++k)
      num(i, j) = narrow_checked(i128(entries[k].num()) * (d / entries[k].den()));
  den = d;
  return true;
}

}  // namespace

i128 int_det(const IMat& m) {
  const int n = int(m.rows());
  std::vector<std::vector<i128>> a(size_t(n), std::vector<i128>(size_t(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[size_t(i)][size_t(j)] = m(i, j);
  // Bareiss fraction-free elimination
  i128 prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a[size_t(k)][size_t(k)] == 0) {
      int p = -1;
      for (int r = k + 1; r < n; ++r)
        if (a[size_t(r)][size_t(k)] != 0) {
          p = r;
          break;
        }
      if (p < 0) return 0;
      std::swap(a[size_t(k)], a[size_t(p)]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        i128 v = a[size_t(i)][size_t(j)] * a[size_t(k)][size_t(k)] -
                 a[size_t(i)][size_t(k)] * a[size_t(k)][size_t(j)];
        a[size_t(i)][size_t(j)] = v / prev;
      }
    prev = a[size_t(k)][size_t(k)];
  }
  return sign * a[size_t(n - 1)][size_t(n - 1)];
}

Lattice Lattice::from_basis(const Eigen::MatrixXd& B,
                            std::optional<i64> declared_den) {
  if (B.rows() != B.cols() || B.rows() == 0)
    throw input_error("lattice basis must be square and non-empty");
  Lattice L;
  L.n = int(B.rows());
  L.basis = B;
  L.gram = B.transpose() * B;
  if (std::abs(B.determinant()) < 1e-12) throw math_error("degenerate lattice");

  IMat bnum;
  i64 bden;
  if (rationalize_matrix(B, bnum, bden)) {
    L.ambient_exact = true;
    L.basis_num = bnum;
    L.basis_den = bden;
    RatMat br = RatMat::from_int(bnum, bden);
    RatMat gr = br.transpose().mul(br);
    i64 gden = gr.common_den();
    L.exact = true;
    L.gram_den = gden;
    L.gram_num.resize(L.n, L.n);
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j)
        L.gram_num(i, j) =
            narrow_checked(i128(gr(i, j).num()) * (gden / gr(i, j).den()));
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j)
        L.gram(i, j) = Rat(L.gram_num(i, j), gden).to_double();
  } else if (declared_den) {
    // exact gram communicated through floats: d*A must round cleanly
    i64 d = *declared_den;
    if (d <= 0) throw input_error("denominator must be positive");
    L.gram_num.resize(L.n, L.n);
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j) {
        double v = L.gram(i, j) * double(d);
        double r = std::round(v);
        if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v)))
          throw input_error("declared denominator does not make the gram integral");
        L.gram_num(i, j) = i64(r);
      }
    L.exact = true;
    L.gram_den = d;
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j)
        L.gram(i, j) = double(L.gram_num(i, j)) / double(d);
  }
  if (declared_den && L.exact) {
    // declared value must be compatible with the recovered gram
    i64 d = *declared_den;
    for (int i = 0; i < L.n; ++i)
      for (int j = 0; j < L.n; ++j) {
        Rat v = Rat(L.gram_num(i, j), L.gram_den) * Rat(d);
        if (!v.is_integer())
          throw input_error("declared denominator does not make the gram integral");
      }
  }
  return L;
}

Lattice Lattice::from_integer_basis(const IMat& bnum, i64 bden) {
  Eigen::MatrixXd B(bnum.rows(), bnum.cols());
  for (int i = 0; i < bnum.rows(); ++i)
    for (int j = 0; j < bnum.cols(); ++j)
      B(i, j) = double(bnum(i, j)) / double(bden);
  return from_basis(B);
}

double Lattice::det_gram() const {
  if (exact) {
    i128 d = int_det(gram_num);
    double scale = std::pow(double(gram_den), n);
    return double(d) / scale;
  }
  return gram.determinant();
}

RatMat Lattice::gram_rat() const {
  if (!exact) throw math_error("operation requires exact arithmetic");
  return RatMat::from_int(gram_num, gram_den);
}

RatMat Lattice::basis_rat() const {
  if (!ambient_exact) throw math_error("operation requires exact arithmetic");
  return RatMat::from_int(basis_num, basis_den);
}

RatVec Lattice::coords_of(const RatVec& ambient) const {
  return solve_linear(basis_rat(), ambient);
}

RatVec Lattice::ambient_of(const RatVec& coords) const {
  return basis_rat().apply(coords);
}

Eigen::VectorXd Lattice::ambient_of_f(const Eigen::VectorXd& coords) const {
  return basis * coords;
}

Eigen::VectorXd Lattice::coords_of_f(const Eigen::VectorXd& ambient) const {
  return basis.colPivHouseholderQr().solve(ambient);
}

Rat Lattice::norm2_of_coords(const RatVec& coords) const {
  if (!exact) throw math_error("operation requires exact arithmetic");
  Rat s;
  for (int i = 0; i < n; ++i) {
    if (coords[size_t(i)].is_zero()) continue;
    for (int j = 0; j < n; ++j) {
      if (coords[size_t(j)].is_zero()) continue;
      s += coords[size_t(i)] * coords[size_t(j)] * Rat(gram_num(i, j), gram_den);
    }
  }
  return s;
}

namespace {

std::vector<CosetVector> collect_ball(const Lattice& L, const RatVec* tau_exact,
                                      const Eigen::VectorXd& tau_f, double r2f,
                                      const Rat* r2_exact, int offset_index) {
  EnumContext ctx = L.enum_context();
  std::vector<CosetVector> out;
  const int n = L.n;
  for_each_ball_point(ctx, tau_f, r2f, [&](const std::int32_t* z, double q) {
    CosetVector cv;
    cv.z.resize(n);
    for (int i = 0; i < n; ++i) cv.z[i] = z[i];
    cv.norm2 = q;
    cv.offset_index = offset_index;
    out.push_back(std::move(cv));
  });
  if (tau_exact && L.exact) {
    RatVec coords(size_t(n));
    std::vector<CosetVector> kept;
    kept.reserve(out.size());
    for (auto& cv : out) {
      for (int i = 0; i < n; ++i)
        coords[size_t(i)] = Rat(cv.z[i]) + (*tau_exact)[size_t(i)];
      Rat q = L.norm2_of_coords(coords);
      if (r2_exact ? (q <= *r2_exact) : (q.to_double() <= r2f + 1e-12)) {
        cv.exact = true;
        cv.norm2_exact = q;
        cv.norm2 = q.to_double();
        kept.push_back(std::move(cv));
      }
    }
    out = std::move(kept);
  } else {
    // float path: trim the completeness margin
    std::vector<CosetVector> kept;
    kept.reserve(out.size());
    for (auto& cv : out)
      if (cv.norm2 <= r2f * (1 + 1e-12) + 1e-12) kept.push_back(std::move(cv));
    out = std::move(kept);
  }
  std::sort(out.begin(), out.end(), [n](const CosetVector& a, const CosetVector& b) {
    for (int i = 0; i < n; ++i) {
      if (a.z[i] != b.z[i]) return a.z[i] < b.z[i];
    }
    return false;
  });
  return out;
}

}  // namespace

std::vector<CosetVector> enumerate_coset_ball(const Lattice& L,
                                              const Eigen::VectorXd& t_ambient,
                                              double r2, int offset_index) {
  if (r2 < 0) throw input_error("negative squared radius");
  Eigen::VectorXd tau_f = L.coords_of_f(t_ambient);
  if (L.ambient_exact) {
    RatVec t_rat(size_t(L.n));
    bool ok = true;
    for (int i = 0; i < L.n; ++i) {
      auto r = rationalize(t_ambient[i]);
      if (!r) {
        ok = false;
        break;
      }
      t_rat[size_t(i)] = *r;
    }
    if (ok) {
      RatVec tau = L.coords_of(t_rat);
      auto r2r = rationalize(r2);
      if (r2r) return enumerate_coset_ball_coords(L, tau, *r2r, offset_index);
    }
  }
  return collect_ball(L, nullptr, tau_f, r2, nullptr, offset_index);
}

std::vector<CosetVector> enumerate_coset_ball_coords(const Lattice& L,
                                                     const RatVec& tau,
                                                     const Rat& r2,
                                                     int offset_index) {
  if (r2 < Rat(0)) throw input_error("negative squared radius");
  Eigen::VectorXd tau_f(L.n);
  for (int i = 0; i < L.n; ++i) tau_f[i] = tau[size_t(i)].to_double();
  return collect_ball(L, &tau, tau_f, r2.to_double(), &r2, offset_index);
}

namespace {

std::vector<ShellFragment> group_shells(std::vector<CosetVector> ball,
                                        bool exact) {
  std::vector<ShellFragment> out;
  if (exact) {
    std::map<Rat, std::vector<CosetVector>> groups;
    for (auto& cv : ball) groups[cv.norm2_exact].push_back(std::move(cv));
    for (auto& [r2, vecs] : groups) {
      ShellFragment f;
      f.exact = true;
      f.r2_exact = r2;
      f.r2 = r2.to_double();
      f.vecs = std::move(vecs);
      out.push_back(std::move(f));
    }
    return out;
  }
  std::stable_sort(
      ball.begin(), ball.end(),
      [](const CosetVector& a, const CosetVector& b) { return a.norm2 < b.norm2; });
  double last = -1;
  for (auto& cv : ball) {
    double same_tol = 1e-12 * (1.0 + cv.norm2);
    if (out.empty() || cv.norm2 - last > kEpsShell) {
      out.emplace_back();
      out.back().r2 = cv.norm2;
    } else if (cv.norm2 - last > same_tol) {
      // distinct norms closer than the bin width cannot be separated reliably
      throw math_error("ambiguous shell binning");
    }
    last = cv.norm2;
    out.back().vecs.push_back(std::move(cv));
  }
  // restore deterministic lexicographic order inside each bin
  for (auto& f : out)
    std::sort(f.vecs.begin(), f.vecs.end(),
              [](const CosetVector& a, const CosetVector& b) {
                for (int i = 0; i < a.z.size(); ++i)
                  if (a.z[i] != b.z[i]) return a.z[i] < b.z[i];
                return false;
              });
  return out;
}

}  // namespace

std::vector<ShellFragment> shells(const Lattice& L,
                                  const Eigen::VectorXd& t_ambient,
                                  double r2max) {
  auto ball = enumerate_coset_ball(L, t_ambient, r2max);
  bool exact = !ball.empty() ? ball.front().exact : L.exact;
  return group_shells(std::move(ball), exact);
}

std::vector<ShellFragment> shells_coords(const Lattice& L, const RatVec& tau,
                                         const Rat& r2max) {
  auto ball = enumerate_coset_ball_coords(L, tau, r2max);
  return group_shells(std::move(ball), true);
}

double minimal_norm(const Lattice& L) {
  double guess = L.gram.diagonal().minCoeff();
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(L.n);
  for (int iter = 0; iter < 8; ++iter) {
    auto ball = enumerate_coset_ball(L, zero, guess);
    double best = -1;
    for (const auto& cv : ball)
      if (cv.norm2 > 1e-12 && (best < 0 || cv.norm2 < best)) best = cv.norm2;
    if (best > 0) return best;
    guess *= 2;
  }
  throw math_error("degenerate lattice");
}

Rat minimal_norm_exact(const Lattice& L) {
  if (!L.exact) throw math_error("operation requires exact arithmetic");
  double guess = L.gram.diagonal().minCoeff();
  RatVec zero(size_t(L.n));
  for (int iter = 0; iter < 8; ++iter) {
    Rat r2(i64(std::ceil(guess * 1024.0)) + 1, 1024);
    auto ball = enumerate_coset_ball_coords(L, zero, r2);
    bool found = false;
    Rat best;
    for (const auto& cv : ball)
      if (!cv.norm2_exact.is_zero() && (!found || cv.norm2_exact < best)) {
        best = cv.norm2_exact;
        found = true;
      }
    if (found) return best;
    guess *= 2;
  }
  throw math_error("degenerate lattice");
}

}  // namespace periodica
