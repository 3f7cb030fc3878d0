#include "periodica/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace periodica {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json lattice_to_json(const Lattice& L) {
  json j;
  j["dimension"] = L.n;
  json rows = json::array();
  for (int i = 0; i < L.n; ++i) {
    json row = json::array();
    for (int k = 0; k < L.n; ++k) row.push_back(L.basis(i, k));
    rows.push_back(row);
  }
  j["basis"] = rows;
  if (L.exact) j["denominator"] = L.gram_den;
  return j;
}

Lattice lattice_from_json(const json& j) {
  if (!j.contains("dimension") || !j.contains("basis"))
    throw input_error("lattice JSON requires dimension and basis");
  int n = j.at("dimension").get<int>();
  const json& rows = j.at("basis");
  if (int(rows.size()) != n) throw input_error("basis row count mismatch");
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i) {
    if (int(rows[size_t(i)].size()) != n)
      throw input_error("basis column count mismatch");
    for (int k = 0; k < n; ++k) b(i, k) = rows[size_t(i)][size_t(k)].get<double>();
  }
  std::optional<i64> den;
  if (j.contains("denominator")) den = j.at("denominator").get<i64>();
  return Lattice::from_basis(b, den);
}

json rep_to_json(const PeriodicSetRep& rep) {
  json j;
  j["lattice"] = lattice_to_json(rep.L);
  json ts = json::array();
  for (const auto& t : rep.trans) {
    json row = json::array();
    for (int i = 0; i < t.size(); ++i) row.push_back(t[i]);
    ts.push_back(row);
  }
  j["translations"] = ts;
  return j;
}

PeriodicSetRep rep_from_json(const json& j) {
  if (!j.contains("lattice") || !j.contains("translations"))
    throw input_error("periodic set JSON requires lattice and translations");
  Lattice L = lattice_from_json(j.at("lattice"));
  std::vector<Eigen::VectorXd> trans;
  for (const auto& row : j.at("translations")) {
    if (int(row.size()) != L.n) throw input_error("translation dimension mismatch");
    Eigen::VectorXd t(L.n);
    for (int i = 0; i < L.n; ++i) t[i] = row[size_t(i)].get<double>();
    trans.push_back(t);
  }
  if (trans.empty()) throw input_error("at least one translation required");
  return make_rep(L, trans);
}

PeriodicSetRep load_rep(const std::string& spec) {
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    std::string kind = spec.substr(0, colon);
    if (kind == "dn" || kind == "dnplus" || kind == "zn") {
      int n = 0;
      try {
        n = std::stoi(spec.substr(colon + 1));
      } catch (...) {
        throw input_error("malformed builtin name: " + spec);
      }
      if (kind == "dnplus") return build_dn_plus(n);
      if (kind == "dn") {
        Lattice dn = build_dn(n);
        return make_rep_coords(dn, {RatVec(size_t(n))});
      }
      if (n < 1) throw input_error("zn requires n >= 1");
      IMat id = IMat::Identity(n, n);
      return make_rep_coords(Lattice::from_integer_basis(id, 1),
                             {RatVec(size_t(n))});
    }
  }
  std::ifstream in(spec);
  if (!in) throw input_error("cannot open input file: " + spec);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw input_error(std::string("malformed JSON: ") + e.what());
  }
  return rep_from_json(j);
}

json energy_report_json(const EnergyReport& r) {
  json j;
  j["c"] = fmt17(r.c);
  j["value"] = fmt17(r.value);
  j["r2_truncation"] = fmt17(r.r2_trunc);
  j["tail_bound"] = fmt17(r.tail);
  return j;
}

json certificate_json(const CriticalityCertificate& c) {
  json j;
  j["pass"] = c.pass;
  j["exact"] = c.exact;
  if (!c.witness.empty()) j["witness"] = c.witness;
  json shells = json::array();
  for (const auto& s : c.shells) {
    json e;
    e["r2"] = s.r2.str();
    e["balanced"] = s.balanced;
    e["design2"] = s.design2;
    if (s.design2) e["c_r"] = s.c_r.str();
    e["strength"] = s.strength;
    e["a_r"] = s.a_r.str();
    e["pass"] = s.pass;
    if (!s.witness.empty()) e["witness"] = s.witness;
    shells.push_back(e);
  }
  j["shells"] = shells;
  return j;
}

json localmin_json(const LocalMinReport& r) {
  json j;
  j["verdict"] = r.verdict;
  j["lambda_min"] = fmt17(r.lambda_min);
  j["gap"] = fmt17(r.gap);
  j["error_bound"] = fmt17(r.err_bound);
  j["gauge_residual"] = fmt17(r.gauge_residual);
  j["near_zero_modes"] = r.near_zero_modes;
  j["complement_dimension"] = r.complement_dim;
  j["r2_truncation"] = fmt17(r.form.r2_trunc);
  json spec = json::array();
  for (int i = 0; i < r.spectrum.size(); ++i) spec.push_back(fmt17(r.spectrum[i]));
  j["spectrum"] = spec;
  return j;
}

json scan_json(const ThresholdScan& s) {
  json j;
  j["n"] = s.n;
  j["r2max"] = fmt17(s.r2max);
  j["found"] = s.found;
  if (s.found) j["c_n_estimate"] = fmt17(s.c_n_estimate);
  j["envelope_slope"] = fmt17(s.envelope_slope);
  j["shell_checks"] = s.certified_flag;
  j["tail_check"] = s.tail_flag;
  json verdicts = json::array();
  for (const auto& v : s.verdicts) {
    json e;
    e["c"] = fmt17(v.c);
    e["translational_ok"] = v.translational_ok;
    e["lattice_ok"] = v.lattice_ok;
    e["tail_ok"] = v.tail_ok;
    e["c1_total"] = fmt17(v.c1_total);
    e["c2_total"] = fmt17(v.c2_total);
    if (!v.obstruction.empty()) e["obstruction"] = v.obstruction;
    verdicts.push_back(e);
  }
  j["verdicts"] = verdicts;
  return j;
}

json theta_json(const std::vector<std::pair<Rat, Rat>>& coeffs) {
  json j = json::array();
  for (const auto& [r2, v] : coeffs) {
    json e;
    e["r2"] = r2.str();
    e["coefficient"] = v.str();
    j.push_back(e);
  }
  return j;
}

std::string blocks_csv(const DnBlocks& blocks) {
  std::ostringstream os;
  os << "r2,count,weight,Z_r,a_r,alpha,beta,gamma,II_zero,"
        "transl_threshold_c,bracket1,bracket2,coeff1,coeff2\n";
  for (const auto& b : blocks.shells) {
    os << b.r2.str() << ',' << b.count << ',' << b.weight.str() << ','
       << b.z_r.str() << ',' << b.a_r.str() << ',' << b.alpha.str() << ','
       << b.beta.str() << ',' << b.gamma.str() << ',' << (b.ii_zero ? 1 : 0)
       << ',' << fmt17(b.transl_threshold_c) << ',' << fmt17(b.bracket1) << ','
       << fmt17(b.bracket2) << ',' << fmt17(b.coeff1) << ',' << fmt17(b.coeff2)
       << '\n';
  }
  return os.str();
}

std::string scan_csv(const ThresholdScan& s) {
  std::ostringstream os;
  os << "c,r2,count,Z_r,a_r,coeff1,coeff2,transl_factor\n";
  for (const auto& v : s.verdicts) {
    for (const auto& sh : s.shells) {
      BlockReport b;
      b.r2 = sh.r2;
      b.count = sh.count;
      b.a_r = sh.a_r;
      double r2 = sh.r2.to_double();
      double ratio = sh.a_r.to_double() / (r2 * r2 * double(sh.count));
      double br1 = (1.0 - double(s.n + 2) / (2.0 * v.c * r2)) -
                   double(s.n + 2) / double(s.n - 1) * ratio;
      double br2 = (1.0 - double(s.n + 2) / (2.0 * v.c * r2)) +
                   double(s.n) * (s.n + 2) / (2.0 * double(s.n - 1)) * ratio;
      double c1 = 2.0 * v.c / (double(s.n) * (s.n + 2)) * r2 * r2 *
                  double(sh.count) * br1;
      double c2 = v.c / (double(s.n) * (s.n + 2)) * r2 * r2 * double(sh.count) * br2;
      os << fmt17(v.c) << ',' << sh.r2.str() << ',' << sh.count << ','
         << sh.z_r.str() << ',' << sh.a_r.str() << ',' << fmt17(c1) << ','
         << fmt17(c2) << ',' << fmt17(2.0 * v.c * r2 / s.n - 1.0) << '\n';
    }
  }
  return os.str();
}

std::string energy_shells_csv(const EnergyReport& r) {
  std::ostringstream os;
  os << "r2,contribution\n";
  for (const auto& [r2, v] : r.shell_contributions)
    os << fmt17(r2) << ',' << fmt17(v) << '\n';
  return os.str();
}

}  // namespace periodica
