// periodica: Gaussian-core energies, criticality and local-optimality
// certificates of m-periodic point sets.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "periodica/io.hpp"
#include "periodica/parallel.hpp"

namespace {

using namespace periodica;

void write_out(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    if (content.empty() || content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw input_error("cannot open output file: " + path);
  out << content;
}

std::vector<double> parse_c_grid(const std::string& s, int n) {
  if (s == "default") return default_c_grid(n);
  std::vector<double> grid;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      grid.push_back(std::stod(item));
    } catch (...) {
      throw input_error("malformed c grid entry: " + item);
    }
  }
  return grid;
}

struct Options {
  std::string input;
  double c = 1.0;
  std::string c_grid = "default";
  double r2max = 12.0;
  double tol = 1e-10;
  std::string out;
  std::string csv;
  int threads = 0;
  std::string rho = "zero";
  std::string poly = "one";
  bool average = false;
  bool allow_non_critical = false;
};

Rat r2max_rat(double r2max) {
  auto r = rationalize(r2max);
  if (!r || *r < Rat(0)) throw input_error("r2max must be a small nonnegative rational");
  return *r;
}

void check_r2max(const PeriodicSetRep& rep, double r2max) {
  if (!(r2max > 0) || r2max > 1e4) throw input_error("r2max out of range");
  if (r2max <= minimal_norm(rep.L))
    throw input_error("r2max must exceed the minimal shell norm");
}

int run(int argc, char** argv) {
  CLI::App app{"periodica: energies and optimality certificates of periodic point sets"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--input,--builtin", opt.input,
                 "PeriodicSetRep JSON file, or builtin dn:N | dnplus:N | zn:N")
      ->required();
  app.add_option("--c", opt.c, "Gaussian exponent c > 0");
  app.add_option("--c-grid", opt.c_grid, "comma-separated c values, or 'default'");
  app.add_option("--r2max", opt.r2max, "squared-radius cutoff for shells");
  app.add_option("--tol", opt.tol, "truncation tolerance, in (0, 1e-2]");
  app.add_option("--out", opt.out, "output path (default: stdout)");
  app.add_option("--csv", opt.csv, "optional CSV output path");
  app.add_option("--threads", opt.threads, "worker threads (default: cores)");
  app.add_flag("--allow-non-critical", opt.allow_non_critical,
               "evaluate the hessian even if the gradient does not vanish");

  auto* cmd_energy = app.add_subcommand("energy", "Gaussian-core energy with a rigorous tail bound");
  auto* cmd_cert = app.add_subcommand("certify-critical", "balanced-shell and weighted 2-design certificate");
  auto* cmd_spec = app.add_subcommand("hessian-spectrum", "hessian spectrum on the gauge complement");
  auto* cmd_dnrep = app.add_subcommand("dnplus-report", "per-shell hessian block report for D_n^+");
  auto* cmd_scan = app.add_subcommand("threshold-scan", "scan c for certified positivity of the blocks");
  auto* cmd_theta = app.add_subcommand("theta", "theta series coefficients by enumeration");
  cmd_theta->add_option("--rho", opt.rho, "offset: zero | half");
  cmd_theta->add_option("--p", opt.poly, "spherical polynomial: one | p4");
  cmd_theta->add_flag("--average", opt.average, "average theta series of the periodic set");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (opt.threads > 0) set_threads(opt.threads);
  if (!(opt.tol > 0) || opt.tol > 1e-2) throw input_error("tol must lie in (0, 1e-2]");

  PeriodicSetRep rep = load_rep(opt.input);

  if (cmd_energy->parsed()) {
    EnergyReport r = energy(rep, opt.c, opt.tol, !opt.csv.empty());
    write_out(opt.out, energy_report_json(r).dump(2));
    if (!opt.csv.empty()) write_out(opt.csv, energy_shells_csv(r));
    return 0;
  }
  if (cmd_cert->parsed()) {
    check_r2max(rep, opt.r2max);
    CriticalityCertificate cert = certify_critical(rep, r2max_rat(opt.r2max));
    write_out(opt.out, certificate_json(cert).dump(2));
    return 0;
  }
  if (cmd_spec->parsed()) {
    LocalMinReport r =
        certify_local_min(rep, opt.c, opt.tol, -1, opt.allow_non_critical);
    write_out(opt.out, localmin_json(r).dump(2));
    return r.verdict == "INCONCLUSIVE" ? 4 : 0;
  }
  if (cmd_dnrep->parsed()) {
    check_r2max(rep, opt.r2max);
    DnBlocks blocks = hessian_blocks(rep, opt.c, r2max_rat(opt.r2max));
    write_out(opt.csv.empty() ? opt.out : opt.csv, blocks_csv(blocks));
    return 0;
  }
  if (cmd_scan->parsed()) {
    check_r2max(rep, opt.r2max);
    ThresholdScan scan = threshold_scan(rep.L.n, parse_c_grid(opt.c_grid, rep.L.n),
                                        r2max_rat(opt.r2max), opt.tol);
    write_out(opt.out, scan_json(scan).dump(2));
    if (!opt.csv.empty()) write_out(opt.csv, scan_csv(scan));
    return scan.found ? 0 : 4;
  }
  if (cmd_theta->parsed()) {
    check_r2max(rep, opt.r2max);
    ThetaKind kind;
    if (opt.poly == "one")
      kind = ThetaKind::One;
    else if (opt.poly == "p4")
      kind = ThetaKind::FourthMomentHarmonic;
    else
      throw math_error("unsupported spherical polynomial: " + opt.poly);
    std::vector<std::pair<Rat, Rat>> coeffs;
    if (opt.average) {
      coeffs = theta_average(rep, kind, r2max_rat(opt.r2max));
    } else {
      RatVec rho(size_t(rep.L.n));
      if (opt.rho == "half")
        rho.assign(size_t(rep.L.n), Rat(1, 2));
      else if (opt.rho != "zero")
        throw input_error("unsupported rho: " + opt.rho);
      coeffs = theta_coefficients(rep.L, rho, kind, r2max_rat(opt.r2max));
    }
    write_out(opt.out, theta_json(coeffs).dump(2));
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const periodica::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const periodica::exact_overflow& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const periodica::math_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
