#pragma once

#include <string>

#include <json.hpp>

#include "periodica/dnplus.hpp"

namespace periodica {

// decimal string with 17 significant digits; all floats are serialized this
// way so outputs diff cleanly across runs
std::string fmt17(double v);

nlohmann::json lattice_to_json(const Lattice& L);
Lattice lattice_from_json(const nlohmann::json& j);

nlohmann::json rep_to_json(const PeriodicSetRep& rep);
PeriodicSetRep rep_from_json(const nlohmann::json& j);

// "dn:9" | "dnplus:9" | "zn:2" builtins, otherwise a JSON file path
PeriodicSetRep load_rep(const std::string& spec);

nlohmann::json energy_report_json(const EnergyReport& r);
nlohmann::json certificate_json(const CriticalityCertificate& c);
nlohmann::json localmin_json(const LocalMinReport& r);
nlohmann::json scan_json(const ThresholdScan& s);
nlohmann::json theta_json(const std::vector<std::pair<Rat, Rat>>& coeffs);

std::string blocks_csv(const DnBlocks& blocks);
std::string scan_csv(const ThresholdScan& s);
std::string energy_shells_csv(const EnergyReport& r);

}  // namespace periodica
