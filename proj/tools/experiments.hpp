#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "adiabat/model.hpp"
#include "adiabat/norms.hpp"

namespace cli {

inline constexpr const char* kConfigSchema = "adiabat.experiment/1";
inline constexpr const char* kSummarySchema = "adiabat.summary/1";

struct ExperimentConfig {
  std::string triple_path;
  std::optional<nlohmann::json> triple_inline;
  std::vector<double> eps_list;
  std::optional<double> grid_T;
  std::optional<int> grid_m;
  double nu = 0.25;
  std::vector<std::string> checks;
  std::string out_dir = "adiabat-out";
  std::uint64_t seed = 1;
};

const std::vector<std::string>& known_checks();

// Throws adiabat::InvalidInput on any inconsistency.
void validate(const ExperimentConfig& cfg);
adiabat::ProblemTriple resolve_triple(const ExperimentConfig& cfg);
adiabat::Grid resolve_grid(const ExperimentConfig& cfg, const adiabat::ProblemTriple& tr, double eps);

struct CheckResult {
  std::string name;
  bool pass = false;
  nlohmann::json metrics;
  std::vector<std::string> lines;                // human-readable report
  std::map<std::string, std::string> files;      // relative name -> CSV body
};

// Runs one named check. Solver failures propagate as adiabat::SolverError.
CheckResult run_check(const std::string& name, const ExperimentConfig& cfg, const adiabat::ProblemTriple& tr);

}  // namespace cli
