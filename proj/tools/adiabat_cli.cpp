// adiabat: run and describe heteroclinic experiments.
//
//   adiabat describe --triple configs/b05.json --sweep 0.1,0.05 --check all
//   adiabat run --triple configs/b05.json --sweep 0.2,0.1,0.05,0.025 --all --out results
//
// Exit status: 0 all selected checks pass, 1 a check failed, 2 usage or
// configuration error, 3 solver error.

#include <CLI11.hpp>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <sstream>

#include "adiabat/conley.hpp"
#include "adiabat/io.hpp"
#include "experiments.hpp"

namespace fs = std::filesystem;
using adiabat::InvalidInput;
using adiabat::SolverError;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kConfigError = 2, kSolverError = 3 };

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InvalidInput("cannot parse eps value '" + item + "'");
    }
  }
  return out;
}

// Config file keys mirror the flags; flags given on the command line win.
void apply_config_file(const std::string& path, cli::ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config file " + path + ": " + e.what());
  }
  if (j.value("schema", "") != cli::kConfigSchema)
    throw InvalidInput(fmt::format("config file {}: schema must be \"{}\"", path, cli::kConfigSchema));
  try {
    if (j.contains("triple")) {
      if (j["triple"].is_string()) {
        const fs::path t = j["triple"].get<std::string>();
        cfg.triple_path = t.is_absolute() ? t.string() : (fs::path(path).parent_path() / t).string();
      } else {
        cfg.triple_inline = j["triple"];
      }
    }
    if (j.contains("sweep")) cfg.eps_list = j["sweep"].get<std::vector<double>>();
    if (j.contains("nu")) cfg.nu = j["nu"].get<double>();
    if (j.contains("grid")) {
      if (j["grid"].contains("T")) cfg.grid_T = j["grid"]["T"].get<double>();
      if (j["grid"].contains("m")) cfg.grid_m = j["grid"]["m"].get<int>();
    }
    if (j.contains("checks")) cfg.checks = j["checks"].get<std::vector<std::string>>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config file " + path + ": " + e.what());
  }
}

nlohmann::json config_json(const cli::ExperimentConfig& cfg, const adiabat::ProblemTriple& tr) {
  nlohmann::json j;
  j["triple"] = adiabat::triple_to_json(tr);
  j["sweep"] = cfg.eps_list;
  j["nu"] = cfg.nu;
  j["checks"] = cfg.checks;
  j["seed"] = cfg.seed;
  nlohmann::json grids = nlohmann::json::array();
  for (double e : cfg.eps_list) {
    const adiabat::Grid g = cli::resolve_grid(cfg, tr, e);
    grids.push_back({{"eps", e}, {"T", g.T}, {"m", g.m}, {"dt", g.dt()}});
  }
  j["grids"] = grids;
  return j;
}

void describe(const cli::ExperimentConfig& cfg, const adiabat::ProblemTriple& tr) {
  fmt::print("triple: n = {}, |b| = {:.6g}, h = {}\n", tr.n(), tr.b().norm(), tr.h().kind());
  fmt::print("nu = {:g}, seed = {}\n", cfg.nu, cfg.seed);
  for (double e : cfg.eps_list) {
    const adiabat::Grid g = cli::resolve_grid(cfg, tr, e);
    const adiabat::ConleyConfig c = adiabat::make_conley_config(tr, e, cfg.nu);
    fmt::print("eps = {:g}: grid T = {:.6g}, m = {}, dt = {:.4g}; K = {:.4f}, r_plus = {:.4f}, r_minus_inner = {:.4f}, r_minus_outer = {:.2f}\n",
               e, g.T, g.m, g.dt(), c.K, c.r_plus, c.r_minus_inner, c.r_minus_outer);
  }
  if (cfg.checks.empty()) {
    fmt::print("no experiments selected\n");
  } else {
    std::string list;
    for (const auto& c : cfg.checks) list += (list.empty() ? "" : ", ") + c;
    fmt::print("checks: {}\n", list);
  }
}

int run(const cli::ExperimentConfig& cfg, const adiabat::ProblemTriple& tr) {
  if (cfg.checks.empty()) {
    fmt::print("no experiments selected\n");
    return kPass;
  }
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  nlohmann::json summary;
  summary["schema"] = cli::kSummarySchema;
  summary["config"] = config_json(cfg, tr);
  summary["checks"] = nlohmann::json::object();
  int status = kPass;
  for (const auto& name : cfg.checks) {
    nlohmann::json entry;
    try {
      const cli::CheckResult r = cli::run_check(name, cfg, tr);
      for (const auto& line : r.lines) fmt::print("{}\n", line);
      for (const auto& [file, body] : r.files) {
        std::ofstream f(out / file);
        f << body;
      }
      entry = {{"pass", r.pass}, {"metrics", r.metrics}};
      if (!r.pass && status == kPass) status = kCheckFailed;
      fmt::print("[{}] {}\n", r.pass ? "PASS" : "FAIL", name);
    } catch (const SolverError& e) {
      entry = {{"pass", false}, {"error", e.what()}};
      status = kSolverError;
      fmt::print("[ERROR] {}: {}\n", name, e.what());
    }
    summary["checks"][name] = entry;
  }
  summary["status"] = status;
  std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
  fmt::print("summary written to {}\n", (out / "summary.json").string());
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adiabatic-limit heteroclinic experiments"};
  app.require_subcommand(1);

  cli::ExperimentConfig cfg;
  std::string config_file, sweep, check;
  bool all = false;
  std::optional<double> nu, grid_T;
  std::optional<int> grid_m;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out, triple;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON experiment config");
    sub->add_option("--triple", triple, "JSON triple file");
    sub->add_option("--sweep", sweep, "comma separated eps values");
    sub->add_option("--nu", nu, "exponent of the index-pair radii, in (0, 1/2)");
    sub->add_option("--grid-T", grid_T, "half length of the time grid");
    sub->add_option("--grid-m", grid_m, "number of grid nodes (odd)");
    sub->add_option("--check", check, "comma separated check names, or all");
    sub->add_flag("--all", all, "select every check");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "random seed");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "run the selected checks and write reports");
  CLI::App* describe_cmd = app.add_subcommand("describe", "print the resolved plan without computing");
  add_common(run_cmd);
  add_common(describe_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  adiabat::ProblemTriple tr = adiabat::ProblemTriple::make(adiabat::Mat::Identity(1, 1), adiabat::Vec::Zero(1));
  try {
    if (!config_file.empty()) apply_config_file(config_file, cfg);
    if (triple) {
      cfg.triple_path = *triple;
      cfg.triple_inline.reset();
    }
    if (!sweep.empty()) cfg.eps_list = parse_list(sweep);
    if (nu) cfg.nu = *nu;
    if (grid_T) cfg.grid_T = grid_T;
    if (grid_m) cfg.grid_m = grid_m;
    if (seed) cfg.seed = *seed;
    if (out) cfg.out_dir = *out;
    if (all || check == "all") {
      cfg.checks = cli::known_checks();
    } else if (!check.empty()) {
      cfg.checks.clear();
      std::stringstream ss(check);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) cfg.checks.push_back(item);
    }
    cli::validate(cfg);
    tr = cli::resolve_triple(cfg);
    for (double e : cfg.eps_list) cli::resolve_grid(cfg, tr, e);
  } catch (const adiabat::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  }

  try {
    if (describe_cmd->parsed()) {
      describe(cfg, tr);
      return kPass;
    }
    return run(cfg, tr);
  } catch (const InvalidInput& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  } catch (const SolverError& e) {
    fmt::print(stderr, "solver error: {}\n", e.what());
    return kSolverError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kSolverError;
  }
}
