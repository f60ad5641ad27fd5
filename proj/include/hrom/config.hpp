#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "hrom/bench.hpp"

namespace hrom {

struct PhaseConfig {
  int id = 0;
  double E = 1000.0;
  double nu = 0.2;
};

struct LoadConfig {
  std::uint64_t seed = 7;
  int paths = 50;
  int steps = 10;
  int training_paths = 20;
  double dlp = 0.03;
  double dls = 0.015;
};

struct SolverConfig {
  double tol = 1e-8;
  int max_iter = 25;
  int max_bisections = 5;
  int divergence_budget = 0;  // diverged states tolerated before exit code 4
};

struct RunConfig {
  MeshSpec mesh = two_inclusion_spec(6);
  Variant variant = Variant::stabilized;
  std::vector<PhaseConfig> phases{{0, 1000.0, 0.2}, {1, 3000.0, 0.2}};
  LoadConfig load;
  ReductionConfig reduction;
  HyperConfig hyper;
  std::string xi = "nnls";  // or "unit"
  bool lspg_paper_sign = false;
  SolverConfig solver;
  int threads = 0;  // 0 = hardware concurrency

  int resolved_threads() const;
  MaterialTable materials() const;
  NewtonOptions newton_options() const;
  RomOptions rom_options() const;
  HyperOptions hyper_options() const;
};

/// Every key with its default; the emitted copy of a resolved config has this exact shape.
nlohmann::json to_json(const RunConfig& config);
/// Overlays `doc` on the defaults. Unknown keys, wrong types and out-of-range values throw ConfigError.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
/// HYPERROM_SEED, when set, replaces load.seed.
void apply_environment(RunConfig& config);

/// Unit xi on the reduced elements instead of the NNLS fit.
void use_unit_xi(HyperModel& model);

}  // namespace hrom
