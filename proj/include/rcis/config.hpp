#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rcis/linsys.hpp"
#include "rcis/mealy.hpp"
#include "rcis/rcis.hpp"

namespace rcis {

// Parameterized controller recipe. K = 0 means "one symbol branch per
// disturbance vertex"; the custom kind carries explicit tables.
struct MachineConfig {
  std::string kind = "tree";  // tree | simple_loop | custom
  int L = 4;
  int K = 0;
  int num_states = 0;
  int num_symbols = 0;
  std::vector<std::vector<int>> transition;
  std::vector<std::vector<int>> output;
};

struct PipelineConfig {
  bool prefeedback_auto = true;  // deadbeat prefeedback when A is not nilpotent
  bool lift_auto = true;         // delay lift for non-measurable disturbances
};

struct OracleConfig {
  int max_iter = 200;
  long long samples = 10000;
  std::uint64_t seed = 1;
};

struct RunConfig {
  LinearSystem plant;
  MachineConfig machine;
  PipelineConfig pipeline;
  OracleConfig oracle;
  std::string out_dir = "out";
};

// Strict parse: schema violations and unknown keys raise ConfigError with the
// offending key path; syntax errors carry line and column.
RunConfig parse_run_config(const std::string& text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

// Chain of n integrators, scalar input through the last coordinate, |d| <= 0.1
// through the same channel, unit box safe set.
LinearSystem integrator_preset(int n);

// Plant after the configured transforms: delay lift for non-measurable
// disturbances, then a deadbeat prefeedback when A is not nilpotent.
struct PreparedPlant {
  LinearSystem sys;
  bool lifted = false;
  bool prefed = false;
};

PreparedPlant prepare_plant(const LinearSystem& plant,
                            const PipelineConfig& pipeline);

// Machine from config sized against the prepared plant (action count must
// equal the number of disturbance vertices).
MealyMachine build_machine(const MachineConfig& cfg, int num_actions, int m);

struct BuildOutcome {
  PreparedPlant prep;
  MealyMachine machine;
  ImplicitRcis rcis;
  double seconds = 0.0;
};

BuildOutcome run_pipeline(const RunConfig& cfg);

}  // namespace rcis
