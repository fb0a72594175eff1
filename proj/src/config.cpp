#include "rcis/config.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rcis/errors.hpp"

namespace rcis {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("config key '" + path + key +
                        "' is not part of the schema");
}

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

VectorXd as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v[static_cast<int>(i)] = as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

MatrixXd as_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected an array of rows");
  const size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(path, "expected nonempty numeric rows");
  MatrixXd M(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols)
      fail(rp, "rows must all have " + std::to_string(cols) + " entries");
    for (size_t c = 0; c < cols; ++c)
      M(static_cast<int>(r), static_cast<int>(c)) =
          as_number(j[r][c], rp + "[" + std::to_string(c) + "]");
  }
  return M;
}

std::vector<std::vector<int>> as_int_table(const json& j,
                                           const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of integer rows");
  std::vector<std::vector<int>> out;
  for (size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) fail(rp, "expected an integer row");
    std::vector<int> row;
    for (size_t c = 0; c < j[r].size(); ++c)
      row.push_back(as_int(j[r][c], rp + "[" + std::to_string(c) + "]"));
    out.push_back(std::move(row));
  }
  return out;
}

Polytope parse_safe(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  if (const json* box = find(j, "box")) {
    reject_unknown(j, {"box"}, path + ".");
    reject_unknown(*box, {"lower", "upper"}, path + ".box.");
    const json* lo = find(*box, "lower");
    const json* hi = find(*box, "upper");
    if (!lo || !hi) fail(path + ".box", "needs 'lower' and 'upper'");
    return Box(as_vector(*lo, path + ".box.lower"),
               as_vector(*hi, path + ".box.upper"))
        .to_polytope();
  }
  reject_unknown(j, {"G", "h"}, path + ".");
  const json* G = find(j, "G");
  const json* h = find(j, "h");
  if (!G || !h) fail(path, "needs either 'box' or 'G' and 'h'");
  return Polytope(as_matrix(*G, path + ".G"), as_vector(*h, path + ".h"));
}

LinearSystem parse_plant(const json& j) {
  if (!j.is_object()) fail("plant", "expected an object");
  if (const json* preset = find(j, "preset")) {
    reject_unknown(j, {"preset", "n"}, "plant.");
    const std::string name = as_string(*preset, "plant.preset");
    if (name != "integrator")
      fail("plant.preset", "unknown preset '" + name + "'");
    const json* n = find(j, "n");
    if (!n) fail("plant.n", "the integrator preset needs 'n'");
    const int nn = as_int(*n, "plant.n");
    if (nn < 1 || nn > 64) fail("plant.n", "n must be in [1, 64]");
    return integrator_preset(nn);
  }
  reject_unknown(j, {"A", "B", "disturbance", "safe"}, "plant.");
  const json* A = find(j, "A");
  const json* B = find(j, "B");
  const json* dist = find(j, "disturbance");
  const json* safe = find(j, "safe");
  if (!A || !B || !dist || !safe)
    fail("plant", "needs 'A', 'B', 'disturbance', 'safe' (or a preset)");
  reject_unknown(*dist, {"mode", "vertices"}, "plant.disturbance.");
  const json* mode_j = find(*dist, "mode");
  const json* verts = find(*dist, "vertices");
  if (!mode_j || !verts)
    fail("plant.disturbance", "needs 'mode' and 'vertices'");
  const std::string mode_s = as_string(*mode_j, "plant.disturbance.mode");
  DisturbanceMode mode;
  if (mode_s == "measurable")
    mode = DisturbanceMode::Measurable;
  else if (mode_s == "non_measurable")
    mode = DisturbanceMode::NonMeasurable;
  else
    fail("plant.disturbance.mode",
         "expected 'measurable' or 'non_measurable'");
  MatrixXd V = as_matrix(*verts, "plant.disturbance.vertices");
  std::vector<VectorXd> dv;
  for (int r = 0; r < V.rows(); ++r) dv.push_back(V.row(r).transpose());
  return LinearSystem(as_matrix(*A, "plant.A"), as_matrix(*B, "plant.B"),
                      std::move(dv), parse_safe(*safe, "plant.safe"), mode);
}

MachineConfig parse_machine(const json& j) {
  MachineConfig cfg;
  if (!j.is_object()) fail("machine", "expected an object");
  const json* kind = find(j, "kind");
  if (!kind) fail("machine.kind", "required");
  cfg.kind = as_string(*kind, "machine.kind");
  if (cfg.kind == "tree") {
    reject_unknown(j, {"kind", "L", "K"}, "machine.");
    if (const json* L = find(j, "L")) cfg.L = as_int(*L, "machine.L");
    if (const json* K = find(j, "K")) cfg.K = as_int(*K, "machine.K");
  } else if (cfg.kind == "simple_loop") {
    reject_unknown(j, {"kind", "L"}, "machine.");
    if (const json* L = find(j, "L")) cfg.L = as_int(*L, "machine.L");
  } else if (cfg.kind == "custom") {
    reject_unknown(j, {"kind", "num_states", "num_symbols", "transition",
                       "output"},
                   "machine.");
    const json* ns = find(j, "num_states");
    const json* ny = find(j, "num_symbols");
    const json* tr = find(j, "transition");
    const json* ou = find(j, "output");
    if (!ns || !ny || !tr || !ou)
      fail("machine", "custom needs num_states, num_symbols, transition, output");
    cfg.num_states = as_int(*ns, "machine.num_states");
    cfg.num_symbols = as_int(*ny, "machine.num_symbols");
    cfg.transition = as_int_table(*tr, "machine.transition");
    cfg.output = as_int_table(*ou, "machine.output");
  } else {
    fail("machine.kind", "expected 'tree', 'simple_loop' or 'custom'");
  }
  return cfg;
}

}  // namespace

LinearSystem integrator_preset(int n) {
  MatrixXd A = MatrixXd::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  MatrixXd B = MatrixXd::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  std::vector<VectorXd> dv{0.1 * B.col(0), -0.1 * B.col(0)};
  VectorXd ones = VectorXd::Ones(n + 1);
  return LinearSystem(std::move(A), std::move(B), std::move(dv),
                      Box(-ones, ones).to_polytope(),
                      DisturbanceMode::Measurable);
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(origin + ": top level must be an object");
  reject_unknown(j, {"description", "plant", "machine", "pipeline", "oracle",
                     "out_dir"},
                 "");
  if (const json* desc = find(j, "description"))
    as_string(*desc, "description");  // label only; validated, not used
  const json* plant = find(j, "plant");
  if (!plant) fail("plant", "required");
  RunConfig cfg{parse_plant(*plant), {}, {}, {}, "out"};
  if (const json* machine = find(j, "machine"))
    cfg.machine = parse_machine(*machine);
  if (const json* pipe = find(j, "pipeline")) {
    reject_unknown(*pipe, {"prefeedback", "lift"}, "pipeline.");
    if (const json* pf = find(*pipe, "prefeedback")) {
      const std::string v = as_string(*pf, "pipeline.prefeedback");
      if (v != "auto" && v != "none")
        fail("pipeline.prefeedback", "expected 'auto' or 'none'");
      cfg.pipeline.prefeedback_auto = v == "auto";
    }
    if (const json* lf = find(*pipe, "lift")) {
      const std::string v = as_string(*lf, "pipeline.lift");
      if (v != "auto" && v != "none")
        fail("pipeline.lift", "expected 'auto' or 'none'");
      cfg.pipeline.lift_auto = v == "auto";
    }
  }
  if (const json* oracle = find(j, "oracle")) {
    reject_unknown(*oracle, {"max_iter", "samples", "seed"}, "oracle.");
    if (const json* mi = find(*oracle, "max_iter"))
      cfg.oracle.max_iter = as_int(*mi, "oracle.max_iter");
    if (const json* sm = find(*oracle, "samples")) {
      if (!sm->is_number_integer()) fail("oracle.samples", "expected an integer");
      cfg.oracle.samples = sm->get<long long>();
    }
    if (const json* sd = find(*oracle, "seed")) {
      if (!sd->is_number_unsigned() && !sd->is_number_integer())
        fail("oracle.seed", "expected a nonnegative integer");
      cfg.oracle.seed = sd->get<std::uint64_t>();
    }
    if (cfg.oracle.max_iter < 1) fail("oracle.max_iter", "must be positive");
    if (cfg.oracle.samples < 1) fail("oracle.samples", "must be positive");
  }
  if (const json* out = find(j, "out_dir"))
    cfg.out_dir = as_string(*out, "out_dir");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path);
}

PreparedPlant prepare_plant(const LinearSystem& plant,
                            const PipelineConfig& pipeline) {
  PreparedPlant out{plant, false, false};
  if (out.sys.disturbance_mode == DisturbanceMode::NonMeasurable) {
    if (!pipeline.lift_auto)
      throw ConfigError(
          "non-measurable disturbances require the one-step delay lift; set "
          "pipeline.lift to 'auto'");
    out.sys = lift_nonmeasurable(out.sys);
    out.lifted = true;
  }
  if (!nilpotency_index(out.sys.A)) {
    if (!pipeline.prefeedback_auto)
      throw ConfigError(
          "the state matrix is not nilpotent, violating the construction's "
          "standing assumption; set pipeline.prefeedback to 'auto' to apply a "
          "deadbeat prefeedback");
    out.sys = apply_prefeedback(out.sys, deadbeat_gain(out.sys.A, out.sys.B));
    out.prefed = true;
  }
  return out;
}

MealyMachine build_machine(const MachineConfig& cfg, int num_actions, int m) {
  if (cfg.kind == "tree") {
    const int K = cfg.K > 0 ? cfg.K : num_actions;
    if (K != num_actions)
      throw ConfigError("machine.K must equal the number of disturbance "
                        "vertices (" + std::to_string(num_actions) + ")");
    return tree_machine(cfg.L, K, m);
  }
  if (cfg.kind == "simple_loop") return simple_loop(cfg.L, num_actions, m);
  MealyMachine mm(cfg.num_states, num_actions, cfg.num_symbols, m,
                  cfg.transition, cfg.output);
  return mm;
}

BuildOutcome run_pipeline(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  PreparedPlant prep = prepare_plant(cfg.plant, cfg.pipeline);
  MealyMachine machine = build_machine(
      cfg.machine, static_cast<int>(prep.sys.D_v.size()), prep.sys.m());
  ImplicitRcis rcis = compute_implicit_rcis(prep.sys, machine);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return BuildOutcome{std::move(prep), std::move(machine), std::move(rcis),
                      secs};
}

}  // namespace rcis
