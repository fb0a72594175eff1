// Command-line front end: configuration ingestion, pipeline orchestration,
// artifact and plot emission.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rcis/artifacts.hpp"
#include "rcis/config.hpp"
#include "rcis/errors.hpp"
#include "rcis/lp.hpp"
#include "rcis/mealy.hpp"
#include "rcis/oracle.hpp"
#include "rcis/rcis.hpp"
#include "rcis/supervisor.hpp"

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success (including an empty invariant set)\n"
    "  1  unexpected internal error\n"
    "  2  configuration, schema or usage error\n"
    "  3  safety contract breach (supervision infeasible)\n"
    "  4  numerical failure\n"
    "  5  resource limit exceeded (row/state caps, dimension caps)\n"
    "  6  input/output failure\n";

struct Options {
  std::string config_path;
  std::string rcis_path = "rcis.json";
  std::string scenario_path;
  std::string out_dir;
  std::string point;
  std::string machine_override;
  std::optional<std::uint64_t> seed;
  std::optional<long long> samples;
  std::optional<int> max_iter;
  int loop_L = 14;
  bool want_explicit = false;
};

VectorXd parse_point(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw rcis::ConfigError("cannot parse coordinate '" + item + "'");
    }
  }
  if (vals.empty()) throw rcis::ConfigError("empty point");
  VectorXd x(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) x[static_cast<int>(i)] = vals[i];
  return x;
}

rcis::MachineConfig parse_machine_override(const std::string& spec) {
  // Formats: tree:L[:K] and simple_loop:L.
  rcis::MachineConfig cfg;
  std::stringstream ss(spec);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.empty()) throw rcis::ConfigError("empty --machine spec");
  cfg.kind = parts[0];
  try {
    if (cfg.kind == "tree") {
      if (parts.size() < 2 || parts.size() > 3)
        throw rcis::ConfigError("--machine tree:L[:K]");
      cfg.L = std::stoi(parts[1]);
      cfg.K = parts.size() == 3 ? std::stoi(parts[2]) : 0;
    } else if (cfg.kind == "simple_loop") {
      if (parts.size() != 2) throw rcis::ConfigError("--machine simple_loop:L");
      cfg.L = std::stoi(parts[1]);
    } else {
      throw rcis::ConfigError("--machine supports 'tree:L[:K]' and "
                              "'simple_loop:L'");
    }
  } catch (const std::invalid_argument&) {
    throw rcis::ConfigError("non-numeric field in --machine spec '" + spec +
                            "'");
  }
  return cfg;
}

rcis::RunConfig load_config(const Options& opt) {
  if (opt.config_path.empty())
    throw rcis::ConfigError("--config is required for this command");
  rcis::RunConfig cfg = rcis::load_run_config(opt.config_path);
  if (!opt.machine_override.empty())
    cfg.machine = parse_machine_override(opt.machine_override);
  if (opt.seed) cfg.oracle.seed = *opt.seed;
  if (opt.samples) cfg.oracle.samples = *opt.samples;
  if (opt.max_iter) cfg.oracle.max_iter = *opt.max_iter;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  return cfg;
}

std::string machine_label(const rcis::MachineConfig& cfg, int K) {
  if (cfg.kind == "tree")
    return "tree L=" + std::to_string(cfg.L) + " K=" +
           std::to_string(cfg.K > 0 ? cfg.K : K);
  if (cfg.kind == "simple_loop") return "simple_loop L=" + std::to_string(cfg.L);
  return "custom";
}

Eigen::VectorXd json_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw rcis::ConfigError(what + ": expected an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw rcis::ConfigError(what + ": expected numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

rcis::Box safe_state_box(const rcis::LinearSystem& sys) {
  std::vector<int> keep(sys.n());
  std::iota(keep.begin(), keep.end(), 0);
  return rcis::bounding_box(rcis::project(sys.S, keep));
}

int cmd_build(const Options& opt) {
  rcis::RunConfig cfg = load_config(opt);
  rcis::BuildOutcome outcome = rcis::run_pipeline(cfg);
  std::filesystem::create_directories(cfg.out_dir);

  std::optional<rcis::Polytope> proj;
  if (opt.want_explicit && outcome.rcis.kind != rcis::RcisKind::Empty)
    proj = rcis::explicit_projection(outcome.rcis);
  rcis::write_file(cfg.out_dir + "/rcis.json",
                   rcis::rcis_to_json(outcome.rcis, proj));
  rcis::write_file(cfg.out_dir + "/report.json", rcis::report_to_json(outcome));
  if (proj && outcome.rcis.n == 2) {
    rcis::Polytope ref = safe_state_box(outcome.prep.sys).to_polytope();
    rcis::write_file(cfg.out_dir + "/set.svg",
                     rcis::svg_polytope2d(*proj, ref, "invariant set"));
  }

  switch (outcome.rcis.kind) {
    case rcis::RcisKind::SingleCsub:
      std::cout << "kind: single (dominant state "
                << outcome.rcis.machine.state_names[outcome.rcis.dominant_state]
                << ")\n";
      break;
    case rcis::RcisKind::Lambda:
      std::cout << "kind: lambda (|Q0| = " << outcome.rcis.q0.size() << ")\n";
      break;
    case rcis::RcisKind::Empty:
      std::cout << "kind: empty\n"
                << "the invariant set is empty for this configuration\n";
      break;
  }
  std::printf("seconds: %.3f\n", outcome.seconds);
  std::cout << "wrote " << cfg.out_dir << "/rcis.json and report.json\n";
  return 0;
}

int cmd_check(const Options& opt) {
  rcis::ImplicitRcis rcis_set =
      rcis::rcis_from_json(rcis::read_file(opt.rcis_path));
  VectorXd x = parse_point(opt.point);
  std::optional<VectorXd> cert = rcis::fiber_point(rcis_set, x);
  std::cout << "x: " << x.transpose() << "\n";
  std::cout << "member: " << (cert ? "true" : "false") << "\n";
  if (cert) {
    std::cout << "certificate:";
    for (int i = 0; i < cert->size(); ++i) std::printf(" %.12g", (*cert)[i]);
    std::cout << "\n";
  }
  return 0;
}

int cmd_compare(const Options& opt) {
  rcis::RunConfig cfg = load_config(opt);
  std::filesystem::create_directories(cfg.out_dir);
  rcis::PreparedPlant prep = rcis::prepare_plant(cfg.plant, cfg.pipeline);

  rcis::OracleResult oracle =
      rcis::maximal_rcis(cfg.plant, cfg.oracle.max_iter);
  if (!oracle.converged)
    std::cerr << "warning: reference iteration hit the cap; volumes are "
                 "relative to an outer bound\n";
  rcis::Box box = rcis::bounding_box(oracle.set);
  rcis::MemberFn in_oracle = [&](const VectorXd& x) {
    return oracle.set.contains_point(x, 1e-9);
  };

  std::vector<rcis::CompareRow> rows;
  rows.push_back({"oracle", oracle.wall_time, 100.0});

  const auto arm = [&](const rcis::MachineConfig& mc) {
    const auto t0 = std::chrono::steady_clock::now();
    rcis::MealyMachine mm = rcis::build_machine(
        mc, static_cast<int>(prep.sys.D_v.size()), prep.sys.m());
    rcis::ImplicitRcis rc = rcis::compute_implicit_rcis(prep.sys, mm);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    double pct = 0.0;
    if (rc.kind != rcis::RcisKind::Empty) {
      // States live in the original coordinates; the prepared plant only
      // renames inputs, so membership transfers directly.
      rcis::MemberFn in_ours = [&](const VectorXd& x) {
        return rcis::membership(rc, x);
      };
      rcis::VolumeEstimate est = rcis::mc_volume_ratio(
          in_ours, in_oracle, box, cfg.oracle.samples, cfg.oracle.seed);
      pct = est.degenerate ? 0.0 : 100.0 * est.ratio;
    }
    rows.push_back({machine_label(mc, static_cast<int>(prep.sys.D_v.size())),
                    secs, pct});
  };

  arm(cfg.machine);
  rcis::MachineConfig loop;
  loop.kind = "simple_loop";
  loop.L = opt.loop_L;
  arm(loop);

  const std::string csv = rcis::compare_csv(rows);
  rcis::write_file(cfg.out_dir + "/compare.csv", csv);
  std::cout << csv;
  return 0;
}

struct Scenario {
  std::string id = "scenario";
  VectorXd x0;
  int T = 50;
  rcis::NominalPolicy policy;
  std::function<VectorXd(int)> disturbance;
};

Scenario load_scenario(const std::string& path, const rcis::LinearSystem& sys) {
  json j;
  try {
    j = json::parse(rcis::read_file(path));
  } catch (const json::parse_error& e) {
    throw rcis::ConfigError(path + ": " + e.what());
  }
  for (const auto& [key, _] : j.items())
    if (key != "id" && key != "x0" && key != "T" && key != "policy" &&
        key != "disturbance")
      throw rcis::ConfigError("scenario key '" + key +
                              "' is not part of the schema");
  Scenario sc;
  sc.id = j.value("id", "scenario");
  if (!j.contains("x0")) throw rcis::ConfigError("scenario needs 'x0'");
  sc.x0 = json_vector(j["x0"], "scenario.x0");
  sc.T = j.value("T", 50);
  if (sc.T < 1) throw rcis::ConfigError("scenario.T must be positive");

  const json pol = j.value("policy", json{{"kind", "zero"}});
  const std::string pk = pol.value("kind", "zero");
  const int m = sys.m();
  if (pk == "zero") {
    sc.policy = [m](int, const VectorXd&) { return VectorXd::Zero(m); };
  } else if (pk == "gain") {
    if (!pol.contains("K")) throw rcis::ConfigError("gain policy needs 'K'");
    MatrixXd K(pol["K"].size(), sys.n());
    for (size_t r = 0; r < pol["K"].size(); ++r)
      K.row(static_cast<int>(r)) =
          json_vector(pol["K"][r], "policy.K").transpose();
    if (K.rows() != m)
      throw rcis::ConfigError("policy.K must have one row per input");
    sc.policy = [K](int, const VectorXd& x) { return VectorXd(K * x); };
  } else if (pk == "constant") {
    if (!pol.contains("u")) throw rcis::ConfigError("constant policy needs 'u'");
    VectorXd u = json_vector(pol["u"], "policy.u");
    sc.policy = [u](int, const VectorXd&) { return u; };
  } else {
    throw rcis::ConfigError("policy.kind must be zero, gain or constant");
  }

  const json dist = j.value("disturbance", json{{"kind", "zeros"}});
  const std::string dk = dist.value("kind", "zeros");
  const int n = sys.n();
  if (dk == "zeros") {
    sc.disturbance = [n](int) { return VectorXd::Zero(n); };
  } else if (dk == "vertex_switching") {
    const int period = dist.value("period", 1);
    if (period < 1) throw rcis::ConfigError("disturbance.period must be >= 1");
    const std::vector<VectorXd> dv = sys.D_v;
    sc.disturbance = [dv, period](int t) {
      return dv[(t / period) % dv.size()];
    };
  } else if (dk == "trace") {
    if (!dist.contains("values"))
      throw rcis::ConfigError("trace disturbance needs 'values'");
    std::vector<VectorXd> vals;
    for (size_t i = 0; i < dist["values"].size(); ++i)
      vals.push_back(json_vector(dist["values"][i], "disturbance.values"));
    if (static_cast<int>(vals.size()) < sc.T)
      throw rcis::ConfigError("disturbance trace shorter than T");
    sc.disturbance = [vals](int t) { return vals[t]; };
  } else {
    throw rcis::ConfigError(
        "disturbance.kind must be zeros, vertex_switching or trace");
  }
  return sc;
}

int cmd_simulate(const Options& opt) {
  rcis::RunConfig cfg = load_config(opt);
  std::filesystem::create_directories(cfg.out_dir);
  rcis::BuildOutcome outcome = rcis::run_pipeline(cfg);
  if (outcome.rcis.kind == rcis::RcisKind::Empty)
    throw rcis::Infeasible("the invariant set is empty; nothing to supervise");
  if (opt.scenario_path.empty())
    throw rcis::ConfigError("--scenario is required for simulate");
  Scenario sc = load_scenario(opt.scenario_path, outcome.prep.sys);

  std::vector<VectorXd> d_trace;
  for (int t = 0; t < sc.T; ++t) d_trace.push_back(sc.disturbance(t));
  rcis::Trajectory traj = rcis::simulate(outcome.prep.sys, sc.policy,
                                         outcome.rcis, d_trace, sc.T, sc.x0,
                                         sc.id);
  rcis::write_file(cfg.out_dir + "/trajectory.csv",
                   rcis::trajectory_csv(traj));

  rcis::Box bx = safe_state_box(outcome.prep.sys);
  std::vector<std::pair<double, double>> bands;
  for (int i = 0; i < bx.dim(); ++i)
    bands.emplace_back(bx.lower[i], bx.upper[i]);
  rcis::write_file(cfg.out_dir + "/trajectory.svg",
                   rcis::svg_trajectory(traj, bands, "scenario " + sc.id));

  if (opt.want_explicit) {
    rcis::Polytope proj = rcis::explicit_projection(outcome.rcis);
    rcis::Trajectory te =
        rcis::simulate_explicit(outcome.prep.sys, sc.policy, proj, d_trace,
                                sc.T, sc.x0, sc.id + "-explicit");
    rcis::write_file(cfg.out_dir + "/trajectory_explicit.csv",
                     rcis::trajectory_csv(te));
  }

  double max_corr = 0.0;
  for (const rcis::SupervisionStep& st : traj.steps)
    max_corr = std::max(max_corr, st.correction_norm);
  std::printf("steps: %d, max correction: %.6g\n",
              static_cast<int>(traj.steps.size()), max_corr);
  std::cout << "wrote " << cfg.out_dir << "/trajectory.csv and trajectory.svg\n";
  return 0;
}

int cmd_inspect_machine(const Options& opt) {
  rcis::RunConfig cfg = load_config(opt);
  rcis::PreparedPlant prep = rcis::prepare_plant(cfg.plant, cfg.pipeline);
  rcis::MealyMachine mm = rcis::build_machine(
      cfg.machine, static_cast<int>(prep.sys.D_v.size()), prep.sys.m());
  std::cout << "machine: "
            << machine_label(cfg.machine,
                             static_cast<int>(prep.sys.D_v.size()))
            << "\n";
  std::optional<int> dom = rcis::find_dominant(mm);
  if (dom) {
    bool all_mutual = mm.num_states <= 32;
    for (int a = 0; all_mutual && a < mm.num_states; ++a)
      for (int b = 0; all_mutual && b < mm.num_states; ++b)
        if (a != b && !rcis::dominates(mm, a, b)) all_mutual = false;
    std::cout << "dominant: " << mm.state_names[*dom]
              << (all_mutual && mm.num_states > 1 ? " (all mutually dominant)"
                                                  : "")
              << "; |Q| = " << mm.num_states << "\n";
  } else {
    std::vector<int> q0 = rcis::maximal_partition(mm);
    std::cout << "dominant: none; |Q| = " << mm.num_states << "\n";
    std::cout << "Q0 = {";
    for (size_t i = 0; i < q0.size(); ++i)
      std::cout << (i ? ", " : "") << mm.state_names[q0[i]];
    std::cout << "}; the hull-lift (lambda) path will be used\n";
  }
  return 0;
}

int dispatch(int (*fn)(const Options&), const Options& opt) {
  try {
    return fn(opt);
  } catch (const rcis::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rcis::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rcis::ContractBreach& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const rcis::Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const rcis::ExplosionLimit& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const rcis::StateCountExceedsCap& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const rcis::ReachSetExceedsCap& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const rcis::DimensionTooHigh& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const rcis::NumericalFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const rcis::Unbounded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const rcis::UnboundedCsub& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const rcis::NotControllable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const rcis::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-form implicit robust controlled invariant sets for "
               "linear systems with polytopic disturbances"};
  app.footer(kExitCodes);
  app.require_subcommand(1);

  Options opt;
  int (*run)(const Options&) = nullptr;

  const auto common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", opt.config_path, "run configuration (JSON)");
    sub->add_option("--out", opt.out_dir, "output directory override");
    sub->add_option("--seed", opt.seed, "sampling seed override");
    sub->add_option("--samples", opt.samples, "sample count override");
    sub->add_option("--max-iter", opt.max_iter,
                    "reference iteration cap override");
    sub->add_option("--machine", opt.machine_override,
                    "machine preset override: tree:L[:K] or simple_loop:L");
  };

  CLI::App* build = app.add_subcommand("build", "compute the invariant set");
  common(build, true);
  build->add_flag("--explicit", opt.want_explicit,
                  "also store the explicit state-space projection");
  build->callback([&] { run = cmd_build; });

  CLI::App* check = app.add_subcommand("check", "membership of a state");
  check->add_option("--rcis", opt.rcis_path, "path to a stored rcis.json");
  check->add_option("--point", opt.point, "state, comma separated")->required();
  check->callback([&] { run = cmd_check; });

  CLI::App* compare = app.add_subcommand(
      "compare", "volume and timing against the reference iteration");
  common(compare, true);
  compare->add_option("--loop-L", opt.loop_L,
                      "window length of the comparison loop machine");
  compare->callback([&] { run = cmd_compare; });

  CLI::App* simulate =
      app.add_subcommand("simulate", "supervised closed-loop rollout");
  common(simulate, true);
  simulate->add_option("--scenario", opt.scenario_path,
                       "scenario description (JSON)");
  simulate->add_flag("--explicit", opt.want_explicit,
                     "also run the explicit-set comparison arm");
  simulate->callback([&] { run = cmd_simulate; });

  CLI::App* inspect =
      app.add_subcommand("inspect-machine", "dominance structure report");
  common(inspect, true);
  inspect->callback([&] { run = cmd_inspect_machine; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return dispatch(run, opt);
}
