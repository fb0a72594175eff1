#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rcis/linsys.hpp"
#include "rcis/mealy.hpp"
#include "rcis/polytope.hpp"

namespace rcis {

// Plant composed with a disturbance-feedback machine: actions index the
// disturbance vertices, output symbols index R^m blocks of the parameter
// vector theta.
struct AugmentedSystem {
  LinearSystem plant;
  MealyMachine machine;
  int n = 0;  // plant state dimension
  int m = 0;  // plant input dimension
  int L = 0;  // machine output symbol count

  AugmentedSystem(LinearSystem plant_, MealyMachine machine_);
};

// Plant state reached symbolically: x' = Cx * x + Ctheta * theta + c.
// Cx vanishes once the path length reaches the nilpotency index.
struct SymbolicReachState {
  int auto_state = 0;
  Eigen::MatrixXd Cx;      // n x n
  Eigen::MatrixXd Ctheta;  // n x (m L)
  Eigen::VectorXd c;       // n
};

struct RcisOptions {
  long long reach_cap = 1000000;
  double eps_dedup = 1e-9;
  RedundancyOptions red;
};

enum class RcisKind { SingleCsub, Lambda, Empty };

struct CsubStats {
  int state = -1;
  long long reach_states = 0;
  long long rows_raw = 0;
  long long rows_reduced = 0;
  double seconds = 0.0;
};

struct RcisReport {
  bool dominant_path = false;
  std::vector<CsubStats> per_state;
  double total_seconds = 0.0;
};

// Implicit invariant set over (x, theta) lift variables. SingleCsub stores
// one constraint set; Lambda stores the convex-hull lift over the bounded
// per-state blocks with layout (x, theta, x_1, theta_1, ..., lambda_1..N).
struct ImplicitRcis {
  RcisKind kind = RcisKind::Empty;
  int n = 0, m = 0, L = 0;
  int dominant_state = -1;            // SingleCsub only
  std::optional<Polytope> csub;       // SingleCsub: over (x, theta)
  std::vector<int> q0;                // Lambda: machine state per block
  std::vector<Polytope> blocks;       // Lambda: bounded per-state sets
  std::optional<Polytope> clambda;    // Lambda: lifted polytope
  MealyMachine machine;
  std::string plant_digest;
  RcisReport report;

  ImplicitRcis(RcisKind kind_, int n_, int m_, int L_, MealyMachine machine_,
               std::string plant_digest_)
      : kind(kind_), n(n_), m(m_), L(L_), machine(std::move(machine_)),
        plant_digest(std::move(plant_digest_)) {}
};

// Breadth-first closure of symbolic states from (s0, identity map), stepping
// once per disturbance vertex, deduplicated at eps_dedup. Includes the
// initial state. Deterministic order: depth, then discovery, then action.
std::vector<SymbolicReachState> enumerate_reachable(const AugmentedSystem& aug,
                                                    int s0,
                                                    const RcisOptions& opts =
                                                        {});

// Raw constraint rows over (x, theta): for every reachable symbolic state and
// every action, the safe-set rows at the symbolic successor input pair.
Polytope build_csub_raw(const AugmentedSystem& aug, int s,
                        const RcisOptions& opts = {});

// build_csub_raw plus bounds on symbol blocks the closure never emits
// (clamped to the safe input range; state projection unaffected), then
// redundancy removal.
Polytope build_csub(const AugmentedSystem& aug, int s,
                    const RcisOptions& opts = {});

// Convex-hull lift: variables (z, z_1..z_N, lambda_1..N) with block rows
// G_i z_i <= lambda_i h_i, lambda >= 0, sum lambda = 1, sum z_i = z. Blocks
// must be bounded; boxes are intersected in first.
Polytope build_clambda(const std::vector<Polytope>& blocks,
                       const std::vector<Box>& boxes);

// Dominant-state fast path when one exists, otherwise the hull lift over the
// maximal-state representatives; empty blocks are dropped, and an all-empty
// result is the distinguished Empty kind.
ImplicitRcis compute_implicit_rcis(const LinearSystem& plant,
                                   const MealyMachine& machine,
                                   const RcisOptions& opts = {});

// True iff the fiber over x (theta, and lift variables for Lambda) is
// nonempty.
bool membership(const ImplicitRcis& rcis, const Eigen::VectorXd& x,
                const LpOptions& opts = {});

// Explicit state-space H-representation by projection onto the first n
// coordinates. State dimensions 1 and 2 use exact support refinement (one
// LP per probe); higher dimensions eliminate variables under the row cap.
Polytope explicit_projection(const ImplicitRcis& rcis,
                             const ProjectOptions& opts = {});

// Certificate for membership: a point of the non-state variables whose
// pairing with x satisfies the set polytope; nullopt outside the set.
std::optional<Eigen::VectorXd> fiber_point(const ImplicitRcis& rcis,
                                           const Eigen::VectorXd& x,
                                           const LpOptions& opts = {});

// Constraint rows M z <= rhs over z = (u, w) for "applying u at x against
// disturbance d keeps (x, u) safe and the successor in the set": w is theta
// for SingleCsub, all non-state lift variables for Lambda.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> one_step_rows(
    const ImplicitRcis& rcis, const LinearSystem& plant,
    const Eigen::VectorXd& x, const Eigen::VectorXd& d);

// Stable digest of the plant data for provenance tracking.
std::string plant_digest(const LinearSystem& sys);

}  // namespace rcis
