#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rcis/linsys.hpp"
#include "rcis/polytope.hpp"
#include "rcis/rcis.hpp"

namespace rcis {

enum class QpStatus { Feasible, Infeasible };

struct QpOptions {
  double tol = 1e-7;     // KKT residual and constraint violation bound
  double ridge = 1e-10;  // tiny diagonal shift making singular H solvable
  int max_iter = 0;      // 0: scale with problem size
};

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd z;  // valid iff Feasible
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
};

// Convex QP min 1/2 z'Hz + f'z over ineq (and optional Ez = e), solved by a
// primal active-set method on the small dense problem. The returned point
// satisfies the KKT conditions within tol.
QpResult qp_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                  const Polytope& ineq,
                  const std::optional<std::pair<Eigen::MatrixXd,
                                                Eigen::VectorXd>>& eq =
                      std::nullopt,
                  const QpOptions& opts = {});

// One supervised control step. When Feasible, (x, u_applied) is safe and the
// successor state is a member of the invariant set.
struct SupervisionStep {
  int t = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd d;
  Eigen::VectorXd u_nominal;
  Eigen::VectorXd u_applied;
  double correction_norm = 0.0;
  QpStatus qp_status = QpStatus::Infeasible;
};

// Minimal-correction filter against the implicit set: minimizes
// ||u_nominal - u||^2 over the input and the fiber certificate, keeping
// (x, u) safe and A x + B u + d inside the set. Infeasibility means the
// caller violated the membership precondition.
SupervisionStep supervise(const ImplicitRcis& rcis, const LinearSystem& plant,
                          const Eigen::VectorXd& x,
                          const Eigen::VectorXd& u_nominal,
                          const Eigen::VectorXd& d, const QpOptions& opts = {});

// Same filter against an explicit invariant set over the state alone.
SupervisionStep supervise_explicit(const Polytope& C, const LinearSystem& plant,
                                   const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u_nominal,
                                   const Eigen::VectorXd& d,
                                   const QpOptions& opts = {});

using NominalPolicy =
    std::function<Eigen::VectorXd(int, const Eigen::VectorXd&)>;

struct Trajectory {
  std::vector<SupervisionStep> steps;
  Eigen::VectorXd final_state;
  std::string plant_hash;
  std::string scenario_id;
};

// Closed-loop rollout of T supervised steps from x0 under the nominal policy
// and the given disturbance trace. Throws ContractBreach if any step comes
// back Infeasible, which cannot happen when x0 is a member and every d_t
// stays in conv(D_v).
Trajectory simulate(const LinearSystem& plant, const NominalPolicy& policy,
                    const ImplicitRcis& rcis,
                    const std::vector<Eigen::VectorXd>& d_trace, int T,
                    const Eigen::VectorXd& x0,
                    const std::string& scenario_id = "",
                    const QpOptions& opts = {});

Trajectory simulate_explicit(const LinearSystem& plant,
                             const NominalPolicy& policy, const Polytope& C,
                             const std::vector<Eigen::VectorXd>& d_trace, int T,
                             const Eigen::VectorXd& x0,
                             const std::string& scenario_id = "",
                             const QpOptions& opts = {});

}  // namespace rcis
