#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace rcis {

enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class LpSense { Min, Max };

struct LpOptions {
  double eps_feas = 1e-7;    // feasibility tolerance on returned points
  double tol_pivot = 1e-9;   // pivot / reduced-cost threshold
  int max_iter = 400000;     // per-phase iteration cap
};

// Result of a raw LP over {x : G x <= h}. x and objective are valid only when
// status == Optimal.
struct LpCoreResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

// Maximize c'x over {x : G x <= h}. Solved in the dual so the simplex basis
// has size G.cols() regardless of the row count.
LpCoreResult lp_max(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                    const Eigen::VectorXd& c, const LpOptions& opts = {});

// Same problem restricted to the given subset of rows of (G, h).
LpCoreResult lp_max_rows(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                         const std::vector<int>& rows,
                         const Eigen::VectorXd& c, const LpOptions& opts = {});

// Feasibility with margin: maximizes the slack t in G x + t <= h (per row,
// after internal row normalization), t capped at 1. feasible iff the optimal
// margin >= -eps_feas. x is a max-margin point when feasible. A violated
// all-zero row reports its raw offset as the margin.
struct FeasResult {
  bool feasible = false;
  Eigen::VectorXd x;
  double margin = std::numeric_limits<double>::quiet_NaN();
};
FeasResult lp_feasible(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                       const LpOptions& opts = {});
FeasResult lp_feasible_rows(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                            const std::vector<int>& rows,
                            const LpOptions& opts = {});

// Decides whether max c'x over the row subset stays below cutoff. Exits as
// soon as a dual-feasible value certifies the bound, so deeply redundant
// constraints are cheap to certify. The certificate requires a nonempty
// feasible set; assume_feasible skips the check when the caller has already
// established it.
enum class BoundVerdict { ProvedBelow, Above, Infeasible };
struct BoundResult {
  BoundVerdict verdict = BoundVerdict::Infeasible;
  double value = std::numeric_limits<double>::quiet_NaN();
};
BoundResult lp_max_below(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                         const std::vector<int>& rows,
                         const Eigen::VectorXd& c, double cutoff,
                         const LpOptions& opts = {},
                         bool assume_feasible = false);

}  // namespace rcis
