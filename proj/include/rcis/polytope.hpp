#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rcis/lp.hpp"

namespace rcis {

// H-representation {z : G z <= h}. Zero rows = whole space. Entries must be
// finite; row counts of G and h must agree.
struct Polytope {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  int dim = 0;

  Polytope(Eigen::MatrixXd G_, Eigen::VectorXd h_);
  static Polytope whole_space(int dim);
  // Canonical empty set: the single unsatisfiable row 0'z <= -1.
  static Polytope empty(int dim);

  int rows() const { return static_cast<int>(G.rows()); }
  // Pointwise membership; tolerance is scaled per row by max(1, ||g_i||).
  bool contains_point(const Eigen::VectorXd& x, double eps = 1e-7) const;
};

// Componentwise bounds, lower <= upper.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box(Eigen::VectorXd lower_, Eigen::VectorXd upper_);
  int dim() const { return static_cast<int>(lower.size()); }
  Polytope to_polytope() const;
  bool contains_point(const Eigen::VectorXd& x, double eps = 0.0) const;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd primal;  // valid iff Optimal
  double objective = std::numeric_limits<double>::quiet_NaN();
};

struct RedundancyOptions {
  double eps_red = 1e-8;
  LpOptions lp;
};

struct ProjectOptions {
  // Cap on intermediate row counts; -1 means "use default_row_cap()".
  long long row_cap = -1;
  RedundancyOptions red;
};

// The built-in cap (1e5), unless the RCIS_ROW_CAP environment variable
// overrides it.
long long default_row_cap();

struct VertexOptions {
  int dim_cap = 4;
  double eps_vert = 1e-7;
  RedundancyOptions red;
};

LpResult lp_solve(const Eigen::VectorXd& objective, LpSense sense,
                  const Polytope& poly, const LpOptions& opts = {});

bool is_empty(const Polytope& poly, const LpOptions& opts = {});

// True iff every point of inner lies in outer, facet-by-facet via lp_solve.
bool contains(const Polytope& outer, const Polytope& inner, double tol = 1e-7,
              const LpOptions& opts = {});

// Exact Fourier-Motzkin projection onto the kept coordinates (0-based),
// followed by redundancy removal. Output columns follow the order of `keep`.
Polytope project(const Polytope& poly, const std::vector<int>& keep,
                 const ProjectOptions& opts = {});

Polytope remove_redundancy(const Polytope& poly,
                           const RedundancyOptions& opts = {});

Box bounding_box(const Polytope& poly, double margin_factor = 1.0 + 1e-6,
                 const LpOptions& opts = {});

Polytope intersect(const Polytope& a, const Polytope& b);

std::vector<Eigen::VectorXd> vertices(const Polytope& poly,
                                      const VertexOptions& opts = {});

// Max-margin interior point (Chebyshev center when bounded); feasible=false
// iff the polytope is empty.
FeasResult feasible_point(const Polytope& poly, const LpOptions& opts = {});

}  // namespace rcis
