#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "rcis/linsys.hpp"
#include "rcis/polytope.hpp"
#include "rcis/rcis.hpp"

namespace rcis {

// Fixed point of the safe pre-image iteration started from the projection of
// the safe set onto the state coordinates. Iterates shrink monotonically, so
// the last iterate is a valid outer bound of the maximal set even when the
// iteration limit is hit (converged=false in that case).
struct OracleResult {
  Polytope set;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
};

OracleResult maximal_rcis(const LinearSystem& plant, int max_iter = 200,
                          const ProjectOptions& opts = {});

// Monte Carlo estimate of vol(A)/vol(B) from samples drawn uniformly over a
// bounding box. The uniform draws map mt19937_64 words to [0,1) by fixed bit
// arithmetic, so a given seed reproduces the estimate bit for bit on any
// platform. half_width is the normal-approximation 95% interval on the hit
// fraction of A; degenerate flags runs where B was never hit.
struct VolumeEstimate {
  double ratio = 0.0;
  long long samples = 0;
  std::uint64_t seed = 0;
  double half_width = 0.0;
  bool degenerate = false;
  long long hits_a = 0;
  long long hits_b = 0;
};

using MemberFn = std::function<bool(const Eigen::VectorXd&)>;

VolumeEstimate mc_volume_ratio(const MemberFn& in_a, const MemberFn& in_b,
                               const Box& box, long long samples,
                               std::uint64_t seed);

// Worst-case one-step feasibility margin at state x against disturbance d:
// the largest normalized slack of an input (and fiber certificate, for the
// implicit form) keeping (x, u) safe and the successor in the set. Negative
// margin below -eps_feas means no admissible input exists.
using StepMarginFn =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

StepMarginFn step_margin_explicit(const LinearSystem& plant, const Polytope& C);
StepMarginFn step_margin_implicit(const LinearSystem& plant,
                                  const ImplicitRcis& rcis);

// Samples member states and checks the step margin against every disturbance
// vertex. States come from hit-and-run over `region` when given (member must
// accept its points), otherwise from rejection sampling of `fallback_box`
// through the member predicate. worst_slack is the smallest margin seen.
struct AuditReport {
  long long requested = 0;
  long long member_samples = 0;
  long long checks = 0;
  long long violations = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double seconds = 0.0;
};

AuditReport invariance_audit(const MemberFn& member,
                             const StepMarginFn& step_margin,
                             const LinearSystem& plant, long long n_samples,
                             std::uint64_t seed,
                             const std::optional<Polytope>& region,
                             const Box& fallback_box, double eps_feas = 1e-7);

}  // namespace rcis
