#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rcis/polytope.hpp"

namespace rcis {

enum class DisturbanceMode { Measurable, NonMeasurable };

// State feedback u = Kx + v making A + BK nilpotent; apply_prefeedback fills
// original_S so supervisor outputs can be mapped back to original inputs.
struct FeedbackTransform {
  Eigen::MatrixXd K;
  std::optional<Polytope> original_S;
};

// x(t+1) = A x(t) + B u(t) + d(t) with d ranging over conv(D_v) and the
// safe polytope S over the stacked vector (x, u).
struct LinearSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::vector<Eigen::VectorXd> D_v;
  Polytope S;
  DisturbanceMode disturbance_mode = DisturbanceMode::Measurable;

  std::optional<int> h_nilp;  // computed at construction
  bool lifted = false;        // true for one-step-delay lifts
  int orig_n = -1;            // pre-lift state dimension when lifted
  std::optional<FeedbackTransform> prefeedback;  // recorded transform, if any

  LinearSystem(Eigen::MatrixXd A_, Eigen::MatrixXd B_,
               std::vector<Eigen::VectorXd> D_v_, Polytope S_,
               DisturbanceMode mode);

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

// Smallest h <= n with ||A^h||_inf below eps_nilp scaled by max(1,||A||_inf)^h;
// nullopt when A is not nilpotent.
std::optional<int> nilpotency_index(const Eigen::MatrixXd& A,
                                    double eps_nilp = 1e-9);

// Deadbeat gain: all closed-loop eigenvalues at zero. Single input uses
// Ackermann's formula; multiple inputs use the controllability-chain
// (controller-form) construction. A gain of zero is returned when A is
// already nilpotent. The resulting K is one valid choice among many.
FeedbackTransform deadbeat_gain(const Eigen::MatrixXd& A,
                                const Eigen::MatrixXd& B);

// Substitutes u = Kx + v: A' = A + BK, safe set rewritten over (x, v).
LinearSystem apply_prefeedback(const LinearSystem& sys,
                               const FeedbackTransform& fb);

// Vertices of a polytopic disturbance set (delegates to polytope vertices).
std::vector<Eigen::VectorXd> disturbance_vertices(const Polytope& D);

// One-step-delay lift for non-measurable disturbances: state (x, u), input v,
// dynamics x+ = Ax + Bu + d, u+ = v, safe set S x R^m; the disturbance of the
// lifted system is measurable. An RCIS of the lift projects onto the first n
// coordinates to give an RCIS of the original system.
LinearSystem lift_nonmeasurable(const LinearSystem& sys);

}  // namespace rcis
