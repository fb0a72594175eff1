#include <cmath>
#include <random>

#include "doctest.h"
#include "rcis/errors.hpp"
#include "rcis/linsys.hpp"
#include "rcis/lp.hpp"
#include "rcis/mealy.hpp"
#include "rcis/oracle.hpp"
#include "rcis/rcis.hpp"
#include "test_util.hpp"

using namespace rcis;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Reference values derived by hand, written before the library calls below.
//
// Scalar plant x+ = a*x + u + d with |x| <= 1, |u| <= umax, |d| <= w.
// An interval [-c, c] is robustly invariant iff some admissible input maps
// its worst corner back inside: a*c + w - umax <= c. For a > 1 the largest
// such c is cstar = (umax - w) / (a - 1), and the iteration started from
// [-1, 1] obeys c_{k+1} = (c_k + (umax - w)) / a, a geometric approach to
// cstar that never lands exactly, so convergence is by tolerance.
constexpr double kA = 2.0;
constexpr double kUmax = 0.5;
constexpr double kW = 0.1;
constexpr double kCstar = (kUmax - kW) / (kA - 1.0);  // 0.4

// Chain of integrators: x+ = (I + N) x + B (u + d), N the upper shift,
// B = e_n, |d| <= 0.1, box safe set. The state-space disturbance vertices
// are +-0.1 * B regardless of n.
LinearSystem integrator(int n) {
  MatrixXd A = MatrixXd::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  MatrixXd B = MatrixXd::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  std::vector<VectorXd> dv{0.1 * B.col(0), -0.1 * B.col(0)};
  VectorXd ones = VectorXd::Ones(n + 1);
  Polytope S = Box(-ones, ones).to_polytope();
  return LinearSystem(A, B, dv, S, DisturbanceMode::Measurable);
}

LinearSystem scalar_system(double a, double umax, double w,
                           DisturbanceMode mode) {
  MatrixXd A = MatrixXd::Constant(1, 1, a);
  MatrixXd B = MatrixXd::Constant(1, 1, 1.0);
  std::vector<VectorXd> dv{VectorXd::Constant(1, w),
                           VectorXd::Constant(1, -w)};
  VectorXd lo(2), hi(2);
  lo << -1.0, -umax;
  hi << 1.0, umax;
  return LinearSystem(A, B, dv, Box(lo, hi).to_polytope(), mode);
}

Polytope interval(double lo, double hi) {
  MatrixXd G(2, 1);
  G << 1.0, -1.0;
  VectorXd h(2);
  h << hi, -lo;
  return Polytope(G, h);
}

// Per-vertex one-step rows over u alone, for probing admissible inputs.
std::pair<MatrixXd, VectorXd> input_rows(const LinearSystem& sys,
                                         const Polytope& C, const VectorXd& x,
                                         const VectorXd& d) {
  const int n = sys.n();
  const int m = sys.m();
  MatrixXd M(sys.S.rows() + C.rows(), m);
  VectorXd rhs(sys.S.rows() + C.rows());
  M.topRows(sys.S.rows()) = sys.S.G.rightCols(m);
  rhs.head(sys.S.rows()) = sys.S.h - sys.S.G.leftCols(n) * x;
  M.bottomRows(C.rows()) = C.G * sys.B;
  rhs.tail(C.rows()) = C.h - C.G * (sys.A * x + d);
  return {M, rhs};
}

const OracleResult& integrator2_result() {
  static const OracleResult res = maximal_rcis(integrator(2));
  return res;
}

double unit01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

}  // namespace

TEST_CASE("oracle: memoryless plant converges to the safe box in one step") {
  MatrixXd A = MatrixXd::Zero(2, 2);
  MatrixXd B = MatrixXd::Identity(2, 2);
  std::vector<VectorXd> dv{VectorXd::Zero(2)};
  VectorXd ones = VectorXd::Ones(4);
  LinearSystem sys(A, B, dv, Box(-ones, ones).to_polytope(),
                   DisturbanceMode::Measurable);

  OracleResult res = maximal_rcis(sys);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(res.wall_time >= 0.0);
  VectorXd xo = VectorXd::Ones(2);
  Polytope expected = Box(-xo, xo).to_polytope();
  CHECK(contains(expected, res.set, 1e-9));
  CHECK(contains(res.set, expected, 1e-9));
}

TEST_CASE("oracle: unstable scalar iteration reaches the closed-form interval") {
  LinearSystem sys = scalar_system(kA, kUmax, kW, DisturbanceMode::Measurable);
  OracleResult res = maximal_rcis(sys);
  CHECK(res.converged);
  // Geometric approach: roughly -log2(1e-7 / 0.6) doublings.
  CHECK(res.iterations >= 10);
  CHECK(res.iterations <= 60);
  CHECK(contains(interval(-kCstar - 1e-5, kCstar + 1e-5), res.set, 1e-9));
  CHECK(contains(res.set, interval(-kCstar + 1e-5, kCstar - 1e-5), 1e-9));
}

TEST_CASE("oracle: iteration cap leaves a flagged outer bound") {
  LinearSystem sys = scalar_system(kA, kUmax, kW, DisturbanceMode::Measurable);
  OracleResult res = maximal_rcis(sys, 3);
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 3);
  // c_1 = 0.7, c_2 = 0.55, c_3 = 0.475: still an outer bound of [-0.4, 0.4].
  CHECK(contains(res.set, interval(-kCstar, kCstar), 1e-7));
  CHECK(contains(interval(-0.475 - 1e-6, 0.475 + 1e-6), res.set, 1e-9));
}

TEST_CASE("oracle: planar integrator set is nonempty inside the safe box") {
  const OracleResult& res = integrator2_result();
  CHECK(res.converged);
  CHECK_FALSE(is_empty(res.set));
  VectorXd ones = VectorXd::Ones(2);
  CHECK(contains(Box(-ones, ones).to_polytope(), res.set, 1e-7));
  CHECK(res.set.contains_point(VectorXd::Zero(2)));
  // Strictly smaller than the box: the corner (1, 1) leaves through x1.
  VectorXd corner = VectorXd::Ones(2);
  CHECK_FALSE(res.set.contains_point(corner, 1e-6));
}

TEST_CASE("oracle: delay lift reproduces the direct construction") {
  // Memoryless case first: the lift adds a stored-input coordinate but the
  // projected fixed point must match the direct non-measurable run.
  LinearSystem flat = scalar_system(0.0, 0.5, 0.1, DisturbanceMode::NonMeasurable);
  OracleResult direct_flat = maximal_rcis(flat);
  OracleResult lifted_flat = maximal_rcis(lift_nonmeasurable(flat));
  Polytope proj_flat = project(lifted_flat.set, {0});
  CHECK(contains(direct_flat.set, proj_flat, 1e-6));
  CHECK(contains(proj_flat, direct_flat.set, 1e-6));

  // Unstable case, with and without a deadbeat prefeedback. All four runs
  // must agree on [-cstar, cstar]: renaming the input u = Kx + v does not
  // change the closed-loop trajectories.
  LinearSystem sys = scalar_system(kA, kUmax, kW, DisturbanceMode::NonMeasurable);
  OracleResult direct = maximal_rcis(sys);
  Polytope proj = project(maximal_rcis(lift_nonmeasurable(sys)).set, {0});
  FeedbackTransform fb = deadbeat_gain(sys.A, sys.B);
  LinearSystem pf = apply_prefeedback(sys, fb);
  CHECK(nilpotency_index(pf.A).has_value());
  OracleResult direct_pf = maximal_rcis(pf);
  Polytope proj_pf = project(maximal_rcis(lift_nonmeasurable(pf)).set, {0});

  Polytope star = interval(-kCstar, kCstar);
  for (const Polytope* P : {&direct.set, &proj, &direct_pf.set, &proj_pf}) {
    CHECK(contains(star, *P, 2e-6));
    CHECK(contains(*P, star, 2e-6));
  }
}

TEST_CASE("oracle: volume ratio of a set against itself is exactly one") {
  VectorXd lo = VectorXd::Constant(2, -1.0);
  VectorXd hi = VectorXd::Constant(2, 1.0);
  Box outer(lo, hi);
  Box inner(0.5 * lo, 0.5 * hi);
  MemberFn in_inner = [&](const VectorXd& x) { return inner.contains_point(x); };
  VolumeEstimate est = mc_volume_ratio(in_inner, in_inner, outer, 2000, 7);
  CHECK(est.ratio == 1.0);
  CHECK(est.hits_a == est.hits_b);
  CHECK(est.hits_a > 100);
  CHECK_FALSE(est.degenerate);
  CHECK(est.half_width > 0.0);
}

TEST_CASE("oracle: half-space split estimates one half") {
  VectorXd lo = VectorXd::Constant(2, -1.0);
  VectorXd hi = VectorXd::Constant(2, 1.0);
  Box box(lo, hi);
  MemberFn in_half = [](const VectorXd& x) { return x[0] >= 0.0; };
  MemberFn always = [](const VectorXd&) { return true; };
  VolumeEstimate est = mc_volume_ratio(in_half, always, box, 10000, 1234);
  CHECK(est.hits_b == 10000);
  CHECK(std::abs(est.ratio - 0.5) < 0.03);
  CHECK(std::abs(est.half_width - 0.0098) < 0.002);
}

TEST_CASE("oracle: seeded volume estimates repeat bit for bit") {
  VectorXd lo = VectorXd::Constant(3, -2.0);
  VectorXd hi = VectorXd::Constant(3, 2.0);
  Box box(lo, hi);
  MemberFn in_ball = [](const VectorXd& x) { return x.norm() <= 1.5; };
  MemberFn always = [](const VectorXd&) { return true; };
  VolumeEstimate a = mc_volume_ratio(in_ball, always, box, 5000, 99);
  VolumeEstimate b = mc_volume_ratio(in_ball, always, box, 5000, 99);
  CHECK(a.ratio == b.ratio);
  CHECK(a.hits_a == b.hits_a);
  CHECK(a.half_width == b.half_width);
  VolumeEstimate c = mc_volume_ratio(in_ball, always, box, 5000, 100);
  CHECK(c.hits_a != a.hits_a);  // different seed actually changes the draw
}

TEST_CASE("oracle: never-hit reference is flagged degenerate") {
  VectorXd lo = VectorXd::Constant(1, 0.0);
  VectorXd hi = VectorXd::Constant(1, 1.0);
  MemberFn always = [](const VectorXd&) { return true; };
  MemberFn never = [](const VectorXd&) { return false; };
  VolumeEstimate est = mc_volume_ratio(always, never, Box(lo, hi), 50, 3);
  CHECK(est.degenerate);
  CHECK(est.ratio == 0.0);
  CHECK(est.hits_b == 0);
  CHECK(est.hits_a == 50);
  CHECK_THROWS_AS(mc_volume_ratio(always, never, Box(lo, hi), 0, 3), Error);
}

TEST_CASE("oracle: admissible inputs mix convexly across disturbances") {
  LinearSystem sys = integrator(2);
  const Polytope& C = integrator2_result().set;
  std::mt19937_64 rng(2024);
  int tested = 0;
  while (tested < 25) {
    VectorXd x(2);
    x << 2.0 * unit01(rng) - 1.0, 2.0 * unit01(rng) - 1.0;
    if (!C.contains_point(x, 1e-9)) continue;
    ++tested;
    std::vector<VectorXd> u(2);
    bool all_feasible = true;
    for (int j = 0; j < 2; ++j) {
      auto [M, rhs] = input_rows(sys, C, x, sys.D_v[j]);
      FeasResult fr = lp_feasible(M, rhs);
      REQUIRE(fr.feasible);
      u[j] = fr.x;
      all_feasible = all_feasible && fr.feasible;
    }
    if (!all_feasible) continue;
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      VectorXd ua = alpha * u[0] + (1.0 - alpha) * u[1];
      VectorXd da = alpha * sys.D_v[0] + (1.0 - alpha) * sys.D_v[1];
      VectorXd xu(3);
      xu << x, ua;
      CHECK(sys.S.contains_point(xu, 1e-6));
      CHECK(C.contains_point(sys.A * x + sys.B * ua + da, 1e-6));
    }
  }
}

TEST_CASE("oracle: audit of the maximal set is clean") {
  LinearSystem sys = integrator(2);
  const Polytope& C = integrator2_result().set;
  MemberFn member = [&](const VectorXd& x) { return C.contains_point(x, 1e-7); };
  AuditReport rep = invariance_audit(member, step_margin_explicit(sys, C), sys,
                                     300, 11, C, bounding_box(C));
  CHECK(rep.member_samples == 300);
  CHECK(rep.checks == 600);
  CHECK(rep.violations == 0);
  CHECK(rep.worst_slack >= -1e-7);
  CHECK(rep.worst_slack < 1.5);
  CHECK(rep.seconds >= 0.0);
}

TEST_CASE("oracle: box rejection sampling audits just as clean") {
  LinearSystem sys = integrator(2);
  const Polytope& C = integrator2_result().set;
  MemberFn member = [&](const VectorXd& x) { return C.contains_point(x, 1e-7); };
  AuditReport rep =
      invariance_audit(member, step_margin_explicit(sys, C), sys, 200, 5,
                       std::nullopt, bounding_box(C));
  CHECK(rep.member_samples == 200);
  CHECK(rep.violations == 0);
}

TEST_CASE("oracle: audit flags a set that is not invariant") {
  // The full safe box is not invariant for the integrator: near (1, 1) the
  // first coordinate moves to x1 + x2 = 2 and no input can stop it.
  LinearSystem sys = integrator(2);
  VectorXd ones = VectorXd::Ones(2);
  Polytope box = Box(-ones, ones).to_polytope();
  MemberFn member = [&](const VectorXd& x) { return box.contains_point(x, 1e-9); };
  AuditReport rep = invariance_audit(member, step_margin_explicit(sys, box),
                                     sys, 200, 17, box, bounding_box(box));
  CHECK(rep.member_samples == 200);
  CHECK(rep.violations > 0);
  CHECK(rep.worst_slack < -1e-7);
}

TEST_CASE("oracle: audit of an empty member set is vacuous") {
  LinearSystem sys = integrator(2);
  VectorXd ones = VectorXd::Ones(2);
  Polytope box = Box(-ones, ones).to_polytope();
  MemberFn never = [](const VectorXd&) { return false; };
  AuditReport rep = invariance_audit(never, step_margin_explicit(sys, box), sys,
                                     50, 2, std::nullopt, bounding_box(box));
  CHECK(rep.member_samples == 0);
  CHECK(rep.checks == 0);
  CHECK(rep.violations == 0);
  CHECK(std::isinf(rep.worst_slack));

  // An empty explicit region is also vacuous, not an error.
  AuditReport rep2 =
      invariance_audit(never, step_margin_explicit(sys, box), sys, 50, 2,
                       Polytope::empty(2), bounding_box(box));
  CHECK(rep2.member_samples == 0);
}

TEST_CASE("oracle: implicit-form audit is clean end to end") {
  LinearSystem sys = integrator(2);
  FeedbackTransform fb = deadbeat_gain(sys.A, sys.B);
  LinearSystem pf = apply_prefeedback(sys, fb);
  MealyMachine mm = tree_machine(1, 2, 1);
  ImplicitRcis rc = compute_implicit_rcis(pf, mm);
  REQUIRE(rc.kind != RcisKind::Empty);
  Polytope projx = explicit_projection(rc);
  REQUIRE_FALSE(is_empty(projx));
  MemberFn member = [&](const VectorXd& x) { return membership(rc, x); };
  AuditReport rep = invariance_audit(member, step_margin_implicit(pf, rc), pf,
                                     150, 23, projx, bounding_box(projx));
  CHECK(rep.member_samples == 150);
  CHECK(rep.checks == 300);
  CHECK(rep.violations == 0);
}

TEST_CASE("oracle: implicit projection cannot exceed the maximal set") {
  LinearSystem sys = integrator(2);
  FeedbackTransform fb = deadbeat_gain(sys.A, sys.B);
  LinearSystem pf = apply_prefeedback(sys, fb);
  ImplicitRcis rc = compute_implicit_rcis(pf, tree_machine(1, 2, 1));
  Polytope projx = explicit_projection(rc);
  CHECK(contains(integrator2_result().set, projx, 1e-6));
}
