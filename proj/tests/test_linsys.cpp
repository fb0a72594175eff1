#include <Eigen/Dense>
#include <random>

#include "doctest.h"
#include "rcis/errors.hpp"
#include "rcis/linsys.hpp"
#include "test_util.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace rcis;

namespace {

double inf_norm(const MatrixXd& M) {
  return M.rows() ? M.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
}

MatrixXd integrator_chain(int n) {
  MatrixXd A = MatrixXd::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
  return A;
}

Polytope xu_box(int n, int m, double xb, double ub) {
  VectorXd lo(n + m), hi(n + m);
  lo.head(n).setConstant(-xb);
  hi.head(n).setConstant(xb);
  lo.tail(m).setConstant(-ub);
  hi.tail(m).setConstant(ub);
  return Box(lo, hi).to_polytope();
}

LinearSystem double_integrator(DisturbanceMode mode) {
  MatrixXd A = integrator_chain(2);
  MatrixXd B(2, 1);
  B << 0, 1;
  std::vector<VectorXd> Dv;
  VectorXd d(2);
  d << 0, 0.1;
  Dv.push_back(d);
  Dv.push_back(-d);
  return LinearSystem(A, B, Dv, xu_box(2, 1, 1.0, 1.0), mode);
}

}  // namespace

TEST_CASE("nilpotency index of basic matrices") {
  CHECK(nilpotency_index(MatrixXd::Zero(2, 2)) == 1);
  MatrixXd shift(2, 2);
  shift << 0, 1, 0, 0;
  CHECK(nilpotency_index(shift) == 2);
  CHECK_FALSE(nilpotency_index(MatrixXd::Identity(3, 3)).has_value());
  CHECK_FALSE(nilpotency_index(integrator_chain(4)).has_value());
}

TEST_CASE("deadbeat gain for the double integrator") {
  MatrixXd A = integrator_chain(2);
  MatrixXd B(2, 1);
  B << 0, 1;
  FeedbackTransform fb = deadbeat_gain(A, B);
  MatrixXd Acl = A + B * fb.K;
  CHECK(nilpotency_index(Acl).has_value());
  CHECK(inf_norm(Acl * Acl) <= 1e-9);
  CHECK(fb.K(0, 0) == doctest::Approx(-1.0));
  CHECK(fb.K(0, 1) == doctest::Approx(-2.0));
}

TEST_CASE("already-nilpotent dynamics get a zero gain") {
  MatrixXd shift(2, 2);
  shift << 0, 1, 0, 0;
  FeedbackTransform fb = deadbeat_gain(shift, MatrixXd::Zero(2, 1));
  CHECK(inf_norm(fb.K) == 0.0);
}

TEST_CASE("uncontrollable pair is rejected with the achieved rank") {
  try {
    deadbeat_gain(MatrixXd::Identity(3, 3), MatrixXd::Zero(3, 1));
    FAIL("expected NotControllable");
  } catch (const NotControllable& e) {
    CHECK(e.achieved_rank == 0);
  }
}

TEST_CASE("deadbeat gain on integrator chains of several orders") {
  for (int n = 2; n <= 10; n += 2) {
    MatrixXd A = integrator_chain(n);
    MatrixXd B = MatrixXd::Zero(n, 1);
    B(n - 1, 0) = 1.0;
    FeedbackTransform fb = deadbeat_gain(A, B);
    MatrixXd P = MatrixXd::Identity(n, n);
    MatrixXd Acl = A + B * fb.K;
    for (int i = 0; i < n; ++i) P = P * Acl;
    CHECK(inf_norm(P) <= 1e-7 * std::pow(std::max(1.0, inf_norm(Acl)), n));
  }
}

TEST_CASE("deadbeat gain on random multi-input systems") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  int done = 0;
  for (int trial = 0; trial < 30 && done < 12; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % 3);
    MatrixXd A(n, n), B(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
      for (int j = 0; j < m; ++j) B(i, j) = g(rng);
    }
    FeedbackTransform fb;
    try {
      fb = deadbeat_gain(A, B);
    } catch (const NotControllable&) {
      continue;
    }
    ++done;
    MatrixXd Acl = A + B * fb.K;
    MatrixXd P = MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) P = P * Acl;
    CHECK(inf_norm(P) <= 1e-7 * std::pow(std::max(1.0, inf_norm(Acl)), n));
  }
  CHECK(done >= 12);
}

TEST_CASE("multi-input with a redundant input column") {
  MatrixXd A = integrator_chain(3);
  MatrixXd B(3, 2);
  B << 0, 0, 0, 0, 1, 2;  // second column parallel to the first
  FeedbackTransform fb = deadbeat_gain(A, B);
  MatrixXd Acl = A + B * fb.K;
  MatrixXd P = Acl * Acl * Acl;
  CHECK(inf_norm(P) <= 1e-8);
}

TEST_CASE("zero prefeedback leaves the system unchanged") {
  LinearSystem sys = double_integrator(DisturbanceMode::Measurable);
  FeedbackTransform fb;
  fb.K = MatrixXd::Zero(1, 2);
  LinearSystem out = apply_prefeedback(sys, fb);
  CHECK(inf_norm(out.A - sys.A) == 0.0);
  CHECK(inf_norm(out.S.G - sys.S.G) == 0.0);
  REQUIRE(out.prefeedback.has_value());
  CHECK(out.prefeedback->original_S.has_value());
}

TEST_CASE("prefeedback rewrites input constraints by substitution") {
  MatrixXd A = integrator_chain(2);
  MatrixXd B(2, 1);
  B << 0, 1;
  // single constraint u <= 1
  MatrixXd G(1, 3);
  G << 0, 0, 1;
  VectorXd h(1);
  h << 1;
  LinearSystem sys(A, B, {}, Polytope(G, h), DisturbanceMode::Measurable);
  FeedbackTransform fb;
  fb.K = MatrixXd(1, 2);
  fb.K << -1.0, -2.0;
  LinearSystem out = apply_prefeedback(sys, fb);
  CHECK(out.S.G(0, 0) == doctest::Approx(-1.0));
  CHECK(out.S.G(0, 1) == doctest::Approx(-2.0));
  CHECK(out.S.G(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("prefeedback membership equivalence is exact on samples") {
  std::mt19937_64 rng(7);
  LinearSystem sys = double_integrator(DisturbanceMode::Measurable);
  FeedbackTransform fb = deadbeat_gain(sys.A, sys.B);
  LinearSystem out = apply_prefeedback(sys, fb);
  VectorXd lo = VectorXd::Constant(3, -2.0), hi = VectorXd::Constant(3, 2.0);
  for (int s = 0; s < 1000; ++s) {
    VectorXd xv = rcis_test::sample_box(lo, hi, rng);
    VectorXd x = xv.head(2);
    VectorXd xu(3);
    xu.head(2) = x;
    xu[2] = (fb.K * x)(0) + xv[2];
    VectorXd lhs_new = out.S.G * xv;
    VectorXd lhs_old = sys.S.G * xu;
    CHECK((lhs_new - lhs_old).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("disturbance vertices of interval, singleton, and square") {
  MatrixXd G(2, 1);
  G << 1, -1;
  VectorXd h(2);
  h << 0.1, 0.1;
  auto iv = disturbance_vertices(Polytope(G, h));
  REQUIRE(iv.size() == 2);
  CHECK(iv[0][0] == doctest::Approx(-0.1));
  CHECK(iv[1][0] == doctest::Approx(0.1));

  VectorXd z = VectorXd::Zero(1);
  auto sing = disturbance_vertices(Box(z, z).to_polytope());
  REQUIRE(sing.size() == 1);
  CHECK(sing[0][0] == doctest::Approx(0.0));

  auto sq = disturbance_vertices(
      Box(VectorXd::Constant(2, -0.5), VectorXd::Constant(2, 0.5)).to_polytope());
  CHECK(sq.size() == 4);
}

TEST_CASE("one-step-delay lift has the printed block structure") {
  MatrixXd A(1, 1), B(1, 1);
  A << 0.7;
  B << 2.0;
  std::vector<VectorXd> Dv = {VectorXd::Constant(1, -0.1),
                              VectorXd::Constant(1, 0.1)};
  LinearSystem sys(A, B, Dv, xu_box(1, 1, 1.0, 1.0),
                   DisturbanceMode::NonMeasurable);
  LinearSystem lift = lift_nonmeasurable(sys);
  REQUIRE(lift.n() == 2);
  REQUIRE(lift.m() == 1);
  CHECK(lift.A(0, 0) == doctest::Approx(0.7));
  CHECK(lift.A(0, 1) == doctest::Approx(2.0));
  CHECK(lift.A(1, 0) == 0.0);
  CHECK(lift.A(1, 1) == 0.0);
  CHECK(lift.B(0, 0) == 0.0);
  CHECK(lift.B(1, 0) == 1.0);
  CHECK(lift.disturbance_mode == DisturbanceMode::Measurable);
  CHECK(lift.lifted);
  CHECK(lift.orig_n == 1);
  REQUIRE(lift.D_v.size() == 2);
  CHECK(lift.D_v[0].size() == 2);
  CHECK(lift.D_v[0][1] == 0.0);
  // safe set ignores v: sampled membership depends only on (x, u)
  std::mt19937_64 rng(3);
  VectorXd lo = VectorXd::Constant(3, -2.0), hi = VectorXd::Constant(3, 2.0);
  for (int s = 0; s < 200; ++s) {
    VectorXd xuv = rcis_test::sample_box(lo, hi, rng);
    VectorXd xu = xuv.head(2);
    bool in_lift = lift.S.contains_point(xuv, 0.0);
    bool in_orig = sys.S.contains_point(xu, 0.0);
    CHECK(in_lift == in_orig);
  }
}

TEST_CASE("lift preserves nilpotency") {
  MatrixXd A(2, 2);
  A << 0, 1, 0, 0;
  MatrixXd B(2, 1);
  B << 0, 1;
  LinearSystem sys(A, B, {}, xu_box(2, 1, 1, 1),
                   DisturbanceMode::NonMeasurable);
  LinearSystem lift = lift_nonmeasurable(sys);
  REQUIRE(lift.h_nilp.has_value());
  CHECK(*lift.h_nilp <= 3);
  CHECK_THROWS_AS(lift_nonmeasurable(lift), Error);
}

TEST_CASE("system constructor validates shapes") {
  MatrixXd A = integrator_chain(2);
  MatrixXd B(2, 1);
  B << 0, 1;
  CHECK_THROWS_AS(
      LinearSystem(A, B, {}, xu_box(2, 2, 1, 1), DisturbanceMode::Measurable),
      DimensionMismatch);
  std::vector<VectorXd> bad = {VectorXd::Zero(3)};
  CHECK_THROWS_AS(
      LinearSystem(A, B, bad, xu_box(2, 1, 1, 1), DisturbanceMode::Measurable),
      DimensionMismatch);
}
