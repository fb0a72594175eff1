#include "rcis/supervisor.hpp"

#include <cmath>

#include "rcis/errors.hpp"
#include "rcis/lp.hpp"

namespace rcis {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Null-space step: p solves min 1/2 p'Hp + g'p s.t. A p = 0. H is positive
// definite here (ridge already added), so the reduced system is PD too.
VectorXd constrained_step(const MatrixXd& H, const VectorXd& g,
                          const MatrixXd& A) {
  if (A.rows() == 0) return -H.ldlt().solve(g);
  Eigen::FullPivLU<MatrixXd> lu(A);
  if (lu.dimensionOfKernel() == 0) return VectorXd::Zero(g.size());
  MatrixXd Z = lu.kernel();
  MatrixXd Hr = Z.transpose() * H * Z;
  VectorXd gr = Z.transpose() * g;
  return Z * (-Hr.ldlt().solve(gr));
}

// Multipliers for A' lam = -g in the least-squares sense; with a KKT point
// the residual vanishes up to the ridge.
VectorXd multipliers(const MatrixXd& A, const VectorXd& g) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A.transpose());
  return cod.solve(-g);
}

SupervisionStep solve_correction(const MatrixXd& M, const VectorXd& rhs,
                                 int m_inputs, const VectorXd& u_nominal,
                                 const QpOptions& opts) {
  const int nz = static_cast<int>(M.cols());
  MatrixXd H = MatrixXd::Zero(nz, nz);
  H.topLeftCorner(m_inputs, m_inputs) =
      2.0 * MatrixXd::Identity(m_inputs, m_inputs);
  VectorXd f = VectorXd::Zero(nz);
  f.head(m_inputs) = -2.0 * u_nominal;
  QpResult qp = qp_solve(H, f, Polytope(M, rhs), std::nullopt, opts);
  SupervisionStep step;
  step.u_nominal = u_nominal;
  step.qp_status = qp.status;
  if (qp.status == QpStatus::Feasible) {
    step.u_applied = qp.z.head(m_inputs);
    step.correction_norm = (step.u_applied - u_nominal).norm();
  }
  return step;
}

Trajectory roll(const LinearSystem& plant, const NominalPolicy& policy,
                const std::vector<VectorXd>& d_trace, int T,
                const VectorXd& x0, const std::string& scenario_id,
                const std::function<SupervisionStep(const VectorXd&,
                                                    const VectorXd&,
                                                    const VectorXd&)>& filt) {
  if (static_cast<int>(d_trace.size()) < T)
    throw DimensionMismatch("simulate: disturbance trace shorter than T");
  if (x0.size() != plant.n())
    throw DimensionMismatch("simulate: x0 has the wrong dimension");
  Trajectory traj;
  traj.plant_hash = plant_digest(plant);
  traj.scenario_id = scenario_id;
  VectorXd x = x0;
  for (int t = 0; t < T; ++t) {
    const VectorXd u_nom = policy(t, x);
    SupervisionStep step = filt(x, u_nom, d_trace[t]);
    step.t = t;
    step.x = x;
    step.d = d_trace[t];
    if (step.qp_status != QpStatus::Feasible)
      throw ContractBreach("simulate: supervision infeasible at step " +
                           std::to_string(t) +
                           "; the state left the invariant set");
    x = plant.A * x + plant.B * step.u_applied + d_trace[t];
    traj.steps.push_back(std::move(step));
  }
  traj.final_state = x;
  return traj;
}

}  // namespace

QpResult qp_solve(const MatrixXd& H, const VectorXd& f, const Polytope& ineq,
                  const std::optional<std::pair<MatrixXd, VectorXd>>& eq,
                  const QpOptions& opts) {
  const int nz = ineq.dim;
  if (H.rows() != nz || H.cols() != nz || f.size() != nz)
    throw DimensionMismatch("qp_solve: objective dimensions disagree");
  const MatrixXd E = eq ? eq->first : MatrixXd(0, nz);
  const VectorXd e = eq ? eq->second : VectorXd(0);
  if (E.cols() != nz || E.rows() != e.size())
    throw DimensionMismatch("qp_solve: equality dimensions disagree");

  const MatrixXd Hr = H + opts.ridge * MatrixXd::Identity(nz, nz);
  const int mrows = ineq.rows();

  // Feasible start: margin LP over the inequalities plus both sides of each
  // equality, then an exact least-squares snap onto the equality manifold.
  MatrixXd Gall(mrows + 2 * E.rows(), nz);
  VectorXd hall(mrows + 2 * E.rows());
  Gall.topRows(mrows) = ineq.G;
  hall.head(mrows) = ineq.h;
  Gall.middleRows(mrows, E.rows()) = E;
  hall.segment(mrows, E.rows()) = e;
  Gall.bottomRows(E.rows()) = -E;
  hall.tail(E.rows()) = -e;
  FeasResult fs = lp_feasible(Gall, hall);
  QpResult out;
  if (!fs.feasible) return out;
  VectorXd z = fs.x;
  if (E.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(E);
    z += cod.solve(e - E * z);
  }

  const int max_iter =
      opts.max_iter > 0 ? opts.max_iter : 200 + 10 * (nz + mrows);
  std::vector<bool> active(mrows, false);
  const auto active_matrix = [&]() {
    int na = 0;
    for (bool a : active) na += a;
    MatrixXd A(na + E.rows(), nz);
    int r = 0;
    for (int i = 0; i < mrows; ++i)
      if (active[i]) A.row(r++) = ineq.G.row(i);
    A.bottomRows(E.rows()) = E;
    return A;
  };

  for (int it = 1; it <= max_iter; ++it) {
    out.iterations = it;
    const VectorXd g = Hr * z + f;
    const MatrixXd A = active_matrix();
    const VectorXd p = constrained_step(Hr, g, A);

    if (p.norm() <= 1e-9 * (1.0 + z.norm())) {
      if (A.rows() == 0) break;  // unconstrained stationary point
      const VectorXd lam = multipliers(A, g);
      int worst = -1, r = 0;
      double worst_val = -1e-8;
      for (int i = 0; i < mrows; ++i)
        if (active[i]) {
          if (lam[r] < worst_val) {
            worst_val = lam[r];
            worst = i;
          }
          ++r;
        }
      if (worst < 0) break;  // all multipliers admissible: KKT point
      active[worst] = false;
      continue;
    }

    // Longest step along p not leaving the inactive constraints.
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < mrows; ++i) {
      if (active[i]) continue;
      const double den = ineq.G.row(i).dot(p);
      if (den <= 1e-12) continue;
      const double room = (ineq.h[i] - ineq.G.row(i).dot(z)) / den;
      if (room < alpha) {
        alpha = room;
        blocking = i;
      }
    }
    z += std::max(alpha, 0.0) * p;
    if (blocking >= 0) active[blocking] = true;
    if (it == max_iter)
      throw NumericalFailure("qp_solve: active-set iteration cap reached");
  }

  // Certify the point before returning it.
  const double viol = mrows > 0 ? (ineq.G * z - ineq.h).maxCoeff() : 0.0;
  const double eviol = E.rows() > 0 ? (E * z - e).cwiseAbs().maxCoeff() : 0.0;
  if (viol > opts.tol || eviol > opts.tol)
    throw NumericalFailure("qp_solve: returned point violates constraints");
  const MatrixXd A = active_matrix();
  const VectorXd g = H * z + f;
  VectorXd resid = g;
  if (A.rows() > 0) resid += A.transpose() * multipliers(A, g);
  if (resid.lpNorm<Eigen::Infinity>() > opts.tol)
    throw NumericalFailure("qp_solve: stationarity residual above tolerance");

  out.status = QpStatus::Feasible;
  out.z = z;
  out.objective = 0.5 * z.dot(H * z) + f.dot(z);
  return out;
}

SupervisionStep supervise(const ImplicitRcis& rcis, const LinearSystem& plant,
                          const VectorXd& x, const VectorXd& u_nominal,
                          const VectorXd& d, const QpOptions& opts) {
  if (u_nominal.size() != plant.m())
    throw DimensionMismatch("supervise: nominal input has the wrong size");
  auto [M, rhs] = one_step_rows(rcis, plant, x, d);
  return solve_correction(M, rhs, plant.m(), u_nominal, opts);
}

SupervisionStep supervise_explicit(const Polytope& C, const LinearSystem& plant,
                                   const VectorXd& x, const VectorXd& u_nominal,
                                   const VectorXd& d, const QpOptions& opts) {
  const int n = plant.n();
  const int m = plant.m();
  if (C.dim != n)
    throw DimensionMismatch("supervise_explicit: set dimension mismatch");
  if (x.size() != n || d.size() != n || u_nominal.size() != m)
    throw DimensionMismatch("supervise_explicit: vector sizes disagree");
  MatrixXd M(plant.S.rows() + C.rows(), m);
  VectorXd rhs(plant.S.rows() + C.rows());
  M.topRows(plant.S.rows()) = plant.S.G.rightCols(m);
  rhs.head(plant.S.rows()) = plant.S.h - plant.S.G.leftCols(n) * x;
  M.bottomRows(C.rows()) = C.G * plant.B;
  rhs.tail(C.rows()) = C.h - C.G * (plant.A * x + d);
  return solve_correction(M, rhs, m, u_nominal, opts);
}

Trajectory simulate(const LinearSystem& plant, const NominalPolicy& policy,
                    const ImplicitRcis& rcis,
                    const std::vector<VectorXd>& d_trace, int T,
                    const VectorXd& x0, const std::string& scenario_id,
                    const QpOptions& opts) {
  return roll(plant, policy, d_trace, T, x0, scenario_id,
              [&](const VectorXd& x, const VectorXd& u, const VectorXd& d) {
                return supervise(rcis, plant, x, u, d, opts);
              });
}

Trajectory simulate_explicit(const LinearSystem& plant,
                             const NominalPolicy& policy, const Polytope& C,
                             const std::vector<VectorXd>& d_trace, int T,
                             const VectorXd& x0, const std::string& scenario_id,
                             const QpOptions& opts) {
  return roll(plant, policy, d_trace, T, x0, scenario_id,
              [&](const VectorXd& x, const VectorXd& u, const VectorXd& d) {
                return supervise_explicit(C, plant, x, u, d, opts);
              });
}

}  // namespace rcis
