#include "rcis/linsys.hpp"

#include <Eigen/LU>
#include <cmath>

#include "rcis/errors.hpp"

namespace rcis {

using Eigen::MatrixXd;
using Eigen::VectorXd;

LinearSystem::LinearSystem(MatrixXd A_, MatrixXd B_,
                           std::vector<VectorXd> D_v_, Polytope S_,
                           DisturbanceMode mode)
    : A(std::move(A_)),
      B(std::move(B_)),
      D_v(std::move(D_v_)),
      S(std::move(S_)),
      disturbance_mode(mode) {
  if (A.rows() != A.cols()) throw DimensionMismatch("system: A must be square");
  if (B.rows() != A.rows()) throw DimensionMismatch("system: B row count");
  if (B.cols() < 1) throw DimensionMismatch("system: input dimension >= 1");
  if (S.dim != n() + m())
    throw DimensionMismatch("system: safe set must live over (x, u)");
  for (const auto& d : D_v)
    if (d.size() != n())
      throw DimensionMismatch("system: disturbance vertex length");
  if (!A.allFinite() || !B.allFinite())
    throw Error("system: non-finite matrix entries");
  h_nilp = nilpotency_index(A);
}

std::optional<int> nilpotency_index(const MatrixXd& A, double eps_nilp) {
  const int n = static_cast<int>(A.rows());
  const double scale = std::max(1.0, A.cwiseAbs().rowwise().sum().maxCoeff());
  MatrixXd P = A;
  double thresh = eps_nilp;
  for (int h = 1; h <= n; ++h) {
    thresh *= scale;
    if (P.cwiseAbs().rowwise().sum().maxCoeff() <= thresh) return h;
    if (h < n) P = P * A;
  }
  return std::nullopt;
}

namespace {

double inf_norm(const MatrixXd& M) {
  if (M.rows() == 0 || M.cols() == 0) return 0.0;
  return M.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

FeedbackTransform deadbeat_gain(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw DimensionMismatch("deadbeat_gain: dimension mismatch");
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());

  FeedbackTransform fb;
  if (nilpotency_index(A)) {
    fb.K = MatrixXd::Zero(m, n);
    return fb;
  }

  // Greedy controllability-chain selection in the order b_i, A b_i, ...;
  // a broken chain never resumes. Independence is tested against an
  // incrementally grown orthonormal basis.
  MatrixXd basis(n, n);
  int rank = 0;
  std::vector<int> mu(m, 0);
  std::vector<char> active(m, 1);
  std::vector<MatrixXd> chain_cols(m);  // selected columns per input
  for (int i = 0; i < m; ++i) chain_cols[i].resize(n, 0);
  MatrixXd Ak = MatrixXd::Identity(n, n);
  for (int k = 0; k < n && rank < n; ++k) {
    for (int i = 0; i < m && rank < n; ++i) {
      if (!active[i]) continue;
      VectorXd col = Ak * B.col(i);
      VectorXd resid = col;
      for (int j = 0; j < rank; ++j)
        resid -= basis.col(j).dot(col) * basis.col(j);
      if (resid.norm() > 1e-8 * (1.0 + col.norm())) {
        basis.col(rank++) = resid / resid.norm();
        chain_cols[i].conservativeResize(n, mu[i] + 1);
        chain_cols[i].col(mu[i]++) = col;
      } else {
        active[i] = 0;
      }
    }
    Ak = A * Ak;
  }
  if (rank < n)
    throw NotControllable("deadbeat_gain: (A,B) not controllable", rank);

  // Controller-form rows: q_i is the row of C_sel^{-1} at the end of chain i;
  // K = -W^{-1} [q_i' A^{mu_i}] places every eigenvalue at zero.
  MatrixXd Csel(n, n);
  std::vector<int> chain_end(m, -1);
  int colpos = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < mu[i]; ++j) Csel.col(colpos++) = chain_cols[i].col(j);
    if (mu[i] > 0) chain_end[i] = colpos - 1;
  }
  Eigen::FullPivLU<MatrixXd> lu(Csel);
  if (!lu.isInvertible())
    throw NumericalFailure("deadbeat_gain: chain basis singular");
  MatrixXd Cinv = lu.inverse();

  MatrixXd M(m, n), W(m, m);
  int out_row = 0;
  std::vector<int> used_inputs;
  for (int i = 0; i < m; ++i) {
    if (mu[i] == 0) continue;
    Eigen::RowVectorXd q = Cinv.row(chain_end[i]);
    Eigen::RowVectorXd qA = q;
    for (int p = 0; p < mu[i] - 1; ++p) qA = qA * A;
    W.row(out_row) = qA * B;   // q' A^{mu_i - 1} B
    M.row(out_row) = qA * A;   // q' A^{mu_i}
    used_inputs.push_back(i);
    ++out_row;
  }
  // Inputs with empty chains contribute zero feedback rows.
  MatrixXd Wr = W.topRows(out_row);
  MatrixXd Mr = M.topRows(out_row);
  MatrixXd Wsq(out_row, out_row);
  for (int c = 0; c < out_row; ++c) Wsq.col(c) = Wr.col(used_inputs[c]);
  Eigen::FullPivLU<MatrixXd> luW(Wsq);
  if (!luW.isInvertible())
    throw NumericalFailure("deadbeat_gain: feedback solve singular");
  MatrixXd Kr = -luW.solve(Mr);

  fb.K = MatrixXd::Zero(m, n);
  for (int cpos = 0; cpos < out_row; ++cpos)
    fb.K.row(used_inputs[cpos]) = Kr.row(cpos);

  MatrixXd Acl = A + B * fb.K;
  MatrixXd P = MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) P = P * Acl;
  const double tol = 1e-9 * std::pow(std::max(1.0, inf_norm(Acl)), n);
  if (inf_norm(P) > tol)
    throw NumericalFailure("deadbeat_gain: closed loop failed nilpotency");
  return fb;
}

LinearSystem apply_prefeedback(const LinearSystem& sys,
                               const FeedbackTransform& fb) {
  if (fb.K.rows() != sys.m() || fb.K.cols() != sys.n())
    throw DimensionMismatch("apply_prefeedback: K must be m x n");
  const int n = sys.n();
  const int m = sys.m();
  MatrixXd Anew = sys.A + sys.B * fb.K;
  MatrixXd Gx = sys.S.G.leftCols(n);
  MatrixXd Gu = sys.S.G.rightCols(m);
  MatrixXd Gnew(sys.S.rows(), n + m);
  Gnew << Gx + Gu * fb.K, Gu;
  LinearSystem out(std::move(Anew), sys.B, sys.D_v,
                   Polytope(std::move(Gnew), sys.S.h), sys.disturbance_mode);
  FeedbackTransform rec = fb;
  rec.original_S = sys.S;
  out.prefeedback = std::move(rec);
  out.lifted = sys.lifted;
  out.orig_n = sys.orig_n;
  return out;
}

std::vector<VectorXd> disturbance_vertices(const Polytope& D) {
  return vertices(D);
}

LinearSystem lift_nonmeasurable(const LinearSystem& sys) {
  if (sys.disturbance_mode != DisturbanceMode::NonMeasurable)
    throw Error("lift_nonmeasurable: system disturbance is already measurable");
  const int n = sys.n();
  const int m = sys.m();
  MatrixXd Al = MatrixXd::Zero(n + m, n + m);
  Al.topLeftCorner(n, n) = sys.A;
  Al.topRightCorner(n, m) = sys.B;
  MatrixXd Bl = MatrixXd::Zero(n + m, m);
  Bl.bottomRows(m) = MatrixXd::Identity(m, m);
  // safe set S x R^m over ((x,u), v): original rows on (x,u), none on v
  MatrixXd Gl(sys.S.rows(), n + 2 * m);
  Gl.setZero();
  Gl.leftCols(n + m) = sys.S.G;
  std::vector<VectorXd> Dl;
  Dl.reserve(sys.D_v.size());
  for (const auto& d : sys.D_v) {
    VectorXd dl = VectorXd::Zero(n + m);
    dl.head(n) = d;
    Dl.push_back(std::move(dl));
  }
  LinearSystem out(std::move(Al), std::move(Bl), std::move(Dl),
                   Polytope(std::move(Gl), sys.S.h),
                   DisturbanceMode::Measurable);
  out.lifted = true;
  out.orig_n = n;
  out.prefeedback = sys.prefeedback;
  return out;
}

}  // namespace rcis
