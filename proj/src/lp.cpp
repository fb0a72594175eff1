#include "rcis/lp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "rcis/errors.hpp"

namespace rcis {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DualOutcome {
  enum class St { Optimal, DualInfeasible, DualUnbounded, CutoffReached } st;
  VectorXd pi;  // multipliers of the equality rows = row-form primal point
  double obj = std::numeric_limits<double>::quiet_NaN();
};

// min f'w s.t. A w = b, w >= 0 via two-phase revised simplex with dense
// refactorization. Artificial columns stay in the problem at zero level
// (blocked from increasing by the ratio test) so the basis keeps full size
// even when A has dependent rows; pi then always has length A.rows().
// cutoff: in phase 2, stop once the objective is proven <= cutoff.
DualOutcome solve_standard_form(const MatrixXd& A0, const VectorXd& b0,
                                const VectorXd& f, double cutoff,
                                const LpOptions& opts) {
  const int r = static_cast<int>(A0.rows());
  const int k = static_cast<int>(A0.cols());
  MatrixXd A = A0;
  VectorXd b = b0;
  std::vector<char> flip(r, 0);
  for (int i = 0; i < r; ++i) {
    if (b[i] < 0) {
      flip[i] = 1;
      b[i] = -b[i];
      A.row(i) = -A0.row(i);
    }
  }

  std::vector<int> basis(r);
  for (int i = 0; i < r; ++i) basis[i] = k + i;  // artificial j <-> row j
  std::vector<char> in_basis(k + r, 0);
  for (int i = 0; i < r; ++i) in_basis[k + i] = 1;

  MatrixXd B(r, r);
  VectorXd wB(r), fB(r), pi(r), rc(k), d(r);
  const double tol = opts.tol_pivot;

  auto finish = [&](DualOutcome::St st, double obj) {
    DualOutcome out;
    out.st = st;
    out.obj = obj;
    out.pi = pi;
    for (int i = 0; i < r; ++i)
      if (flip[i]) out.pi[i] = -out.pi[i];
    return out;
  };

  // Heavily degenerate vertices admit astronomically many bases, and with
  // floating-point ties index-based anti-cycling rules still wander among
  // them forever. When a run of degenerate pivots is detected the ratio
  // test switches to the lexicographic rule anchored at the engagement
  // basis M: rows are ordered by (ratio, row of B^-1 M scaled by the pivot
  // entry). At engagement B^-1 M is the identity, so every row starts
  // lexicographically positive and each pivot strictly decreases the
  // objective row in that order, which forbids revisiting a basis. Steps
  // stay exactly zero through the vertex, so feasibility and the objective
  // are untouched.
  MatrixXd lexM;

  for (int phase = 1; phase <= 2; ++phase) {
    int degen = 0;
    int scan_blk = 0;
    bool lex = false;
    double prev_obj = kInf;
    for (int iter = 0;; ++iter) {
      if (iter > opts.max_iter)
        throw NumericalFailure("simplex iteration cap exceeded");

      for (int i = 0; i < r; ++i) {
        const int bi = basis[i];
        if (bi >= k) {
          B.col(i).setZero();
          B(bi - k, i) = 1.0;
        } else {
          B.col(i) = A.col(bi);
        }
      }
      Eigen::FullPivLU<MatrixXd> lu(B);
      if (!lu.isInvertible())
        throw NumericalFailure("simplex basis became singular");
      wB = lu.solve(b);
      double low = wB.minCoeff();
      if (low < -1e-6 * (1.0 + b.norm()))
        throw NumericalFailure("simplex lost basic feasibility");

      if (degen > 64 && !lex) {
        lexM = B;
        lex = true;
      }

      for (int i = 0; i < r; ++i) {
        const int bi = basis[i];
        fB[i] = (phase == 1) ? (bi >= k ? 1.0 : 0.0) : (bi >= k ? 0.0 : f[bi]);
      }
      pi = lu.transpose().solve(fB);
      const double obj = fB.dot(wB.cwiseMax(0.0));

      if (phase == 2 && obj <= cutoff)
        return finish(DualOutcome::St::CutoffReached, obj);
      if (obj < prev_obj - 1e-13 * (1.0 + std::abs(prev_obj))) {
        prev_obj = obj;
        degen = 0;
        lex = false;
      }

      // Partial pricing over real nonbasic columns; artificials never
      // re-enter. Reduced costs are evaluated one block at a time and the
      // scan sticks to the first block holding an improving column, so the
      // full sweep across all k columns happens only to certify optimality.
      int enter = -1;
      {
        constexpr int W = 256;
        const int nblk = (k + W - 1) / W;
        double best = 0.0;
        for (int t = 0; t < nblk && enter < 0; ++t) {
          const int blk = (scan_blk + t) % nblk;
          const int j0 = blk * W;
          const int len = std::min(W, k - j0);
          rc.segment(j0, len).noalias() =
              -(A.middleCols(j0, len).transpose() * pi);
          if (phase == 2) rc.segment(j0, len) += f.segment(j0, len);
          for (int j = j0; j < j0 + len; ++j) {
            if (in_basis[j]) continue;
            const double tol_j =
                tol * (1.0 + std::abs(phase == 2 ? f[j] : 0.0));
            if (rc[j] < -tol_j && rc[j] < best) {
              best = rc[j];
              enter = j;
            }
          }
          if (enter >= 0) scan_blk = blk;
        }
      }

      if (enter < 0) {
        if (phase == 1) {
          if (obj > 1e-8 * (1.0 + b.norm()))
            return finish(DualOutcome::St::DualInfeasible, obj);
          break;  // proceed to phase 2 with artificials pinned at zero
        }
        return finish(DualOutcome::St::Optimal, obj);
      }

      d = lu.solve(A.col(enter));
      // Harris two-pass ratio test: a slack-relaxed step bound over every
      // positive entry keeps all basic variables near-feasible, then the
      // largest pivot within the bound is chosen for stability. Artificials
      // already at zero level block movement in either direction so they can
      // never go positive again.
      const double tol_small = 1e-12;
      const double tol_slack = 1e-9;
      auto denom = [&](int i) {
        const bool pinned = basis[i] >= k && wB[i] <= 1e-9;
        return pinned ? std::abs(d[i]) : d[i];
      };
      double bound = kInf;
      for (int i = 0; i < r; ++i) {
        const double den = denom(i);
        if (den <= tol_small) continue;
        bound = std::min(bound, (std::max(wB[i], 0.0) + tol_slack) / den);
      }
      if (bound == kInf) {
        if (phase == 1)
          throw NumericalFailure("phase-1 objective unbounded");
        return finish(DualOutcome::St::DualUnbounded, obj);
      }
      int leave = -1;
      if (lex) {
        // Lexicographic exit: among admissible rows take the minimum of
        // (ratio, row of B^-1 lexM / pivot entry) in dictionary order.
        // Rows of B^-1 lexM are rows of a nonsingular matrix, so two
        // candidates always separate at some column; a full tolerance tie
        // falls back to the smaller basis index. Pivots below tol_lex_den
        // are excluded to keep the basis well conditioned; if that excludes
        // every admissible row the largest-pivot rule below takes over.
        // Comparisons usually separate within the first column or two, so
        // columns of B^-1 lexM are computed on demand.
        const double tol_lex_den = 1e-9;
        MatrixXd T(r, r);
        std::vector<char> have_col(r, 0);
        auto T_at = [&](int i, int c) {
          if (!have_col[c]) {
            T.col(c) = lu.solve(lexM.col(c));
            have_col[c] = 1;
          }
          return T(i, c);
        };
        double r_lead = 0.0;
        for (int i = 0; i < r; ++i) {
          const double den = denom(i);
          if (den <= tol_lex_den) continue;
          const double ratio = std::max(wB[i], 0.0) / den;
          if (ratio > bound) continue;
          if (leave < 0) {
            leave = i;
            r_lead = ratio;
            continue;
          }
          bool better = false;
          bool decided = false;
          if (std::abs(ratio - r_lead) >
              1e-10 * (1.0 + std::min(ratio, r_lead))) {
            better = ratio < r_lead;
            decided = true;
          }
          const double den_lead = denom(leave);
          for (int c = 0; c < r && !decided; ++c) {
            const double va = T_at(i, c) / den;
            const double vl = T_at(leave, c) / den_lead;
            if (std::abs(va - vl) >
                1e-9 * (1.0 + std::max(std::abs(va), std::abs(vl)))) {
              better = va < vl;
              decided = true;
            }
          }
          if (!decided) better = basis[i] < basis[leave];
          if (better) {
            leave = i;
            r_lead = ratio;
          }
        }
      }
      if (leave < 0) {
        double best_den = 0.0;
        bool leave_art = false;
        for (int i = 0; i < r; ++i) {
          const double den = denom(i);
          if (den <= tol_small) continue;
          const double ratio = std::max(wB[i], 0.0) / den;
          if (ratio > bound) continue;
          const bool art = basis[i] >= k;
          const bool better =
              den > best_den * (1.0 + 1e-9) ||
              (den > best_den * (1.0 - 1e-9) &&
               (art > leave_art ||
                (art == leave_art && (leave < 0 || basis[i] < basis[leave]))));
          if (better) {
            best_den = den;
            leave = i;
            leave_art = art;
          }
        }
      }
      if (leave < 0)
        throw NumericalFailure("ratio test found no admissible pivot");
      const double step = std::max(wB[leave], 0.0) / denom(leave);

      in_basis[basis[leave]] = 0;
      in_basis[enter] = 1;
      basis[leave] = enter;
      if (step <= 1e-12) {
        ++degen;
      } else {
        degen = 0;
        lex = false;
      }
    }
  }
  throw NumericalFailure("unreachable simplex exit");
}

// Row-normalized copy of a row subset; zero rows are dropped (or flag an
// immediate infeasibility when their offset is negative).
struct Prepared {
  MatrixXd G;
  VectorXd h;
  bool zero_row_infeasible = false;
  // Worst raw offset among dropped zero rows (0'x <= h); identifies the
  // violation depth when such a row makes the system infeasible.
  double worst_zero_offset = std::numeric_limits<double>::infinity();
};

Prepared prepare(const MatrixXd& G, const VectorXd& h,
                 const std::vector<int>& rows) {
  Prepared p;
  const int n = static_cast<int>(G.cols());
  std::vector<int> keep;
  keep.reserve(rows.size());
  for (int idx : rows) {
    const double nrm = G.row(idx).norm();
    if (nrm <= 1e-13) {
      if (h[idx] < -1e-12) p.zero_row_infeasible = true;
      p.worst_zero_offset = std::min(p.worst_zero_offset, h[idx]);
      continue;
    }
    keep.push_back(idx);
  }
  p.G.resize(static_cast<int>(keep.size()), n);
  p.h.resize(static_cast<int>(keep.size()));
  for (int i = 0; i < static_cast<int>(keep.size()); ++i) {
    const double nrm = G.row(keep[i]).norm();
    p.G.row(i) = G.row(keep[i]) / nrm;
    p.h[i] = h[keep[i]] / nrm;
  }
  return p;
}

std::vector<int> all_rows(const MatrixXd& G) {
  std::vector<int> rows(G.rows());
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) rows[i] = i;
  return rows;
}

FeasResult feasible_prepared(const Prepared& p, const LpOptions& opts) {
  FeasResult out;
  const int n = static_cast<int>(p.G.cols());
  if (p.zero_row_infeasible) {
    // Zero rows cannot be normalized; report their raw offset so margin
    // consumers still see a definite negative slack.
    out.margin = p.worst_zero_offset;
    return out;
  }
  const int m = static_cast<int>(p.G.rows());
  if (m == 0) {
    out.feasible = true;
    out.x = VectorXd::Zero(n);
    out.margin = 1.0;
    return out;
  }
  // max t s.t. G x + t <= h, t <= 1; always feasible and bounded, and its
  // dual always admits the start y = (0,...,0,1), so no recursion arises.
  MatrixXd Ge(m + 1, n + 1);
  Ge.setZero();
  Ge.block(0, 0, m, n) = p.G;
  Ge.col(n).head(m).setOnes();
  Ge(m, n) = 1.0;
  VectorXd he(m + 1);
  he.head(m) = p.h;
  he[m] = 1.0;
  VectorXd ce = VectorXd::Zero(n + 1);
  ce[n] = 1.0;

  DualOutcome res =
      solve_standard_form(Ge.transpose(), ce, he, -kInf, opts);
  if (res.st != DualOutcome::St::Optimal)
    throw NumericalFailure("margin LP did not solve");
  out.margin = res.obj;
  out.x = res.pi.head(n);
  out.feasible = out.margin >= -opts.eps_feas;
  return out;
}

}  // namespace

LpCoreResult lp_max_rows(const MatrixXd& G, const VectorXd& h,
                         const std::vector<int>& rows, const VectorXd& c,
                         const LpOptions& opts) {
  if (G.cols() != c.size() || G.rows() != h.size())
    throw DimensionMismatch("lp_max: objective/constraint dimensions differ");
  const int n = static_cast<int>(G.cols());
  Prepared p = prepare(G, h, rows);
  LpCoreResult out;
  if (p.zero_row_infeasible) return out;

  const double cn = c.norm();
  if (cn <= 1e-14) {
    FeasResult f = feasible_prepared(p, opts);
    if (!f.feasible) return out;
    out.status = LpStatus::Optimal;
    out.x = f.x;
    out.objective = 0.0;
    return out;
  }
  if (p.G.rows() == 0) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  DualOutcome res =
      solve_standard_form(p.G.transpose(), c / cn, p.h, -kInf, opts);
  switch (res.st) {
    case DualOutcome::St::DualInfeasible: {
      FeasResult f = feasible_prepared(p, opts);
      out.status = f.feasible ? LpStatus::Unbounded : LpStatus::Infeasible;
      return out;
    }
    case DualOutcome::St::DualUnbounded:
      out.status = LpStatus::Infeasible;
      return out;
    default: {
      const double viol = (p.G * res.pi - p.h).maxCoeff();
      if (viol > opts.eps_feas)
        throw NumericalFailure("LP optimum violates feasibility tolerance");
      out.status = LpStatus::Optimal;
      out.x = res.pi;
      out.objective = res.obj * cn;
      return out;
    }
  }
}

LpCoreResult lp_max(const MatrixXd& G, const VectorXd& h, const VectorXd& c,
                    const LpOptions& opts) {
  return lp_max_rows(G, h, all_rows(G), c, opts);
}

FeasResult lp_feasible_rows(const MatrixXd& G, const VectorXd& h,
                            const std::vector<int>& rows,
                            const LpOptions& opts) {
  if (G.rows() != h.size())
    throw DimensionMismatch("lp_feasible: row counts differ");
  return feasible_prepared(prepare(G, h, rows), opts);
}

FeasResult lp_feasible(const MatrixXd& G, const VectorXd& h,
                       const LpOptions& opts) {
  return lp_feasible_rows(G, h, all_rows(G), opts);
}

BoundResult lp_max_below(const MatrixXd& G, const VectorXd& h,
                         const std::vector<int>& rows, const VectorXd& c,
                         double cutoff, const LpOptions& opts,
                         bool assume_feasible) {
  if (G.cols() != c.size() || G.rows() != h.size())
    throw DimensionMismatch("lp_max_below: dimensions differ");
  Prepared p = prepare(G, h, rows);
  BoundResult out;
  if (p.zero_row_infeasible) return out;
  if (!assume_feasible && !feasible_prepared(p, opts).feasible) return out;

  const double cn = c.norm();
  if (cn <= 1e-14) {
    FeasResult f = feasible_prepared(p, opts);
    if (!f.feasible) return out;
    out.value = 0.0;
    out.verdict = 0.0 <= cutoff ? BoundVerdict::ProvedBelow : BoundVerdict::Above;
    return out;
  }
  if (p.G.rows() == 0) {
    out.verdict = BoundVerdict::Above;
    out.value = kInf;
    return out;
  }

  DualOutcome res =
      solve_standard_form(p.G.transpose(), c / cn, p.h, cutoff / cn, opts);
  switch (res.st) {
    case DualOutcome::St::CutoffReached:
      out.verdict = BoundVerdict::ProvedBelow;
      out.value = res.obj * cn;
      return out;
    case DualOutcome::St::Optimal:
      out.value = res.obj * cn;
      out.verdict = out.value <= cutoff ? BoundVerdict::ProvedBelow
                                        : BoundVerdict::Above;
      return out;
    case DualOutcome::St::DualInfeasible: {
      FeasResult f = feasible_prepared(p, opts);
      if (f.feasible) {
        out.verdict = BoundVerdict::Above;
        out.value = kInf;
      }
      return out;
    }
    default:
      return out;  // dual unbounded: empty feasible set
  }
}

}  // namespace rcis
