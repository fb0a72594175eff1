#include "rcis/polytope.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "rcis/errors.hpp"

namespace rcis {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> iota_rows(int m) {
  std::vector<int> rows(m);
  for (int i = 0; i < m; ++i) rows[i] = i;
  return rows;
}

// Quantized duplicate detection on normalized facet normals; among rows with
// (near-)equal normals only the smallest offset matters.
std::vector<int64_t> quantize_row(const Eigen::Ref<const Eigen::RowVectorXd>& g) {
  std::vector<int64_t> key(g.size());
  for (int j = 0; j < g.size(); ++j) key[j] = llround(g[j] * 1e9);
  return key;
}

struct ReduceResult {
  std::vector<int> kept;  // ascending indices into the normalized input rows
  bool empty = false;
};

// Redundancy elimination on row-normalized nonzero rows: quantized dedup,
// then cheap ray-shot non-redundancy certificates from an interior point,
// then sequential LP certification with an early-exit bound.
ReduceResult reduce_rows(const MatrixXd& G, const VectorXd& h,
                         const RedundancyOptions& opts) {
  ReduceResult out;
  const int m = static_cast<int>(G.rows());
  if (m == 0) return out;

  std::map<std::vector<int64_t>, int> groups;
  for (int i = 0; i < m; ++i) {
    auto key = quantize_row(G.row(i));
    auto it = groups.find(key);
    if (it == groups.end())
      groups.emplace(std::move(key), i);
    else if (h[i] < h[it->second])
      it->second = i;
  }
  std::vector<int> active;
  active.reserve(groups.size());
  for (auto& kv : groups) active.push_back(kv.second);
  std::sort(active.begin(), active.end());

  FeasResult feas = lp_feasible_rows(G, h, active, opts.lp);
  if (!feas.feasible) {
    out.empty = true;
    return out;
  }

  std::vector<char> certified(m, 0);
  const int ma = static_cast<int>(active.size());
  if (feas.margin > 1e-7 && ma <= 8000) {
    MatrixXd Ga(ma, G.cols());
    VectorXd slack(ma);
    for (int i = 0; i < ma; ++i) {
      Ga.row(i) = G.row(active[i]);
      slack[i] = h[active[i]] - Ga.row(i).dot(feas.x);
    }
    VectorXd dots(ma);
    for (int i = 0; i < ma; ++i) {
      dots.noalias() = Ga * Ga.row(i).transpose();
      double s1 = kInf, s2 = kInf;
      int arg1 = -1;
      for (int j = 0; j < ma; ++j) {
        if (dots[j] <= 1e-12) continue;
        const double s = std::max(slack[j], 0.0) / dots[j];
        if (s < s1) {
          s2 = s1;
          s1 = s;
          arg1 = j;
        } else if (s < s2) {
          s2 = s;
        }
      }
      if (arg1 == i && s2 - s1 > 10.0 * opts.eps_red) certified[active[i]] = 1;
    }
  }

  std::vector<int> rows_minus;
  for (size_t pos = 0; pos < active.size();) {
    const int i = active[pos];
    if (certified[i]) {
      ++pos;
      continue;
    }
    rows_minus.clear();
    for (int j : active)
      if (j != i) rows_minus.push_back(j);
    VectorXd ci = G.row(i).transpose();
    BoundResult b = lp_max_below(G, h, rows_minus, ci, h[i] + opts.eps_red,
                                 opts.lp, /*assume_feasible=*/true);
    if (b.verdict == BoundVerdict::ProvedBelow)
      active.erase(active.begin() + pos);
    else
      ++pos;
  }
  out.kept = std::move(active);
  return out;
}

// Normalized nonzero rows of a polytope; detects the trivially infeasible
// zero row 0'x <= h < 0.
struct Normalized {
  MatrixXd G;
  VectorXd h;
  bool infeasible = false;
};

Normalized normalize_rows(const Polytope& p) {
  Normalized out;
  std::vector<int> keep;
  for (int i = 0; i < p.rows(); ++i) {
    const double nrm = p.G.row(i).norm();
    if (nrm <= 1e-13) {
      if (p.h[i] < -1e-9) out.infeasible = true;
      continue;
    }
    keep.push_back(i);
  }
  out.G.resize(static_cast<int>(keep.size()), p.dim);
  out.h.resize(static_cast<int>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) {
    const double nrm = p.G.row(keep[i]).norm();
    out.G.row(static_cast<int>(i)) = p.G.row(keep[i]) / nrm;
    out.h[static_cast<int>(i)] = p.h[keep[i]] / nrm;
  }
  return out;
}

}  // namespace

Polytope::Polytope(MatrixXd G_, VectorXd h_) : G(std::move(G_)), h(std::move(h_)) {
  if (G.rows() != h.size())
    throw DimensionMismatch("polytope: row counts of G and h differ");
  if (G.cols() < 1)
    throw DimensionMismatch("polytope: ambient dimension must be >= 1");
  if (!G.allFinite() || !h.allFinite())
    throw Error("polytope: non-finite entries");
  dim = static_cast<int>(G.cols());
}

Polytope Polytope::whole_space(int dim) {
  return Polytope(MatrixXd(0, dim), VectorXd(0));
}

Polytope Polytope::empty(int dim) {
  MatrixXd G = MatrixXd::Zero(1, dim);
  VectorXd h(1);
  h[0] = -1.0;
  return Polytope(std::move(G), std::move(h));
}

bool Polytope::contains_point(const VectorXd& x, double eps) const {
  if (x.size() != dim)
    throw DimensionMismatch("contains_point: dimension differs");
  for (int i = 0; i < rows(); ++i) {
    const double scale = std::max(1.0, G.row(i).norm());
    if (G.row(i).dot(x) - h[i] > eps * scale) return false;
  }
  return true;
}

Box::Box(VectorXd lower_, VectorXd upper_)
    : lower(std::move(lower_)), upper(std::move(upper_)) {
  if (lower.size() != upper.size())
    throw DimensionMismatch("box: bound lengths differ");
  if (!lower.allFinite() || !upper.allFinite())
    throw Error("box: non-finite bounds");
  for (int i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i])
      throw Error("box: lower bound exceeds upper bound");
}

Polytope Box::to_polytope() const {
  const int n = dim();
  MatrixXd G(2 * n, n);
  G.setZero();
  VectorXd h(2 * n);
  for (int i = 0; i < n; ++i) {
    G(i, i) = 1.0;
    h[i] = upper[i];
    G(n + i, i) = -1.0;
    h[n + i] = -lower[i];
  }
  return Polytope(std::move(G), std::move(h));
}

bool Box::contains_point(const VectorXd& x, double eps) const {
  if (x.size() != dim())
    throw DimensionMismatch("box contains_point: dimension differs");
  for (int i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - eps || x[i] > upper[i] + eps) return false;
  return true;
}

long long default_row_cap() {
  if (const char* env = std::getenv("RCIS_ROW_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return 100000;
}

LpResult lp_solve(const VectorXd& objective, LpSense sense,
                  const Polytope& poly, const LpOptions& opts) {
  if (objective.size() != poly.dim)
    throw DimensionMismatch("lp_solve: objective length differs from dim");
  const VectorXd c = sense == LpSense::Max ? objective : VectorXd(-objective);
  LpCoreResult r = lp_max(poly.G, poly.h, c, opts);
  LpResult out;
  out.status = r.status;
  if (r.status == LpStatus::Optimal) {
    out.primal = r.x;
    out.objective = sense == LpSense::Max ? r.objective : -r.objective;
  }
  return out;
}

bool is_empty(const Polytope& poly, const LpOptions& opts) {
  return !lp_feasible(poly.G, poly.h, opts).feasible;
}

bool contains(const Polytope& outer, const Polytope& inner, double tol,
              const LpOptions& opts) {
  if (outer.dim != inner.dim)
    throw DimensionMismatch("contains: ambient dimensions differ");
  for (int i = 0; i < outer.rows(); ++i) {
    const double nrm = outer.G.row(i).norm();
    if (nrm <= 1e-13) {
      if (outer.h[i] >= -tol) continue;
      return is_empty(inner, opts);
    }
    VectorXd g = outer.G.row(i).transpose() / nrm;
    LpCoreResult r = lp_max(inner.G, inner.h, g, opts);
    if (r.status == LpStatus::Infeasible) return true;  // inner empty
    if (r.status == LpStatus::Unbounded) return false;
    if (r.objective > outer.h[i] / nrm + tol) return false;
  }
  return true;
}

Polytope intersect(const Polytope& a, const Polytope& b) {
  if (a.dim != b.dim)
    throw DimensionMismatch("intersect: ambient dimensions differ");
  MatrixXd G(a.rows() + b.rows(), a.dim);
  VectorXd h(a.rows() + b.rows());
  G << a.G, b.G;
  h << a.h, b.h;
  return Polytope(std::move(G), std::move(h));
}

Polytope remove_redundancy(const Polytope& poly, const RedundancyOptions& opts) {
  Normalized nz = normalize_rows(poly);
  if (nz.infeasible) return Polytope::empty(poly.dim);
  ReduceResult red = reduce_rows(nz.G, nz.h, opts);
  if (red.empty) return Polytope::empty(poly.dim);
  MatrixXd G(static_cast<int>(red.kept.size()), poly.dim);
  VectorXd h(static_cast<int>(red.kept.size()));
  for (size_t i = 0; i < red.kept.size(); ++i) {
    G.row(static_cast<int>(i)) = nz.G.row(red.kept[i]);
    h[static_cast<int>(i)] = nz.h[red.kept[i]];
  }
  return Polytope(std::move(G), std::move(h));
}

Box bounding_box(const Polytope& poly, double margin_factor,
                 const LpOptions& opts) {
  const int n = poly.dim;
  VectorXd lo(n), hi(n);
  for (int j = 0; j < n; ++j) {
    VectorXd e = VectorXd::Zero(n);
    e[j] = 1.0;
    LpCoreResult up = lp_max(poly.G, poly.h, e, opts);
    if (up.status == LpStatus::Unbounded)
      throw UnboundedDirection("bounding_box: unbounded coordinate", j);
    if (up.status == LpStatus::Infeasible)
      throw Error("bounding_box: empty polytope");
    e[j] = -1.0;
    LpCoreResult dn = lp_max(poly.G, poly.h, e, opts);
    if (dn.status == LpStatus::Unbounded)
      throw UnboundedDirection("bounding_box: unbounded coordinate", j);
    if (dn.status == LpStatus::Infeasible)
      throw Error("bounding_box: empty polytope");
    hi[j] = up.objective;
    lo[j] = -dn.objective;
    const double c = 0.5 * (lo[j] + hi[j]);
    const double w = 0.5 * (hi[j] - lo[j]) * margin_factor;
    lo[j] = c - w;
    hi[j] = c + w;
  }
  return Box(std::move(lo), std::move(hi));
}

FeasResult feasible_point(const Polytope& poly, const LpOptions& opts) {
  return lp_feasible(poly.G, poly.h, opts);
}

std::vector<VectorXd> vertices(const Polytope& poly, const VertexOptions& opts) {
  if (poly.dim > opts.dim_cap)
    throw DimensionTooHigh("vertices: dimension exceeds the enumeration cap");
  Polytope red = remove_redundancy(poly, opts.red);
  if (red.rows() == 1 && red.G.row(0).norm() <= 1e-13 && red.h[0] < 0)
    return {};  // empty set
  bounding_box(red, 1.0, opts.red.lp);  // throws when unbounded

  const int n = red.dim;
  const int m = red.rows();
  double combos = 1.0;
  for (int i = 0; i < n; ++i) combos *= static_cast<double>(m - i) / (i + 1);
  if (combos > 2e6)
    throw Error("vertices: too many facet subsets to enumerate");

  std::vector<VectorXd> pts;
  std::vector<int> idx(n);
  MatrixXd M(n, n);
  VectorXd rhs(n);
  // enumerate all n-subsets of facets in lexicographic order
  std::vector<int> c(n);
  for (int i = 0; i < n; ++i) c[i] = i;
  if (m >= n) {
    while (true) {
      for (int i = 0; i < n; ++i) {
        M.row(i) = red.G.row(c[i]);
        rhs[i] = red.h[c[i]];
      }
      Eigen::FullPivLU<MatrixXd> lu(M);
      lu.setThreshold(1e-10);
      if (lu.isInvertible()) {
        VectorXd x = lu.solve(rhs);
        if (red.contains_point(x, opts.eps_vert)) {
          bool dup = false;
          for (const auto& p : pts)
            if ((p - x).lpNorm<Eigen::Infinity>() <= opts.eps_vert) {
              dup = true;
              break;
            }
          if (!dup) pts.push_back(std::move(x));
        }
      }
      int i = n - 1;
      while (i >= 0 && c[i] == m - n + i) --i;
      if (i < 0) break;
      ++c[i];
      for (int j = i + 1; j < n; ++j) c[j] = c[j - 1] + 1;
    }
  }
  std::sort(pts.begin(), pts.end(), [](const VectorXd& a, const VectorXd& b) {
    for (int i = 0; i < a.size(); ++i) {
      if (a[i] < b[i] - 1e-12) return true;
      if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
  });
  return pts;
}

namespace {

struct FmRow {
  VectorXd g;
  double h = 0.0;
  std::vector<int32_t> anc;  // ancestor set over original row indices
};

std::vector<int32_t> merge_anc(const std::vector<int32_t>& a,
                               const std::vector<int32_t>& b) {
  std::vector<int32_t> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

Polytope project(const Polytope& poly, const std::vector<int>& keep,
                 const ProjectOptions& opts) {
  if (keep.empty()) throw Error("project: keep set must be nonempty");
  std::vector<char> is_kept(poly.dim, 0);
  for (int k : keep) {
    if (k < 0 || k >= poly.dim)
      throw DimensionMismatch("project: keep index out of range");
    if (is_kept[k]) throw Error("project: duplicate keep index");
    is_kept[k] = 1;
  }
  const long long cap = opts.row_cap > 0 ? opts.row_cap : default_row_cap();

  Polytope base = remove_redundancy(poly, opts.red);
  if (base.rows() == 1 && base.G.row(0).norm() <= 1e-13 && base.h[0] < 0)
    return Polytope::empty(static_cast<int>(keep.size()));

  // working rows over the not-yet-eliminated columns
  const double tolz = 1e-11;
  std::vector<FmRow> rows(base.rows());
  for (int i = 0; i < base.rows(); ++i) {
    rows[i].g = base.G.row(i).transpose();
    rows[i].h = base.h[i];
    rows[i].anc = {static_cast<int32_t>(i)};
  }
  std::vector<int> cols(poly.dim);  // original ids of surviving columns
  for (int j = 0; j < poly.dim; ++j) cols[j] = j;
  std::vector<int> elim;
  for (int j = 0; j < poly.dim; ++j)
    if (!is_kept[j]) elim.push_back(j);

  int elim_done = 0;
  while (!elim.empty()) {
    // pick the variable minimizing the pos*neg combination count
    int best_v = -1, best_pos = -1;
    long long best_cost = -1;
    for (int v : elim) {
      const int p =
          static_cast<int>(std::find(cols.begin(), cols.end(), v) - cols.begin());
      long long np = 0, nn = 0;
      for (const auto& r : rows) {
        if (r.g[p] > tolz)
          ++np;
        else if (r.g[p] < -tolz)
          ++nn;
      }
      const long long cost = np * nn;
      if (best_cost < 0 || cost < best_cost) {
        best_cost = cost;
        best_v = v;
        best_pos = p;
      }
    }

    std::vector<FmRow> next;
    std::vector<const FmRow*> pos, neg;
    const int p = best_pos;
    for (const auto& r : rows) {
      if (r.g[p] > tolz)
        pos.push_back(&r);
      else if (r.g[p] < -tolz)
        neg.push_back(&r);
      else
        next.push_back(r);
    }
    // retained zero-coefficient rows must drop the eliminated column too
    const int old_w = static_cast<int>(cols.size());
    auto drop_col = [&](const VectorXd& g) {
      VectorXd out(old_w - 1);
      for (int j = 0, t = 0; j < old_w; ++j)
        if (j != p) out[t++] = g[j];
      return out;
    };
    for (auto& r : next) r.g = drop_col(r.g);

    bool found_infeasible = false;
    for (const auto* rp : pos) {
      for (const auto* rq : neg) {
        auto anc = merge_anc(rp->anc, rq->anc);
        if (static_cast<int>(anc.size()) > elim_done + 2) continue;
        const double a = rp->g[p];
        const double b = rq->g[p];
        FmRow nr;
        nr.g = drop_col(VectorXd(-b * rp->g + a * rq->g));
        nr.h = -b * rp->h + a * rq->h;
        const double nrm = nr.g.norm();
        if (nrm <= 1e-12) {
          if (nr.h < -1e-9) {
            found_infeasible = true;
            break;
          }
          continue;  // trivially true
        }
        nr.g /= nrm;
        nr.h /= nrm;
        nr.anc = std::move(anc);
        next.push_back(std::move(nr));
        if (static_cast<long long>(next.size()) > cap)
          throw ExplosionLimit(
              "project: intermediate row count exceeded the cap (" +
              std::to_string(cap) + ")");
      }
      if (found_infeasible) break;
    }
    if (found_infeasible)
      return Polytope::empty(static_cast<int>(keep.size()));

    cols.erase(cols.begin() + p);
    elim.erase(std::find(elim.begin(), elim.end(), best_v));
    ++elim_done;

    // quantized dedup, then LP pruning of the intermediate system
    std::map<std::vector<int64_t>, int> groups;
    for (int i = 0; i < static_cast<int>(next.size()); ++i) {
      auto key = quantize_row(next[i].g.transpose());
      auto it = groups.find(key);
      if (it == groups.end())
        groups.emplace(std::move(key), i);
      else if (next[i].h < next[it->second].h)
        it->second = i;
    }
    std::vector<int> uniq;
    uniq.reserve(groups.size());
    for (auto& kv : groups) uniq.push_back(kv.second);
    std::sort(uniq.begin(), uniq.end());

    MatrixXd Gw(static_cast<int>(uniq.size()), static_cast<int>(cols.size()));
    VectorXd hw(static_cast<int>(uniq.size()));
    for (size_t i = 0; i < uniq.size(); ++i) {
      Gw.row(static_cast<int>(i)) = next[uniq[i]].g.transpose();
      hw[static_cast<int>(i)] = next[uniq[i]].h;
    }
    ReduceResult red = reduce_rows(Gw, hw, opts.red);
    if (red.empty) return Polytope::empty(static_cast<int>(keep.size()));
    std::vector<FmRow> pruned;
    pruned.reserve(red.kept.size());
    for (int i : red.kept) pruned.push_back(std::move(next[uniq[i]]));
    rows = std::move(pruned);
  }

  // reorder surviving columns to the caller's keep order
  MatrixXd Gf(static_cast<int>(rows.size()), static_cast<int>(keep.size()));
  VectorXd hf(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t t = 0; t < keep.size(); ++t) {
      const int pos_t = static_cast<int>(
          std::find(cols.begin(), cols.end(), keep[t]) - cols.begin());
      Gf(static_cast<int>(i), static_cast<int>(t)) = rows[i].g[pos_t];
    }
    hf[static_cast<int>(i)] = rows[i].h;
  }
  return Polytope(std::move(Gf), std::move(hf));
}

}  // namespace rcis
