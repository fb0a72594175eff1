#include "rcis/rcis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <unordered_map>

#include "rcis/errors.hpp"

namespace rcis {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct KeyHash {
  size_t operator()(const std::vector<long long>& key) const {
    unsigned long long h = 1469598103934665603ull;
    for (long long v : key) {
      auto u = static_cast<unsigned long long>(v);
      for (int b = 0; b < 8; ++b) {
        h ^= (u >> (8 * b)) & 0xffull;
        h *= 1099511628211ull;
      }
    }
    return static_cast<size_t>(h);
  }
};

// Entries below half a dedup quantum are snapped to zero so floating-point
// residue of nearly nilpotent products cannot grow into spurious states.
void snap(Eigen::MatrixXd& M, double eps) {
  for (long j = 0; j < M.cols(); ++j)
    for (long i = 0; i < M.rows(); ++i)
      if (std::abs(M(i, j)) < 0.5 * eps) M(i, j) = 0.0;
}

void snap(Eigen::VectorXd& v, double eps) {
  for (long i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) < 0.5 * eps) v(i) = 0.0;
}

std::vector<long long> state_key(const SymbolicReachState& st, double eps) {
  std::vector<long long> key;
  key.reserve(1 + st.Cx.size() + st.Ctheta.size() + st.c.size());
  key.push_back(st.auto_state);
  const auto push = [&](const double* p, long count) {
    for (long i = 0; i < count; ++i) key.push_back(std::llround(p[i] / eps));
  };
  push(st.Cx.data(), st.Cx.size());
  push(st.Ctheta.data(), st.Ctheta.size());
  push(st.c.data(), st.c.size());
  return key;
}

void fnv_append(unsigned long long& h, const std::string& s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
}

void fnv_matrix(unsigned long long& h, const Eigen::MatrixXd& M) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "[%ldx%ld]", M.rows(), M.cols());
  fnv_append(h, buf);
  for (long j = 0; j < M.cols(); ++j)
    for (long i = 0; i < M.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g,", M(i, j));
      fnv_append(h, buf);
    }
}

}  // namespace

AugmentedSystem::AugmentedSystem(LinearSystem plant_, MealyMachine machine_)
    : plant(std::move(plant_)), machine(std::move(machine_)) {
  if (!plant.h_nilp) {
    throw Error(
        "state matrix is not nilpotent; apply a deadbeat prefeedback first");
  }
  if (machine.num_actions != static_cast<int>(plant.D_v.size())) {
    throw DimensionMismatch(
        "machine has " + std::to_string(machine.num_actions) +
        " actions but the plant has " + std::to_string(plant.D_v.size()) +
        " disturbance vertices");
  }
  if (machine.m != plant.m()) {
    throw DimensionMismatch("machine input dimension " +
                            std::to_string(machine.m) +
                            " does not match plant input dimension " +
                            std::to_string(plant.m()));
  }
  n = plant.n();
  m = plant.m();
  L = machine.num_symbols;
}

std::vector<SymbolicReachState> enumerate_reachable(const AugmentedSystem& aug,
                                                    int s0,
                                                    const RcisOptions& opts) {
  if (s0 < 0 || s0 >= aug.machine.num_states)
    throw Error("enumerate_reachable: state index out of range");
  const int n = aug.n, mL = aug.m * aug.L, K = aug.machine.num_actions;
  const int h = *aug.plant.h_nilp;
  const double eps = opts.eps_dedup;

  std::vector<SymbolicReachState> states;
  std::vector<int> depth;
  std::unordered_map<std::vector<long long>, int, KeyHash> seen;

  SymbolicReachState init;
  init.auto_state = s0;
  init.Cx = Eigen::MatrixXd::Identity(n, n);
  init.Ctheta = Eigen::MatrixXd::Zero(n, mL);
  init.c = Eigen::VectorXd::Zero(n);
  seen.emplace(state_key(init, eps), 0);
  states.push_back(std::move(init));
  depth.push_back(0);

  for (size_t head = 0; head < states.size(); ++head) {
    const SymbolicReachState cur = states[head];
    const int cur_depth = depth[head];
    for (int d = 0; d < K; ++d) {
      SymbolicReachState nxt;
      nxt.auto_state = aug.machine.step(cur.auto_state, d);
      const int sym = aug.machine.out(cur.auto_state, d);
      nxt.Cx = aug.plant.A * cur.Cx;
      nxt.Ctheta = aug.plant.A * cur.Ctheta;
      nxt.Ctheta.middleCols(static_cast<long>(sym) * aug.m, aug.m) +=
          aug.plant.B;
      nxt.c = aug.plant.A * cur.c + aug.plant.D_v[d];
      if (cur_depth + 1 >= h) nxt.Cx.setZero();
      snap(nxt.Cx, eps);
      snap(nxt.Ctheta, eps);
      snap(nxt.c, eps);
      auto key = state_key(nxt, eps);
      if (seen.emplace(std::move(key), static_cast<int>(states.size()))
              .second) {
        if (static_cast<long long>(states.size()) + 1 > opts.reach_cap) {
          throw ReachSetExceedsCap(
              "symbolic reachable set exceeds cap " +
              std::to_string(opts.reach_cap));
        }
        states.push_back(std::move(nxt));
        depth.push_back(cur_depth + 1);
      }
    }
  }
  return states;
}

Polytope build_csub_raw(const AugmentedSystem& aug, int s,
                        const RcisOptions& opts) {
  const auto states = enumerate_reachable(aug, s, opts);
  const int n = aug.n, m = aug.m, mL = aug.m * aug.L;
  const int K = aug.machine.num_actions;
  const Eigen::MatrixXd& GS = aug.plant.S.G;
  const Eigen::VectorXd& hS = aug.plant.S.h;
  const long r = GS.rows();
  const Eigen::MatrixXd Gx = GS.leftCols(n);
  const Eigen::MatrixXd Gu = GS.rightCols(m);

  Eigen::MatrixXd G(static_cast<long>(states.size()) * K * r, n + mL);
  Eigen::VectorXd h(G.rows());
  long row = 0;
  for (const auto& st : states) {
    const Eigen::MatrixXd GxCx = Gx * st.Cx;
    const Eigen::MatrixXd GxCt = Gx * st.Ctheta;
    const Eigen::VectorXd rhs = hS - Gx * st.c;
    for (int d = 0; d < K; ++d) {
      const int sym = aug.machine.out(st.auto_state, d);
      G.block(row, 0, r, n) = GxCx;
      G.block(row, n, r, mL) = GxCt;
      G.block(row, n + static_cast<long>(sym) * m, r, m) += Gu;
      h.segment(row, r) = rhs;
      row += r;
    }
  }
  return Polytope(std::move(G), std::move(h));
}

Polytope build_csub(const AugmentedSystem& aug, int s,
                    const RcisOptions& opts) {
  Polytope raw = build_csub_raw(aug, s, opts);
  // Symbol blocks the closure never emits are unconstrained; clamp them to
  // the safe input range so the set is bounded. Emitted blocks are bounded
  // already because each appears paired with a state inside the safe set.
  const auto states = enumerate_reachable(aug, s, opts);
  std::vector<char> emitted(aug.L, 0);
  for (const auto& st : states)
    for (int d = 0; d < aug.machine.num_actions; ++d)
      emitted[aug.machine.out(st.auto_state, d)] = 1;
  std::vector<int> missing;
  for (int k = 0; k < aug.L; ++k)
    if (!emitted[k]) missing.push_back(k);
  if (!missing.empty()) {
    bool have_ubox = true;
    Eigen::VectorXd ulo, uhi;
    try {
      const Box sbox = bounding_box(aug.plant.S);
      ulo = sbox.lower.tail(aug.m);
      uhi = sbox.upper.tail(aug.m);
    } catch (const Unbounded&) {
      have_ubox = false;  // leave unbounded; downstream boxing will report
    }
    if (have_ubox) {
      const long extra = 2L * aug.m * static_cast<long>(missing.size());
      Eigen::MatrixXd G(raw.G.rows() + extra, raw.dim);
      Eigen::VectorXd h(G.rows());
      G.topRows(raw.G.rows()) = raw.G;
      h.head(raw.G.rows()) = raw.h;
      long row = raw.G.rows();
      for (int k : missing)
        for (int i = 0; i < aug.m; ++i) {
          const long col = aug.n + static_cast<long>(k) * aug.m + i;
          G.row(row).setZero();
          G(row, col) = 1.0;
          h(row) = uhi(i);
          ++row;
          G.row(row).setZero();
          G(row, col) = -1.0;
          h(row) = -ulo(i);
          ++row;
        }
      raw = Polytope(std::move(G), std::move(h));
    }
  }
  return remove_redundancy(raw, opts.red);
}

Polytope build_clambda(const std::vector<Polytope>& blocks,
                       const std::vector<Box>& boxes) {
  if (blocks.empty()) throw Error("hull lift needs at least one block");
  if (blocks.size() != boxes.size())
    throw DimensionMismatch("hull lift: blocks and boxes differ in count");
  const int N = static_cast<int>(blocks.size());
  const long D = blocks[0].dim;
  std::vector<Polytope> barred;
  barred.reserve(N);
  long block_rows = 0;
  for (int i = 0; i < N; ++i) {
    if (blocks[i].dim != D)
      throw DimensionMismatch("hull lift: block dimensions differ");
    barred.push_back(intersect(blocks[i], boxes[i].to_polytope()));
    block_rows += barred.back().rows();
  }
  const long dim = D * (1 + N) + N;
  const long total = block_rows + N + 2 + 2 * D;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(total, dim);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(total);
  long row = 0;
  for (int i = 0; i < N; ++i) {
    const auto& P = barred[i];
    const long r = P.rows();
    G.block(row, D * (1 + static_cast<long>(i)), r, D) = P.G;
    G.block(row, D * (1 + static_cast<long>(N)) + i, r, 1) = -P.h;
    row += r;
  }
  for (int i = 0; i < N; ++i) {
    G(row, D * (1 + static_cast<long>(N)) + i) = -1.0;
    ++row;
  }
  G.row(row).segment(D * (1 + static_cast<long>(N)), N).setOnes();
  h(row) = 1.0;
  ++row;
  G.row(row).segment(D * (1 + static_cast<long>(N)), N).setConstant(-1.0);
  h(row) = -1.0;
  ++row;
  for (long j = 0; j < D; ++j) {
    G(row, j) = 1.0;
    for (int i = 0; i < N; ++i) G(row, D * (1 + static_cast<long>(i)) + j) = -1.0;
    ++row;
    G(row, j) = -1.0;
    for (int i = 0; i < N; ++i) G(row, D * (1 + static_cast<long>(i)) + j) = 1.0;
    ++row;
  }
  return Polytope(std::move(G), std::move(h));
}

std::string plant_digest(const LinearSystem& sys) {
  unsigned long long h = 1469598103934665603ull;
  fnv_matrix(h, sys.A);
  fnv_matrix(h, sys.B);
  for (const auto& v : sys.D_v) fnv_matrix(h, v);
  fnv_matrix(h, sys.S.G);
  fnv_matrix(h, sys.S.h);
  fnv_append(h, sys.disturbance_mode == DisturbanceMode::Measurable
                    ? "measurable"
                    : "nonmeasurable");
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", h);
  return buf;
}

ImplicitRcis compute_implicit_rcis(const LinearSystem& plant,
                                   const MealyMachine& machine,
                                   const RcisOptions& opts) {
  if (plant.disturbance_mode != DisturbanceMode::Measurable) {
    throw Error(
        "non-measurable disturbances must be lifted to the delayed form "
        "before invariant-set construction");
  }
  const auto t0 = clock_type::now();
  AugmentedSystem aug(plant, machine);
  const std::string digest = plant_digest(plant);

  const auto stat_for = [&](int s) {
    CsubStats st;
    st.state = s;
    const auto ts = clock_type::now();
    st.reach_states =
        static_cast<long long>(enumerate_reachable(aug, s, opts).size());
    st.rows_raw = build_csub_raw(aug, s, opts).rows();
    st.seconds = seconds_since(ts);
    return st;
  };

  if (const auto sdom = find_dominant(machine)) {
    const auto ts = clock_type::now();
    CsubStats st = stat_for(*sdom);
    Polytope csub = build_csub(aug, *sdom, opts);
    st.rows_reduced = csub.rows();
    st.seconds = seconds_since(ts);
    if (is_empty(csub, opts.red.lp)) {
      ImplicitRcis out(RcisKind::Empty, aug.n, aug.m, aug.L, machine, digest);
      out.report.dominant_path = true;
      out.report.per_state.push_back(st);
      out.report.total_seconds = seconds_since(t0);
      return out;
    }
    ImplicitRcis out(RcisKind::SingleCsub, aug.n, aug.m, aug.L, machine,
                     digest);
    out.dominant_state = *sdom;
    out.csub = std::move(csub);
    out.report.dominant_path = true;
    out.report.per_state.push_back(st);
    out.report.total_seconds = seconds_since(t0);
    return out;
  }

  const std::vector<int> qmax = maximal_partition(machine);
  std::vector<int> kept;
  std::vector<Polytope> csubs;
  std::vector<Box> boxes;
  RcisReport report;
  for (int s : qmax) {
    const auto ts = clock_type::now();
    CsubStats st = stat_for(s);
    Polytope csub = build_csub(aug, s, opts);
    st.rows_reduced = csub.rows();
    st.seconds = seconds_since(ts);
    report.per_state.push_back(st);
    if (is_empty(csub, opts.red.lp)) continue;
    try {
      boxes.push_back(bounding_box(csub));
    } catch (const Unbounded&) {
      throw UnboundedCsub("constraint set for machine state " +
                          std::to_string(s) +
                          " is unbounded; the safe set must be bounded");
    }
    kept.push_back(s);
    csubs.push_back(std::move(csub));
  }
  if (kept.empty()) {
    ImplicitRcis out(RcisKind::Empty, aug.n, aug.m, aug.L, machine, digest);
    out.report = std::move(report);
    out.report.total_seconds = seconds_since(t0);
    return out;
  }
  ImplicitRcis out(RcisKind::Lambda, aug.n, aug.m, aug.L, machine, digest);
  out.clambda = build_clambda(csubs, boxes);
  out.q0 = std::move(kept);
  for (size_t i = 0; i < csubs.size(); ++i)
    out.blocks.push_back(intersect(csubs[i], boxes[i].to_polytope()));
  out.report = std::move(report);
  out.report.total_seconds = seconds_since(t0);
  return out;
}

bool membership(const ImplicitRcis& rcis, const Eigen::VectorXd& x,
                const LpOptions& opts) {
  if (x.size() != rcis.n)
    throw DimensionMismatch("membership: point has dimension " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(rcis.n));
  if (rcis.kind == RcisKind::Empty) return false;
  const Polytope& P = rcis.kind == RcisKind::SingleCsub ? *rcis.csub
                                                        : *rcis.clambda;
  const Eigen::MatrixXd Gfix = P.G.leftCols(rcis.n);
  const Eigen::MatrixXd Grest = P.G.rightCols(P.dim - rcis.n);
  const Eigen::VectorXd rhs = P.h - Gfix * x;
  return lp_feasible(Grest, rhs, opts).feasible;
}

std::optional<Eigen::VectorXd> fiber_point(const ImplicitRcis& rcis,
                                           const Eigen::VectorXd& x,
                                           const LpOptions& opts) {
  if (x.size() != rcis.n)
    throw DimensionMismatch("fiber_point: point has dimension " +
                            std::to_string(x.size()) + ", expected " +
                            std::to_string(rcis.n));
  if (rcis.kind == RcisKind::Empty) return std::nullopt;
  const Polytope& P = rcis.kind == RcisKind::SingleCsub ? *rcis.csub
                                                        : *rcis.clambda;
  const Eigen::MatrixXd Gfix = P.G.leftCols(rcis.n);
  const Eigen::MatrixXd Grest = P.G.rightCols(P.dim - rcis.n);
  const Eigen::VectorXd rhs = P.h - Gfix * x;
  FeasResult fs = lp_feasible(Grest, rhs, opts);
  if (!fs.feasible) return std::nullopt;
  return fs.x;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> one_step_rows(
    const ImplicitRcis& rcis, const LinearSystem& plant,
    const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
  if (rcis.kind == RcisKind::Empty)
    throw Error("one_step_rows: the implicit set is empty");
  const int n = rcis.n;
  const int m = rcis.m;
  if (x.size() != n || d.size() != n)
    throw DimensionMismatch("one_step_rows: x and d must have dimension " +
                            std::to_string(n));
  if (plant.n() != n || plant.m() != m)
    throw DimensionMismatch("one_step_rows: plant does not match the set");
  const Polytope& P = rcis.kind == RcisKind::SingleCsub ? *rcis.csub
                                                        : *rcis.clambda;
  const int nw = P.dim - n;
  const Eigen::MatrixXd Gsx = plant.S.G.leftCols(n);
  const Eigen::MatrixXd Gsu = plant.S.G.rightCols(m);
  const Eigen::MatrixXd Pfix = P.G.leftCols(n);
  const Eigen::MatrixXd Prest = P.G.rightCols(nw);
  const int rows_s = static_cast<int>(plant.S.G.rows());
  const int rows_p = static_cast<int>(P.G.rows());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows_s + rows_p, m + nw);
  Eigen::VectorXd rhs(rows_s + rows_p);
  M.topLeftCorner(rows_s, m) = Gsu;
  rhs.head(rows_s) = plant.S.h - Gsx * x;
  M.bottomLeftCorner(rows_p, m) = Pfix * plant.B;
  M.bottomRightCorner(rows_p, nw) = Prest;
  rhs.tail(rows_p) = P.h - Pfix * (plant.A * x + d);
  return {M, rhs};
}

namespace {

using Eigen::Vector2d;

struct SupportProbe {
  bool unbounded = false;
  double value = 0.0;
  Vector2d point = Vector2d::Zero();
};

// Support value and projected optimizer along (dir, 0, ..., 0).
SupportProbe probe2(const Polytope& P, const Vector2d& dir,
                    const LpOptions& lp) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(P.dim);
  c[0] = dir[0];
  c[1] = dir[1];
  LpCoreResult r = lp_max(P.G, P.h, c, lp);
  SupportProbe out;
  if (r.status != LpStatus::Optimal) {
    out.unbounded = true;
    return out;
  }
  out.value = r.objective;
  out.point = Vector2d(r.x[0], r.x[1]);
  return out;
}

// Counterclockwise convex hull indices (monotone chain, collinear dropped).
std::vector<int> hull_ccw(const std::vector<Vector2d>& pts) {
  std::vector<int> idx(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) idx[i] = static_cast<int>(i);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (pts[a][0] != pts[b][0]) return pts[a][0] < pts[b][0];
    return pts[a][1] < pts[b][1];
  });
  auto cross = [&](int o, int a, int b) {
    const Vector2d u = pts[a] - pts[o], v = pts[b] - pts[o];
    return u[0] * v[1] - u[1] * v[0];
  };
  std::vector<int> hl;
  for (int pass = 0; pass < 2; ++pass) {
    const size_t start = hl.size();
    for (int i : idx) {
      while (hl.size() >= start + 2 &&
             cross(hl[hl.size() - 2], hl[hl.size() - 1], i) <= 0)
        hl.pop_back();
      hl.push_back(i);
    }
    hl.pop_back();
    std::reverse(idx.begin(), idx.end());
  }
  if (hl.empty() && !pts.empty()) hl.push_back(idx[0]);
  return hl;
}

// Exact planar projection onto the first two coordinates by support
// refinement: hull edges of the collected support points are either
// certified as valid rows (probe value matches the edge) or split at the
// probe's new support vertex. On termination the inner hull and the outer
// row intersection coincide, so the result is the orthogonal projection
// within LP tolerance. One LP per probe; immune to the intermediate-row
// blowup that variable elimination suffers in high fiber dimensions.
// nullopt when the projection is unbounded.
std::optional<Polytope> project_planar(const Polytope& P,
                                       const ProjectOptions& opts) {
  const LpOptions& lp = opts.red.lp;
  if (!lp_feasible(P.G, P.h, lp).feasible) return Polytope::empty(2);

  std::vector<Vector2d> pts;
  auto add_point = [&](const Vector2d& q) {
    for (const auto& p : pts)
      if ((p - q).lpNorm<Eigen::Infinity>() <=
          1e-9 * (1.0 + q.lpNorm<Eigen::Infinity>()))
        return false;
    pts.push_back(q);
    return true;
  };

  std::vector<std::pair<Vector2d, double>> rows;
  const Vector2d axes[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (const auto& d : axes) {
    SupportProbe pr = probe2(P, d, lp);
    if (pr.unbounded) return std::nullopt;
    rows.emplace_back(d, pr.value);
    add_point(pr.point);
  }

  std::map<std::pair<int, int>, char> done;
  int budget = 4000;
  bool grew = true;
  while (grew) {
    grew = false;
    const std::vector<int> hl = hull_ccw(pts);
    const int k = static_cast<int>(hl.size());
    if (k < 2) break;
    for (int i = 0; i < k; ++i) {
      const int ia = hl[i], ib = hl[(i + 1) % k];
      const auto key = std::make_pair(ia, ib);
      if (done.count(key)) continue;
      Vector2d e = pts[ib] - pts[ia];
      const double len = e.norm();
      if (len <= 1e-12) {
        done[key] = 1;
        continue;
      }
      Vector2d n(e[1], -e[0]);
      n /= len;
      if (--budget < 0)
        throw NumericalFailure(
            "explicit_projection: support refinement did not converge");
      SupportProbe pr = probe2(P, n, lp);
      if (pr.unbounded) return std::nullopt;
      rows.emplace_back(n, pr.value);
      const double vedge = n.dot(pts[ia]);
      if (pr.value > vedge + 1e-9 * (1.0 + std::abs(vedge)) &&
          add_point(pr.point)) {
        grew = true;
        break;  // hull changed; rebuild before probing further
      }
      done[key] = 1;
    }
  }

  Eigen::MatrixXd G(static_cast<int>(rows.size()), 2);
  Eigen::VectorXd h(static_cast<int>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    G.row(static_cast<int>(i)) = rows[i].first.transpose();
    h[static_cast<int>(i)] = rows[i].second;
  }
  return remove_redundancy(Polytope(std::move(G), std::move(h)), opts.red);
}

// Interval projection onto the first coordinate; nullopt when unbounded.
std::optional<Polytope> project_interval(const Polytope& P,
                                         const ProjectOptions& opts) {
  const LpOptions& lp = opts.red.lp;
  if (!lp_feasible(P.G, P.h, lp).feasible) return Polytope::empty(1);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(P.dim);
  c[0] = 1.0;
  LpCoreResult up = lp_max(P.G, P.h, c, lp);
  c[0] = -1.0;
  LpCoreResult dn = lp_max(P.G, P.h, c, lp);
  if (up.status != LpStatus::Optimal || dn.status != LpStatus::Optimal)
    return std::nullopt;
  Eigen::MatrixXd G(2, 1);
  G << 1.0, -1.0;
  Eigen::VectorXd h(2);
  h << up.objective, dn.objective;
  return Polytope(std::move(G), std::move(h));
}

}  // namespace

Polytope explicit_projection(const ImplicitRcis& rcis,
                             const ProjectOptions& opts) {
  if (rcis.kind == RcisKind::Empty) return Polytope::empty(rcis.n);
  const Polytope& P = rcis.kind == RcisKind::SingleCsub ? *rcis.csub
                                                        : *rcis.clambda;
  // low state dimensions take the support-refinement path; the fiber
  // dimension (theta and hull multipliers) makes elimination explode there
  if (rcis.n == 1) {
    if (auto r = project_interval(P, opts)) return *r;
  } else if (rcis.n == 2) {
    if (auto r = project_planar(P, opts)) return *r;
  }
  std::vector<int> keep(rcis.n);
  for (int i = 0; i < rcis.n; ++i) keep[i] = i;
  return project(P, keep, opts);
}

}  // namespace rcis
