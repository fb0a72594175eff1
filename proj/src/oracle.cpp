#include "rcis/oracle.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "rcis/errors.hpp"
#include "rcis/lp.hpp"

namespace rcis {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Word-to-double map fixed independently of the standard library's
// distribution implementations, so seeded runs agree across platforms.
double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

VectorXd box_sample(const Box& box, std::mt19937_64& gen) {
  VectorXd x(box.dim());
  for (int i = 0; i < box.dim(); ++i)
    x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * unit_uniform(gen);
  return x;
}

VectorXd unit_direction(int n, std::mt19937_64& gen) {
  VectorXd v(n);
  for (;;) {
    for (int i = 0; i + 1 < n; i += 2) {
      const double u1 = std::max(unit_uniform(gen), 1e-300);
      const double u2 = unit_uniform(gen);
      const double r = std::sqrt(-2.0 * std::log(u1));
      v[i] = r * std::cos(2.0 * M_PI * u2);
      v[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    if (n % 2 == 1) {
      const double u1 = std::max(unit_uniform(gen), 1e-300);
      const double u2 = unit_uniform(gen);
      v[n - 1] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    const double nrm = v.norm();
    if (nrm > 1e-12) return v / nrm;
  }
}

// Rows of the safe pre-image in (x, u) space against one disturbance vertex:
// (x, u) stays safe and A x + B u + d lands in C.
Polytope preimage_lift(const LinearSystem& plant, const Polytope& C,
                       const std::vector<VectorXd>& dvs) {
  const int n = plant.n();
  const int m = plant.m();
  const int rows_s = plant.S.rows();
  const int rows_c = C.rows();
  const int nd = static_cast<int>(dvs.size());
  MatrixXd G(rows_s + nd * rows_c, n + m);
  VectorXd h(rows_s + nd * rows_c);
  G.topRows(rows_s) = plant.S.G;
  h.head(rows_s) = plant.S.h;
  const MatrixXd GA = C.G * plant.A;
  const MatrixXd GB = C.G * plant.B;
  for (int j = 0; j < nd; ++j) {
    G.block(rows_s + j * rows_c, 0, rows_c, n) = GA;
    G.block(rows_s + j * rows_c, n, rows_c, m) = GB;
    h.segment(rows_s + j * rows_c, rows_c) = C.h - C.G * dvs[j];
  }
  return Polytope(std::move(G), std::move(h));
}

Polytope preimage(const LinearSystem& plant, const Polytope& C,
                  const ProjectOptions& opts) {
  std::vector<int> keep(plant.n());
  std::iota(keep.begin(), keep.end(), 0);
  if (plant.disturbance_mode == DisturbanceMode::NonMeasurable) {
    // One input must work for every disturbance vertex at once.
    return project(preimage_lift(plant, C, plant.D_v), keep, opts);
  }
  // The input may depend on the disturbance: eliminate it per vertex and
  // intersect the per-vertex pre-images.
  std::optional<Polytope> acc;
  for (const VectorXd& d : plant.D_v) {
    Polytope pj = project(preimage_lift(plant, C, {d}), keep, opts);
    acc = acc ? intersect(*acc, pj) : pj;
  }
  return remove_redundancy(*acc, opts.red);
}

}  // namespace

OracleResult maximal_rcis(const LinearSystem& plant, int max_iter,
                          const ProjectOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (plant.D_v.empty())
    throw Error("maximal_rcis: the disturbance vertex list is empty");
  std::vector<int> keep(plant.n());
  std::iota(keep.begin(), keep.end(), 0);
  Polytope C = project(plant.S, keep, opts);
  OracleResult res{C, 0, false, 0.0};
  for (int it = 1; it <= max_iter; ++it) {
    Polytope next = preimage(plant, C, opts);
    if (!contains(C, next, 1e-6))
      throw NumericalFailure(
          "maximal_rcis: iterate escaped its predecessor; the iteration lost "
          "monotonicity");
    const bool done = contains(next, C, 1e-7);
    C = std::move(next);
    res.iterations = it;
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.set = C;
  res.wall_time = seconds_since(t0);
  return res;
}

VolumeEstimate mc_volume_ratio(const MemberFn& in_a, const MemberFn& in_b,
                               const Box& box, long long samples,
                               std::uint64_t seed) {
  if (samples <= 0) throw Error("mc_volume_ratio: samples must be positive");
  VolumeEstimate est;
  est.samples = samples;
  est.seed = seed;
  std::mt19937_64 gen(seed);
  for (long long i = 0; i < samples; ++i) {
    const VectorXd x = box_sample(box, gen);
    if (in_a(x)) ++est.hits_a;
    if (in_b(x)) ++est.hits_b;
  }
  if (est.hits_b == 0) {
    est.degenerate = true;
    est.ratio = 0.0;
  } else {
    est.ratio = static_cast<double>(est.hits_a) /
                static_cast<double>(est.hits_b);
  }
  const double p = static_cast<double>(est.hits_a) /
                   static_cast<double>(samples);
  est.half_width =
      1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
  return est;
}

StepMarginFn step_margin_explicit(const LinearSystem& plant,
                                  const Polytope& C) {
  if (C.dim != plant.n())
    throw DimensionMismatch("step_margin_explicit: set dimension " +
                            std::to_string(C.dim) + ", expected " +
                            std::to_string(plant.n()));
  return [plant, C](const VectorXd& x, const VectorXd& d) {
    const int n = plant.n();
    const int m = plant.m();
    const int rows_s = plant.S.rows();
    const int rows_c = C.rows();
    MatrixXd M(rows_s + rows_c, m);
    VectorXd rhs(rows_s + rows_c);
    M.topRows(rows_s) = plant.S.G.rightCols(m);
    rhs.head(rows_s) = plant.S.h - plant.S.G.leftCols(n) * x;
    M.bottomRows(rows_c) = C.G * plant.B;
    rhs.tail(rows_c) = C.h - C.G * (plant.A * x + d);
    return lp_feasible(M, rhs).margin;
  };
}

StepMarginFn step_margin_implicit(const LinearSystem& plant,
                                  const ImplicitRcis& rcis) {
  return [plant, rcis](const VectorXd& x, const VectorXd& d) {
    auto [M, rhs] = one_step_rows(rcis, plant, x, d);
    return lp_feasible(M, rhs).margin;
  };
}

AuditReport invariance_audit(const MemberFn& member,
                             const StepMarginFn& step_margin,
                             const LinearSystem& plant, long long n_samples,
                             std::uint64_t seed,
                             const std::optional<Polytope>& region,
                             const Box& fallback_box, double eps_feas) {
  const auto t0 = std::chrono::steady_clock::now();
  AuditReport rep;
  rep.requested = n_samples;
  std::mt19937_64 gen(seed);

  const auto check_point = [&](const VectorXd& x) {
    ++rep.member_samples;
    for (const VectorXd& d : plant.D_v) {
      const double margin = step_margin(x, d);
      ++rep.checks;
      rep.worst_slack = std::min(rep.worst_slack, margin);
      if (margin < -eps_feas) ++rep.violations;
    }
  };

  if (region) {
    const FeasResult start = feasible_point(*region);
    if (!start.feasible) {
      rep.seconds = seconds_since(t0);
      return rep;  // empty region: vacuously clean
    }
    VectorXd x = start.x;
    int burn_in = 50;
    long long steps = 0;
    const long long step_cap = 100 * (n_samples + burn_in) + 1000;
    while (rep.member_samples < n_samples && steps < step_cap) {
      ++steps;
      const VectorXd v = unit_direction(region->dim, gen);
      double lo = -1e9, hi = 1e9;
      for (int i = 0; i < region->rows(); ++i) {
        const double den = region->G.row(i).dot(v);
        const double num = region->h[i] - region->G.row(i).dot(x);
        if (den > 1e-12)
          hi = std::min(hi, num / den);
        else if (den < -1e-12)
          lo = std::max(lo, num / den);
      }
      if (hi <= lo + 1e-15) continue;  // chord degenerate along v; retry
      x += (lo + (hi - lo) * unit_uniform(gen)) * v;
      if (burn_in > 0) {
        --burn_in;
        continue;
      }
      if (member(x)) check_point(x);
    }
  } else {
    long long attempts = 0;
    const long long attempt_cap = 100 * n_samples + 1000;
    while (rep.member_samples < n_samples && attempts < attempt_cap) {
      ++attempts;
      const VectorXd x = box_sample(fallback_box, gen);
      if (member(x)) check_point(x);
    }
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

}  // namespace rcis
