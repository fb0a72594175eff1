#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rcis/config.hpp"
#include "rcis/rcis.hpp"
#include "rcis/supervisor.hpp"

namespace rcis {

// Serialized invariant set: kind, dimensions, polytopes, machine tables and
// plant digest. Deliberately timing-free so identical configs reproduce the
// file byte for byte; wall-clock data goes to the report instead.
std::string rcis_to_json(const ImplicitRcis& rcis,
                         const std::optional<Polytope>& explicit_proj =
                             std::nullopt);
ImplicitRcis rcis_from_json(const std::string& text);

// Build report with per-state statistics and timings.
std::string report_to_json(const BuildOutcome& outcome);

// Flat trace: t, state, disturbance, nominal and applied inputs, correction.
std::string trajectory_csv(const Trajectory& traj);

struct CompareRow {
  std::string method;
  double time_s = 0.0;
  double vol_pct = 0.0;
};

std::string compare_csv(const std::vector<CompareRow>& rows);

// Time plot of state components (solid), applied input (dashed) and safe
// bounds (faint horizontal lines) for the banded coordinates.
std::string svg_trajectory(const Trajectory& traj,
                           const std::vector<std::pair<double, double>>& bands,
                           const std::string& title);

// Planar set outline against an enclosing reference polytope.
std::string svg_polytope2d(const Polytope& poly, const Polytope& reference,
                           const std::string& title);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace rcis
