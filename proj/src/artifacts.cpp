#include "rcis/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rcis/errors.hpp"

namespace rcis {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

json matrix_json(const MatrixXd& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

MatrixXd matrix_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError("rcis file: '" + what + "' must be an array of rows");
  MatrixXd M(j.size(), j[0].size());
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != j[0].size())
      throw ConfigError("rcis file: ragged rows in '" + what + "'");
    for (size_t c = 0; c < j[r].size(); ++c)
      M(static_cast<int>(r), static_cast<int>(c)) = j[r][c].get<double>();
  }
  return M;
}

VectorXd vector_from(const json& j, const std::string& what) {
  if (!j.is_array())
    throw ConfigError("rcis file: '" + what + "' must be an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json polytope_json(const Polytope& P) {
  return json{{"dim", P.dim}, {"G", matrix_json(P.G)}, {"h", vector_json(P.h)}};
}

Polytope polytope_from(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("G") || !j.contains("h"))
    throw ConfigError("rcis file: '" + what + "' must hold 'G' and 'h'");
  return Polytope(matrix_from(j["G"], what + ".G"),
                  vector_from(j["h"], what + ".h"));
}

json machine_json(const MealyMachine& mm) {
  json tr = json::array();
  json ou = json::array();
  for (int s = 0; s < mm.num_states; ++s) {
    json trow = json::array(), orow = json::array();
    for (int a = 0; a < mm.num_actions; ++a) {
      trow.push_back(mm.transition[s][a]);
      orow.push_back(mm.output[s][a]);
    }
    tr.push_back(std::move(trow));
    ou.push_back(std::move(orow));
  }
  return json{{"num_states", mm.num_states}, {"num_actions", mm.num_actions},
              {"num_symbols", mm.num_symbols}, {"m", mm.m},
              {"transition", std::move(tr)}, {"output", std::move(ou)},
              {"state_names", mm.state_names},
              {"symbol_names", mm.symbol_names}};
}

MealyMachine machine_from(const json& j) {
  for (const char* key : {"num_states", "num_actions", "num_symbols", "m",
                          "transition", "output"})
    if (!j.contains(key))
      throw ConfigError(std::string("rcis file: machine lacks '") + key + "'");
  std::vector<std::vector<int>> tr = j["transition"], ou = j["output"];
  MealyMachine mm(j["num_states"].get<int>(), j["num_actions"].get<int>(),
                  j["num_symbols"].get<int>(), j["m"].get<int>(), tr, ou);
  if (j.contains("state_names"))
    mm.state_names = j["state_names"].get<std::vector<std::string>>();
  if (j.contains("symbol_names"))
    mm.symbol_names = j["symbol_names"].get<std::vector<std::string>>();
  return mm;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

}  // namespace

std::string rcis_to_json(const ImplicitRcis& rcis,
                         const std::optional<Polytope>& explicit_proj) {
  json j;
  j["format"] = "rcis-set-v1";
  j["kind"] = rcis.kind == RcisKind::SingleCsub ? "single"
              : rcis.kind == RcisKind::Lambda   ? "lambda"
                                                : "empty";
  j["n"] = rcis.n;
  j["m"] = rcis.m;
  j["L"] = rcis.L;
  j["plant_digest"] = rcis.plant_digest;
  j["machine"] = machine_json(rcis.machine);
  if (rcis.kind == RcisKind::SingleCsub) {
    j["dominant_state"] = rcis.dominant_state;
    j["csub"] = polytope_json(*rcis.csub);
  } else if (rcis.kind == RcisKind::Lambda) {
    j["q0"] = rcis.q0;
    json blocks = json::array();
    for (const Polytope& b : rcis.blocks) blocks.push_back(polytope_json(b));
    j["blocks"] = std::move(blocks);
    j["clambda"] = polytope_json(*rcis.clambda);
  }
  if (explicit_proj) j["explicit_projection"] = polytope_json(*explicit_proj);
  return j.dump(2) + "\n";
}

ImplicitRcis rcis_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("rcis file: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "rcis-set-v1")
    throw ConfigError("rcis file: missing or unsupported 'format'");
  const std::string kind_s = j.value("kind", "");
  RcisKind kind = kind_s == "single"   ? RcisKind::SingleCsub
                  : kind_s == "lambda" ? RcisKind::Lambda
                  : kind_s == "empty"  ? RcisKind::Empty
                                       : throw ConfigError(
                                             "rcis file: unknown kind '" +
                                             kind_s + "'");
  if (!j.contains("machine"))
    throw ConfigError("rcis file: missing 'machine'");
  ImplicitRcis rcis(kind, j.value("n", 0), j.value("m", 0), j.value("L", 0),
                    machine_from(j["machine"]), j.value("plant_digest", ""));
  if (kind == RcisKind::SingleCsub) {
    if (!j.contains("csub"))
      throw ConfigError("rcis file: single kind lacks 'csub'");
    rcis.dominant_state = j.value("dominant_state", -1);
    rcis.csub = polytope_from(j["csub"], "csub");
  } else if (kind == RcisKind::Lambda) {
    if (!j.contains("clambda") || !j.contains("blocks") || !j.contains("q0"))
      throw ConfigError("rcis file: lambda kind lacks 'clambda'/'blocks'/'q0'");
    rcis.q0 = j["q0"].get<std::vector<int>>();
    for (size_t i = 0; i < j["blocks"].size(); ++i)
      rcis.blocks.push_back(
          polytope_from(j["blocks"][i], "blocks[" + std::to_string(i) + "]"));
    rcis.clambda = polytope_from(j["clambda"], "clambda");
  }
  return rcis;
}

std::string report_to_json(const BuildOutcome& outcome) {
  json j;
  j["format"] = "rcis-report-v1";
  j["kind"] = outcome.rcis.kind == RcisKind::SingleCsub ? "single"
              : outcome.rcis.kind == RcisKind::Lambda   ? "lambda"
                                                        : "empty";
  j["empty"] = outcome.rcis.kind == RcisKind::Empty;
  j["lifted"] = outcome.prep.lifted;
  j["prefeedback"] = outcome.prep.prefed;
  j["plant_digest"] = outcome.rcis.plant_digest;
  j["seconds_total"] = outcome.seconds;
  j["dominant_path"] = outcome.rcis.report.dominant_path;
  json per = json::array();
  for (const CsubStats& st : outcome.rcis.report.per_state)
    per.push_back(json{{"state", st.state},
                       {"reach_states", st.reach_states},
                       {"rows_raw", st.rows_raw},
                       {"rows_reduced", st.rows_reduced},
                       {"seconds", st.seconds}});
  j["per_state"] = std::move(per);
  return j.dump(2) + "\n";
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  const int n = traj.steps.empty() ? 0 : static_cast<int>(traj.steps[0].x.size());
  const int m =
      traj.steps.empty() ? 0 : static_cast<int>(traj.steps[0].u_applied.size());
  out << "t";
  for (int i = 0; i < n; ++i) out << ",x" << i + 1;
  for (int i = 0; i < n; ++i) out << ",d" << i + 1;
  for (int i = 0; i < m; ++i) out << ",u_nominal" << i + 1;
  for (int i = 0; i < m; ++i) out << ",u_applied" << i + 1;
  out << ",correction_norm,qp_status\n";
  for (const SupervisionStep& st : traj.steps) {
    out << st.t;
    for (int i = 0; i < n; ++i) out << "," << fmt(st.x[i]);
    for (int i = 0; i < n; ++i) out << "," << fmt(st.d[i]);
    for (int i = 0; i < m; ++i) out << "," << fmt(st.u_nominal[i]);
    for (int i = 0; i < m; ++i)
      out << "," << (st.qp_status == QpStatus::Feasible ? fmt(st.u_applied[i])
                                                        : std::string("nan"));
    out << "," << fmt(st.correction_norm) << ","
        << (st.qp_status == QpStatus::Feasible ? "feasible" : "infeasible")
        << "\n";
  }
  return out.str();
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "method,time_s,vol_pct\n";
  for (const CompareRow& r : rows) {
    char t[40], v[40];
    std::snprintf(t, sizeof t, "%.3f", r.time_s);
    std::snprintf(v, sizeof v, "%.2f", r.vol_pct);
    out << r.method << "," << t << "," << v << "\n";
  }
  return out.str();
}

std::string svg_trajectory(const Trajectory& traj,
                           const std::vector<std::pair<double, double>>& bands,
                           const std::string& title) {
  const int W = 720, H = 420, ML = 56, MR = 16, MT = 36, MB = 40;
  const int T = static_cast<int>(traj.steps.size());
  const int n = T > 0 ? static_cast<int>(traj.steps[0].x.size()) : 0;
  const int m = T > 0 ? static_cast<int>(traj.steps[0].u_applied.size()) : 0;
  double lo = -1.0, hi = 1.0;
  if (T > 0) {
    lo = 1e300;
    hi = -1e300;
    for (const SupervisionStep& st : traj.steps) {
      for (int i = 0; i < n; ++i) {
        lo = std::min(lo, st.x[i]);
        hi = std::max(hi, st.x[i]);
      }
      for (int i = 0; i < m; ++i) {
        lo = std::min(lo, st.u_applied[i]);
        hi = std::max(hi, st.u_applied[i]);
      }
    }
    for (const auto& [blo, bhi] : bands) {
      lo = std::min(lo, blo);
      hi = std::max(hi, bhi);
    }
    const double pad = 0.1 * std::max(1e-9, hi - lo);
    lo -= pad;
    hi += pad;
  }
  const double xs = T > 1 ? double(W - ML - MR) / (T - 1) : 0.0;
  const auto px = [&](int t) { return ML + xs * t; };
  const auto py = [&](double v) {
    return MT + (H - MT - MB) * (hi - v) / (hi - lo);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << ML << "\" y=\"20\" font-family=\"monospace\" "
       "font-size=\"14\">" << title << "</text>\n";
  // axes
  s << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR
    << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML
    << "\" y2=\"" << H - MB << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << ML - 8 << "\" y=\"" << py(hi) + 4
    << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">"
    << fmt6(hi) << "</text>\n";
  s << "<text x=\"" << ML - 8 << "\" y=\"" << py(lo) + 4
    << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">"
    << fmt6(lo) << "</text>\n";
  s << "<text x=\"" << W - MR << "\" y=\"" << H - MB + 16
    << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"11\">t="
    << (T > 0 ? T - 1 : 0) << "</text>\n";

  for (size_t b = 0; b < bands.size() && T > 0; ++b) {
    const char* color = kPalette[b % 8];
    for (double v : {bands[b].first, bands[b].second})
      s << "<line x1=\"" << ML << "\" y1=\"" << fmt6(py(v)) << "\" x2=\""
        << W - MR << "\" y2=\"" << fmt6(py(v)) << "\" stroke=\"" << color
        << "\" stroke-opacity=\"0.35\" stroke-dasharray=\"6 4\"/>\n";
  }

  const auto polyline = [&](int coord, bool input, const char* color,
                            bool dashed) {
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dashed) s << " stroke-dasharray=\"4 3\"";
    s << " points=\"";
    for (int t = 0; t < T; ++t) {
      const double v = input ? traj.steps[t].u_applied[coord]
                             : traj.steps[t].x[coord];
      s << fmt6(px(t)) << "," << fmt6(py(v)) << " ";
    }
    s << "\"/>\n";
  };
  for (int i = 0; i < n; ++i) polyline(i, false, kPalette[i % 8], false);
  for (int i = 0; i < m; ++i) polyline(i, true, "#ff7f0e", true);

  int lx = W - MR - 60;
  for (int i = 0; i < n; ++i)
    s << "<text x=\"" << lx << "\" y=\"" << MT + 14 * i + 4
      << "\" font-family=\"monospace\" font-size=\"11\" fill=\""
      << kPalette[i % 8] << "\">x" << i + 1 << "</text>\n";
  if (m > 0)
    s << "<text x=\"" << lx << "\" y=\"" << MT + 14 * n + 4
      << "\" font-family=\"monospace\" font-size=\"11\" fill=\"#ff7f0e\">u"
      << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string svg_polytope2d(const Polytope& poly, const Polytope& reference,
                           const std::string& title) {
  if (poly.dim != 2 || reference.dim != 2)
    throw DimensionMismatch("svg_polytope2d: sets must be planar");
  const int W = 480, H = 480, M = 48;
  const auto ring = [](const Polytope& P) {
    std::vector<VectorXd> vs = vertices(P);
    VectorXd c = VectorXd::Zero(2);
    for (const VectorXd& v : vs) c += v;
    if (!vs.empty()) c /= double(vs.size());
    std::sort(vs.begin(), vs.end(), [&](const VectorXd& a, const VectorXd& b) {
      return std::atan2(a[1] - c[1], a[0] - c[0]) <
             std::atan2(b[1] - c[1], b[0] - c[0]);
    });
    return vs;
  };
  std::vector<VectorXd> pv = ring(poly), rv = ring(reference);
  double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
  for (const auto& vs : {pv, rv})
    for (const VectorXd& v : vs)
      for (int i = 0; i < 2; ++i) {
        lo[i] = std::min(lo[i], v[i]);
        hi[i] = std::max(hi[i], v[i]);
      }
  for (int i = 0; i < 2; ++i) {
    const double pad = 0.08 * std::max(1e-9, hi[i] - lo[i]);
    lo[i] -= pad;
    hi[i] += pad;
  }
  const auto px = [&](double x) {
    return M + (W - 2 * M) * (x - lo[0]) / (hi[0] - lo[0]);
  };
  const auto py = [&](double y) {
    return H - M - (H - 2 * M) * (y - lo[1]) / (hi[1] - lo[1]);
  };
  const auto path = [&](const std::vector<VectorXd>& vs) {
    std::ostringstream p;
    for (size_t i = 0; i < vs.size(); ++i)
      p << (i == 0 ? "M" : "L") << fmt6(px(vs[i][0])) << " "
        << fmt6(py(vs[i][1]));
    p << "Z";
    return p.str();
  };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<text x=\"" << M << "\" y=\"24\" font-family=\"monospace\" "
       "font-size=\"14\">" << title << "</text>\n";
  if (!rv.empty())
    s << "<path d=\"" << path(rv)
      << "\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
  if (!pv.empty())
    s << "<path d=\"" << path(pv)
      << "\" fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"#1f77b4\"/>\n";
  s << "</svg>\n";
  return s.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << content;
  if (!out.good()) throw Error("write failed for '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rcis
