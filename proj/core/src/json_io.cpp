#include "convexorder/json_io.hpp"

#include <gmpxx.h>

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "convexorder/errors.hpp"

namespace convexorder::io {

using nlohmann::json;

namespace {

double number_value(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      mpq_class q(v.get<std::string>());
      q.canonicalize();
      return q.get_d();
    } catch (const std::exception&) {
      throw BadSpec(std::string("invalid rational literal for ") + what);
    }
  }
  throw BadSpec(std::string("expected number or \"p/q\" string for ") + what);
}

Vec vec_value(const json& v, const char* what) {
  if (!v.is_array()) throw BadSpec(std::string("expected array for ") + what);
  Vec out;
  for (const json& c : v) out.push_back(number_value(c, what));
  return out;
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (double c : v) a.push_back(c);
  return a;
}

json matrix_rows_json(const std::vector<std::vector<double>>& rows) {
  json a = json::array();
  for (const auto& r : rows) {
    json rr = json::array();
    for (double v : r) rr.push_back(v);
    a.push_back(std::move(rr));
  }
  return a;
}

json points_json(const std::vector<Vec>& pts) {
  json a = json::array();
  for (const Vec& p : pts) a.push_back(vec_json(p));
  return a;
}

std::vector<Vec> points_value(const json& v, const char* what) {
  if (!v.is_array()) throw BadSpec(std::string("expected point list for ") + what);
  std::vector<Vec> out;
  for (const json& p : v) out.push_back(vec_value(p, what));
  return out;
}

json parse_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw BadSpec("malformed JSON");
  return j;
}

Matrix matrix_value(const json& v, std::size_t rows, std::size_t cols, const char* what) {
  if (!v.is_array() || v.size() != rows)
    throw BadSpec(std::string("matrix has wrong row count for ") + what);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const json& r = v[i];
    if (!r.is_array() || r.size() != cols)
      throw BadSpec(std::string("matrix has wrong column count for ") + what);
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = number_value(r[j], what);
  }
  return m;
}

sim::SimSpec parse_side(const json& node, std::size_t dim, std::vector<double> grid) {
  const std::size_t intervals = grid.size() - 1;

  if (node.contains("marks")) {
    sim::PoissonMeasureSpec spec;
    spec.dim = dim;
    spec.grid = std::move(grid);
    const json& marks = node.at("marks");
    if (!marks.contains("rates") || !marks.contains("values"))
      throw BadSpec("marks block needs rates and values");
    for (const json& r : marks.at("rates")) spec.mark_rates.push_back(number_value(r, "rates"));
    const json& values = marks.at("values");
    if (!values.is_array() || values.size() != intervals)
      throw BadSpec("marks.values needs one entry per interval");
    for (const json& per : values) {
      std::vector<Vec> heights;
      for (const json& h : per) {
        Vec hv = vec_value(h, "marks.values");
        if (hv.size() != dim) throw BadSpec("mark jump value has wrong dimension");
        heights.push_back(std::move(hv));
      }
      if (heights.size() != spec.mark_rates.size())
        throw BadSpec("marks.values needs one vector per mark");
      spec.jump_values.push_back(std::move(heights));
    }
    std::size_t drivers = 0;
    if (node.contains("A")) {
      const json& a = node.at("A");
      if (!a.is_array() || a.size() != intervals) throw BadSpec("A needs one block per interval");
      drivers = a[0].empty() ? 0 : a[0][0].size();
      for (const json& blk : a) spec.diffusion.push_back(matrix_value(blk, dim, drivers, "A"));
    } else {
      for (std::size_t k = 0; k < intervals; ++k) spec.diffusion.emplace_back(dim, 0);
    }
    spec.drivers = drivers;
    spec.validate();
    return spec;
  }

  sim::StrategySpec spec;
  spec.dim = dim;
  spec.grid = std::move(grid);
  std::size_t drivers = 0;
  auto block_drivers = [&](const char* key) -> std::size_t {
    if (!node.contains(key)) return 0;
    const json& b = node.at(key);
    if (!b.is_array() || b.empty()) return 0;
    if (key == std::string("lambda")) return b[0].size();
    return b[0].empty() ? 0 : b[0][0].size();
  };
  drivers = std::max({block_drivers("A"), block_drivers("J"), block_drivers("lambda")});
  spec.drivers = drivers;

  auto load_blocks = [&](const char* key, std::vector<Matrix>& dst) {
    if (!node.contains(key)) {
      for (std::size_t k = 0; k < intervals; ++k) dst.emplace_back(dim, drivers, 0.0);
      return;
    }
    const json& b = node.at(key);
    if (!b.is_array() || b.size() != intervals)
      throw BadSpec(std::string(key) + " needs one block per interval");
    for (const json& blk : b) dst.push_back(matrix_value(blk, dim, drivers, key));
  };
  load_blocks("A", spec.diffusion);
  load_blocks("J", spec.jumps);
  if (node.contains("lambda")) {
    const json& l = node.at("lambda");
    if (!l.is_array() || l.size() != intervals)
      throw BadSpec("lambda needs one vector per interval");
    for (const json& lv : l) {
      Vec rates = vec_value(lv, "lambda");
      if (rates.size() != drivers) throw BadSpec("lambda vector has wrong length");
      spec.intensities.push_back(std::move(rates));
    }
  } else {
    for (std::size_t k = 0; k < intervals; ++k) spec.intensities.emplace_back(drivers, 0.0);
  }
  spec.validate();
  return spec;
}

}  // namespace

DiscreteMeasure parse_measure(const std::string& json_text) {
  json j = parse_text(json_text);
  if (!j.contains("dimension") || !j.contains("atoms"))
    throw BadSpec("measure file needs dimension and atoms");
  const std::size_t dim = j.at("dimension").get<std::size_t>();
  std::vector<Atom> atoms;
  for (const json& a : j.at("atoms")) {
    Atom atom;
    atom.point = vec_value(a.at("point"), "atom point");
    atom.mass = number_value(a.at("mass"), "atom mass");
    atoms.push_back(std::move(atom));
  }
  try {
    return DiscreteMeasure(dim, std::move(atoms));
  } catch (const std::invalid_argument& e) {
    throw BadSpec(e.what());
  }
}

DiscreteMeasure read_measure_file(const std::string& path) {
  return parse_measure(read_file(path));
}

std::string measure_json(const DiscreteMeasure& m) {
  json j;
  j["dimension"] = m.dimension();
  json atoms = json::array();
  for (const Atom& a : m.atoms()) atoms.push_back({{"point", vec_json(a.point)}, {"mass", a.mass}});
  j["atoms"] = std::move(atoms);
  return j.dump(2);
}

std::string coupling_json(const order::Coupling& c) {
  json j;
  j["rows"] = points_json(c.row_points);
  j["cols"] = points_json(c.col_points);
  j["pi"] = matrix_rows_json(c.pi);
  return j.dump(2);
}

std::string separator_json(const order::ConvexSeparator& s) {
  json j;
  j["points"] = points_json(s.points);
  j["values"] = vec_json(s.values);
  j["subgradients"] = points_json(s.subgradients);
  j["gap"] = s.gap;
  return j.dump(2);
}

order::Coupling parse_coupling(const std::string& json_text) {
  json j = parse_text(json_text);
  order::Coupling c;
  c.row_points = points_value(j.at("rows"), "rows");
  c.col_points = points_value(j.at("cols"), "cols");
  for (const json& r : j.at("pi")) {
    std::vector<double> row;
    for (const json& v : r) row.push_back(number_value(v, "pi"));
    c.pi.push_back(std::move(row));
  }
  return c;
}

order::ConvexSeparator parse_separator(const std::string& json_text) {
  json j = parse_text(json_text);
  order::ConvexSeparator s;
  s.points = points_value(j.at("points"), "points");
  for (const json& v : j.at("values")) s.values.push_back(number_value(v, "values"));
  s.subgradients = points_value(j.at("subgradients"), "subgradients");
  if (j.contains("gap")) s.gap = number_value(j.at("gap"), "gap");
  return s;
}

CertificateKind detect_certificate(const std::string& json_text) {
  json j = parse_text(json_text);
  if (j.contains("pi")) return CertificateKind::Coupling;
  if (j.contains("values")) return CertificateKind::Separator;
  throw BadSpec("certificate file is neither a coupling nor a separator");
}

std::string kernel_json(const order::Kernel& k) {
  json j;
  j["rows"] = points_json(k.row_points);
  j["cols"] = points_json(k.col_points);
  j["K"] = matrix_rows_json(k.weights);
  j["method"] = k.used_lp_fallback ? "lp" : "iterative";
  j["rounds"] = k.rounds;
  j["transport_residual_l1"] = k.transport_residual_l1;
  json res = json::array();
  for (std::size_t i = 0; i < k.row_points.size(); ++i) {
    Vec bary(k.row_points[i].size(), 0.0);
    for (std::size_t jcol = 0; jcol < k.col_points.size(); ++jcol)
      axpy(bary, k.weights[i][jcol], k.col_points[jcol]);
    res.push_back(norm_inf(sub(bary, k.row_points[i])));
  }
  j["row_barycenter_residuals"] = std::move(res);
  return j.dump(2);
}

order::Kernel parse_kernel(const std::string& json_text) {
  json j = parse_text(json_text);
  order::Kernel k;
  k.row_points = points_value(j.at("rows"), "rows");
  k.col_points = points_value(j.at("cols"), "cols");
  for (const json& r : j.at("K")) {
    std::vector<double> row;
    for (const json& v : r) row.push_back(number_value(v, "K"));
    k.weights.push_back(std::move(row));
  }
  if (j.contains("method")) k.used_lp_fallback = j.at("method") == "lp";
  if (j.contains("rounds")) k.rounds = j.at("rounds").get<int>();
  return k;
}

std::string polytope_json(const geometry::Polytope& p) {
  json j;
  json hs = json::array();
  for (const geometry::HalfSpace& h : p.halfspaces)
    hs.push_back({{"normal", vec_json(h.normal)}, {"offset", h.offset}});
  j["halfspaces"] = std::move(hs);
  j["vertices"] = points_json(p.vertices);
  return j.dump(2);
}

std::string witness_json(const geometry::WitnessSimplex& w) {
  json j;
  j["points"] = points_json(w.points);
  j["weights"] = vec_json(w.weights);
  return j.dump(2);
}

Scenario parse_scenario(const std::string& json_text) {
  json j = parse_text(json_text);
  if (!j.contains("horizon")) throw BadSpec("scenario needs a horizon");
  const double horizon = number_value(j.at("horizon"), "horizon");
  if (!(horizon > 0.0)) throw BadSpec("horizon must be positive");

  std::vector<double> grid;
  if (j.contains("grid"))
    for (const json& t : j.at("grid")) grid.push_back(number_value(t, "grid"));
  if (grid.empty() || grid.front() > 1e-12) grid.insert(grid.begin(), 0.0);
  if (std::abs(grid.back() - horizon) > 1e-12) grid.push_back(horizon);

  std::size_t dim = 0;
  if (j.contains("dimension")) {
    dim = j.at("dimension").get<std::size_t>();
  } else {
    // Infer d from the first matrix block present.
    for (const char* side : {"F", "G"}) {
      const json& node = j.at(side);
      for (const char* key : {"A", "J"}) {
        if (node.contains(key) && !node.at(key).empty()) {
          dim = node.at(key)[0].size();
          break;
        }
      }
      if (dim == 0 && node.contains("marks") && !node.at("marks").at("values").empty() &&
          !node.at("marks").at("values")[0].empty())
        dim = node.at("marks").at("values")[0][0].size();
      if (dim) break;
    }
  }
  if (dim == 0) throw BadSpec("could not infer the scenario dimension");

  Scenario sc;
  sc.relation = j.contains("relation")
                    ? order::relation_from_name(j.at("relation").get<std::string>())
                    : order::Relation::cxp;
  sc.f = parse_side(j.at("F"), dim, grid);
  sc.g = parse_side(j.at("G"), dim, grid);
  return sc;
}

Scenario read_scenario_file(const std::string& path) { return parse_scenario(read_file(path)); }

std::string compare_report_json(const sim::CompareReport& report, std::size_t paths,
                                std::uint64_t seed) {
  json j;
  j["paths"] = paths;
  j["seed"] = seed;
  j["hypotheses_ok"] = report.hypotheses_ok;
  j["any_violation"] = report.any_violation;
  json hyp = json::array();
  for (const sim::IntervalReport& r : report.hypotheses)
    hyp.push_back({{"t0", r.t0}, {"t1", r.t1}, {"psd_ok", r.psd_ok}, {"jumps_ok", r.jumps_ok}});
  j["hypotheses"] = std::move(hyp);
  json rows = json::array();
  for (const sim::CompareRow& r : report.rows) {
    const char* decision = r.decision == sim::Decision::Violation     ? "violation"
                           : r.decision == sim::Decision::Consistent ? "consistent"
                                                                      : "inconclusive";
    rows.push_back({{"phi", r.phi},
                    {"mean_F", r.mean_f},
                    {"se_F", r.se_f},
                    {"mean_G", r.mean_g},
                    {"se_G", r.se_g},
                    {"decision", decision}});
  }
  j["rows"] = std::move(rows);
  return j.dump(2);
}

std::string deviation_rows_json(const std::vector<sim::DeviationRow>& rows) {
  json arr = json::array();
  for (const sim::DeviationRow& r : rows) {
    json row = {{"x", r.x}, {"bound", r.bound}, {"lambda", r.lambda_at_min}};
    if (r.empirical_tail) row["empirical_tail"] = *r.empirical_tail;
    if (r.tail_se) row["tail_se"] = *r.tail_se;
    arr.push_back(std::move(row));
  }
  json j;
  j["rows"] = std::move(arr);
  return j.dump(2);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadSpec("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw BadSpec("cannot write file: " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

}  // namespace convexorder::io
