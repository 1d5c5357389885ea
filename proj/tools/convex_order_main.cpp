#include <cinttypes>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "convexorder/errors.hpp"
#include "convexorder/geometry.hpp"
#include "convexorder/json_io.hpp"
#include "convexorder/measure.hpp"
#include "convexorder/order.hpp"
#include "convexorder/rng.hpp"
#include "convexorder/sim.hpp"

namespace {

using namespace convexorder;

constexpr int kExitOrdered = 0;
constexpr int kExitNotOrdered = 1;
constexpr int kExitError = 2;

Vec parse_point(const std::string& text) {
  Vec out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw BadSpec("cannot parse coordinate: " + tok);
    }
  }
  if (out.empty()) throw BadSpec("empty point");
  return out;
}

std::vector<Vec> parse_subset_file(const std::string& path) {
  const std::string text = io::read_file(path);
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw BadSpec("cannot parse subset file");
  const nlohmann::json& pts = j.is_array() ? j : j.at("points");
  std::vector<Vec> out;
  for (const auto& p : pts) {
    Vec v;
    for (const auto& c : p) v.push_back(c.get<double>());
    out.push_back(std::move(v));
  }
  if (out.empty()) throw BadSpec("subset file holds no points");
  return out;
}

int cmd_order_check(const std::string& mu_path, const std::string& nu_path,
                    const std::string& relation, const std::string& certificate_out, bool exact,
                    const std::string& validate_path) {
  const DiscreteMeasure mu = io::read_measure_file(mu_path);
  const DiscreteMeasure nu = io::read_measure_file(nu_path);
  const order::Relation rel = order::relation_from_name(relation);

  if (!validate_path.empty()) {
    // Certificate round trip: direct arithmetic only, no LP.
    const std::string text = io::read_file(validate_path);
    if (io::detect_certificate(text) == io::CertificateKind::Coupling) {
      const order::Coupling c = io::parse_coupling(text);
      const order::CouplingCheck chk = order::validate_coupling(mu, nu, rel, c);
      std::printf("coupling %s  row=%.3g col=%.3g bary=%.3g\n", chk.ok ? "valid" : "INVALID",
                  chk.row_residual, chk.col_residual, chk.barycenter_residual);
      return chk.ok ? kExitOrdered : kExitNotOrdered;
    }
    const order::ConvexSeparator s = io::parse_separator(text);
    const order::SeparatorCheck chk = order::validate_separator(mu, nu, rel, s);
    std::printf("separator %s  convexity=%.3g gap=%.6g\n", chk.ok ? "valid" : "INVALID",
                chk.convexity_violation, chk.gap);
    return chk.ok ? kExitOrdered : kExitNotOrdered;
  }

  const order::Verdict verdict = order::check_order(mu, nu, rel);
  // The exit code reflects the verdict; certificate serialization problems
  // are reported but do not change it.
  try {
    if (verdict.ordered) {
      std::printf("ordered: mu <=_%s nu\n", relation.c_str());
      if (exact && !order::validate_coupling_exact(mu, nu, rel, *verdict.coupling))
        std::printf("warning: coupling failed exact re-validation\n");
      if (!certificate_out.empty())
        io::write_file(certificate_out, io::coupling_json(*verdict.coupling));
    } else {
      std::printf("NOT ordered: separator gap %.6g\n", verdict.separator->gap);
      if (exact && !order::validate_separator_exact(mu, nu, rel, *verdict.separator))
        std::printf("warning: separator failed exact re-validation\n");
      if (!certificate_out.empty())
        io::write_file(certificate_out, io::separator_json(*verdict.separator));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "warning: could not write certificate: %s\n", e.what());
  }
  return verdict.ordered ? kExitOrdered : kExitNotOrdered;
}

int cmd_geometry_cx_set(const std::string& mu_path, const std::string& nu_path,
                        const std::string& point, const std::string& subset_path, int directions,
                        const std::string& out_path) {
  const DiscreteMeasure mu = io::read_measure_file(mu_path);
  const DiscreteMeasure nu = io::read_measure_file(nu_path);
  geometry::Polytope poly;
  if (!subset_path.empty())
    poly = geometry::cx_set_subset(mu, nu, parse_subset_file(subset_path), directions);
  else
    poly = geometry::cx_set(mu, nu, parse_point(point), directions);
  const std::string payload = io::polytope_json(poly);
  if (!out_path.empty())
    io::write_file(out_path, payload);
  else
    std::printf("%s\n", payload.c_str());
  std::fprintf(stderr, "cx-set: %zu halfspaces, %zu vertices\n", poly.halfspaces.size(),
               poly.vertices.size());
  return kExitOrdered;
}

int cmd_geometry_witness(const std::string& mu_path, const std::string& nu_path,
                         const std::string& point, const std::string& out_path) {
  const DiscreteMeasure mu = io::read_measure_file(mu_path);
  const DiscreteMeasure nu = io::read_measure_file(nu_path);
  const geometry::WitnessSimplex w = geometry::find_witness(mu, nu, parse_point(point));
  const std::string payload = io::witness_json(w);
  if (!out_path.empty())
    io::write_file(out_path, payload);
  else
    std::printf("%s\n", payload.c_str());
  std::fprintf(stderr, "witness: %zu points\n", w.points.size());
  return kExitOrdered;
}

const char* decision_name(sim::Decision d) {
  switch (d) {
    case sim::Decision::Violation:
      return "violation";
    case sim::Decision::Consistent:
      return "consistent";
    default:
      return "inconclusive";
  }
}

int cmd_sim_compare(const std::string& scenario_path, std::size_t paths, std::uint64_t seed,
                    bool force, const std::string& out_path) {
  const io::Scenario sc = io::read_scenario_file(scenario_path);
  const sim::CompareReport report = sim::compare(sc.f, sc.g, sc.relation, paths, seed, force);

  std::printf("%-30s %12s %10s %12s %10s  %s\n", "phi", "mean_F", "se_F", "mean_G", "se_G",
              "decision");
  for (const sim::CompareRow& r : report.rows)
    std::printf("%-30s %12.6f %10.2e %12.6f %10.2e  %s\n", r.phi.c_str(), r.mean_f, r.se_f,
                r.mean_g, r.se_g, decision_name(r.decision));
  if (!report.hypotheses_ok) std::printf("note: hypotheses fail on some interval (forced run)\n");
  if (!out_path.empty()) io::write_file(out_path, io::compare_report_json(report, paths, seed));
  return report.any_violation ? kExitNotOrdered : kExitOrdered;
}

int cmd_sim_deviation(const std::string& scenario_path, const std::string& x_grid,
                      const std::string& lambda_grid, std::size_t paths, std::uint64_t seed,
                      const std::string& out_path) {
  const io::Scenario sc = io::read_scenario_file(scenario_path);
  const Vec xs = parse_point(x_grid);
  const Vec lambdas = parse_point(lambda_grid);

  const sim::SampleMatrix g = sim::simulate_terminal(sc.g, paths, rng::mix64(seed ^ 0x47));
  const sim::SampleMatrix f = sim::simulate_terminal(sc.f, paths, rng::mix64(seed ^ 0x46));
  const auto rows = sim::deviation_bound(g, xs, lambdas, &f);

  bool violation = false;
  std::printf("%8s %12s %10s %14s %10s\n", "x", "bound", "lambda", "tail_F", "tail_se");
  for (const sim::DeviationRow& r : rows) {
    std::printf("%8.3f %12.6g %10.3f %14.6g %10.2e\n", r.x, r.bound, r.lambda_at_min,
                r.empirical_tail.value_or(0.0), r.tail_se.value_or(0.0));
    if (r.empirical_tail && *r.empirical_tail - 4.0 * r.tail_se.value_or(0.0) > r.bound)
      violation = true;
  }
  if (!out_path.empty()) io::write_file(out_path, io::deviation_rows_json(rows));
  return violation ? kExitNotOrdered : kExitOrdered;
}

int cmd_kernel_build(const std::string& mu_path, const std::string& nu_path,
                     const std::string& method, int max_rounds, double eps_floor,
                     const std::string& out_path, const std::string& validate_path) {
  const DiscreteMeasure mu = io::read_measure_file(mu_path);
  const DiscreteMeasure nu = io::read_measure_file(nu_path);

  if (!validate_path.empty()) {
    const order::Kernel k = io::parse_kernel(io::read_file(validate_path));
    double worst_row = 0.0, worst_bary = 0.0;
    std::vector<double> pushed(k.col_points.size(), 0.0);
    for (std::size_t i = 0; i < k.weights.size(); ++i) {
      double sum = 0.0;
      Vec bary(mu.dimension(), 0.0);
      for (std::size_t j = 0; j < k.col_points.size(); ++j) {
        sum += k.weights[i][j];
        axpy(bary, k.weights[i][j], k.col_points[j]);
      }
      worst_row = std::max(worst_row, std::abs(sum - 1.0));
      worst_bary = std::max(worst_bary, norm_inf(sub(bary, k.row_points[i])));
      const double mi = mu.mass_at(k.row_points[i]);
      for (std::size_t j = 0; j < k.col_points.size(); ++j) pushed[j] += mi * k.weights[i][j];
    }
    double l1 = 0.0;
    for (std::size_t j = 0; j < k.col_points.size(); ++j)
      l1 += std::abs(pushed[j] - nu.mass_at(k.col_points[j]));
    for (const Atom& a : nu.atoms()) {
      bool present = false;
      for (const Vec& p : k.col_points)
        if (norm_inf(sub(p, a.point)) <= 1e-9) present = true;
      if (!present) l1 += a.mass;
    }
    const bool ok = worst_row <= 1e-8 && worst_bary <= 1e-8 && l1 <= 1e-6;
    std::printf("kernel %s  rows=%.3g barycenter=%.3g transport_l1=%.3g\n",
                ok ? "valid" : "INVALID", worst_row, worst_bary, l1);
    return ok ? kExitOrdered : kExitNotOrdered;
  }

  const order::Verdict verdict = order::check_order(mu, nu, order::Relation::cx);
  if (!verdict.ordered) {
    std::printf("NOT cx-ordered: no admissible kernel exists\n");
    return kExitNotOrdered;
  }

  order::Kernel kernel;
  if (method == "lp") {
    const order::Coupling& c = *verdict.coupling;
    kernel.row_points = c.row_points;
    kernel.col_points = c.col_points;
    kernel.weights.assign(mu.size(), std::vector<double>(nu.size(), 0.0));
    kernel.used_lp_fallback = true;
    double worst = 0.0, l1 = 0.0;
    std::vector<double> pushed(nu.size(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double mi = mu.atoms()[i].mass;
      Vec bary(mu.dimension(), 0.0);
      for (std::size_t j = 0; j < nu.size(); ++j) {
        kernel.weights[i][j] = c.pi[i][j] / mi;
        pushed[j] += c.pi[i][j];
        axpy(bary, kernel.weights[i][j], kernel.col_points[j]);
      }
      worst = std::max(worst, norm_inf(sub(bary, kernel.row_points[i])));
    }
    for (std::size_t j = 0; j < nu.size(); ++j)
      l1 += std::abs(pushed[j] - nu.atoms()[j].mass);
    kernel.max_row_barycenter_residual = worst;
    kernel.transport_residual_l1 = l1;
  } else if (method == "iterative") {
    kernel = order::build_kernel_iterative(mu, nu, max_rounds, eps_floor);
  } else {
    throw BadSpec("unknown kernel method: " + method);
  }

  io::write_file(out_path, io::kernel_json(kernel));
  std::printf("kernel: method=%s rounds=%d fallback=%s transport_l1=%.3g bary=%.3g\n",
              method.c_str(), kernel.rounds, kernel.used_lp_fallback ? "yes" : "no",
              kernel.transport_residual_l1, kernel.max_row_barycenter_residual);
  return kExitOrdered;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convex order decisions, geometric certificates, and Monte Carlo checks for "
               "finitely supported measures"};
  app.require_subcommand(1);

  auto* order_cmd = app.add_subcommand("order", "order relations between measures");
  order_cmd->require_subcommand(1);
  auto* check = order_cmd->add_subcommand("check", "decide mu <=_rel nu with certificates");
  std::string relation = "cx", mu_path, nu_path, certificate_out, validate_path;
  bool exact = false;
  check->add_option("--relation", relation, "cx | cxp | cxpi")->required();
  check->add_option("--mu", mu_path, "mu measure JSON")->required();
  check->add_option("--nu", nu_path, "nu measure JSON")->required();
  check->add_option("--certificate", certificate_out, "write the certificate JSON here");
  check->add_option("--validate", validate_path, "re-validate an emitted certificate file");
  check->add_flag("--exact", exact, "re-validate the verdict in exact rational arithmetic");

  auto* geo = app.add_subcommand("geometry", "threshold sets, hulls and witnesses");
  geo->require_subcommand(1);
  auto* cxset = geo->add_subcommand("cx-set", "intersection of threshold half-spaces");
  std::string g_mu, g_nu, g_point, g_subset, g_out;
  int g_directions = 0;
  cxset->add_option("--mu", g_mu)->required();
  cxset->add_option("--nu", g_nu)->required();
  cxset->add_option("--point", g_point, "comma-separated coordinates");
  cxset->add_option("--subset", g_subset, "JSON point list (subset mode)");
  cxset->add_option("--directions", g_directions, "extra directions / sample count");
  cxset->add_option("--out", g_out, "output polytope JSON");
  auto* witness = geo->add_subcommand("witness", "Caratheodory witness simplex");
  std::string w_mu, w_nu, w_point, w_out;
  witness->add_option("--mu", w_mu)->required();
  witness->add_option("--nu", w_nu)->required();
  witness->add_option("--point", w_point)->required();
  witness->add_option("--out", w_out);

  auto* simc = app.add_subcommand("sim", "seeded Monte Carlo comparisons");
  simc->require_subcommand(1);
  auto* cmp = simc->add_subcommand("compare", "E[phi(F)] vs E[phi(G)] across the battery");
  std::string s_scenario, s_out;
  std::size_t s_paths = 100000;
  std::uint64_t s_seed = 0;
  bool s_force = false;
  cmp->add_option("--scenario", s_scenario)->required();
  cmp->add_option("--paths", s_paths);
  cmp->add_option("--seed", s_seed, "stream seed (required: no silent nondeterminism)")
      ->required();
  cmp->add_flag("--force", s_force, "sample even when hypotheses fail");
  cmp->add_option("--out", s_out, "report JSON path");
  auto* dev = simc->add_subcommand("deviation", "Laplace tail bound from G samples");
  std::string d_scenario, d_xgrid, d_lgrid = "0.1,0.25,0.5,0.75,1,1.5,2,2.5,3,4", d_out;
  std::size_t d_paths = 100000;
  std::uint64_t d_seed = 0;
  dev->add_option("--scenario", d_scenario)->required();
  dev->add_option("--x-grid", d_xgrid)->required();
  dev->add_option("--lambda-grid", d_lgrid);
  dev->add_option("--paths", d_paths);
  dev->add_option("--seed", d_seed)->required();
  dev->add_option("--out", d_out);

  auto* ker = app.add_subcommand("kernel", "admissible transport kernels");
  ker->require_subcommand(1);
  auto* kbuild = ker->add_subcommand("build", "construct K with mu K = nu");
  std::string k_mu, k_nu, k_method = "iterative", k_out = "kernel.json", k_validate;
  int k_rounds = 200;
  double k_eps = 1e-6;
  kbuild->add_option("--mu", k_mu)->required();
  kbuild->add_option("--nu", k_nu)->required();
  kbuild->add_option("--method", k_method, "lp | iterative");
  kbuild->add_option("--max-rounds", k_rounds);
  kbuild->add_option("--eps-floor", k_eps);
  kbuild->add_option("--out", k_out);
  kbuild->add_option("--validate", k_validate, "re-validate an emitted kernel file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (check->parsed())
      return cmd_order_check(mu_path, nu_path, relation, certificate_out, exact, validate_path);
    if (cxset->parsed()) {
      if (g_point.empty() && g_subset.empty()) throw BadSpec("cx-set needs --point or --subset");
      return cmd_geometry_cx_set(g_mu, g_nu, g_point, g_subset, g_directions, g_out);
    }
    if (witness->parsed()) return cmd_geometry_witness(w_mu, w_nu, w_point, w_out);
    if (cmp->parsed()) return cmd_sim_compare(s_scenario, s_paths, s_seed, s_force, s_out);
    if (dev->parsed()) return cmd_sim_deviation(d_scenario, d_xgrid, d_lgrid, d_paths, d_seed, d_out);
    if (kbuild->parsed())
      return cmd_kernel_build(k_mu, k_nu, k_method, k_rounds, k_eps, k_out, k_validate);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
