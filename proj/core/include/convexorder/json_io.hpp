#pragma once

#include <string>

#include "convexorder/geometry.hpp"
#include "convexorder/measure.hpp"
#include "convexorder/order.hpp"
#include "convexorder/sim.hpp"

namespace convexorder::io {

/// Measure files: {"dimension": d, "atoms": [{"point": [...], "mass": m}]}.
/// Masses and coordinates are decimal numbers; "p/q" rational strings are
/// accepted anywhere a number is (exact-mode input form).
DiscreteMeasure parse_measure(const std::string& json_text);
DiscreteMeasure read_measure_file(const std::string& path);
std::string measure_json(const DiscreteMeasure& m);

/// Certificates.
std::string coupling_json(const order::Coupling& c);
std::string separator_json(const order::ConvexSeparator& s);
order::Coupling parse_coupling(const std::string& json_text);
order::ConvexSeparator parse_separator(const std::string& json_text);

enum class CertificateKind { Coupling, Separator };
CertificateKind detect_certificate(const std::string& json_text);

/// Kernels, with per-row barycenter residuals in the payload.
std::string kernel_json(const order::Kernel& k);
order::Kernel parse_kernel(const std::string& json_text);

/// Geometry payloads.
std::string polytope_json(const geometry::Polytope& p);
std::string witness_json(const geometry::WitnessSimplex& w);

/// Monte Carlo scenario: {"horizon": T, "grid": [...], "relation": "cxp",
/// "F": {...}, "G": {...}}. Each side is either a strategy block
/// {"A": [k][d][n], "J": [k][d][n], "lambda": [k][n]} or a Poisson-measure
/// block {"A": [k][d][n], "marks": {"rates": [...], "values": [k][mark][d]}}.
struct Scenario {
  sim::SimSpec f;
  sim::SimSpec g;
  order::Relation relation = order::Relation::cxp;
};
Scenario parse_scenario(const std::string& json_text);
Scenario read_scenario_file(const std::string& path);

std::string compare_report_json(const sim::CompareReport& report, std::size_t paths,
                                std::uint64_t seed);
std::string deviation_rows_json(const std::vector<sim::DeviationRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace convexorder::io
