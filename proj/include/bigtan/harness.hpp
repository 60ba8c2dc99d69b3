#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bigtan/leafgeom.hpp"
#include "bigtan/seeding.hpp"

namespace bigtan {

// One verification run: the structure under test, the sampling plan, and the
// reporting knobs. Defaults reproduce the stock desk-scale run on the
// Euclidean family.
struct RunConfig {
    MetricFamily family = MetricFamily::euclidean;
    int dim = 2;
    double conformal_eps = 0.1;
    Eigen::VectorXd drift;  // randers only; empty selects the built-in default
    int samples = 100;
    std::uint64_t seed = 2024;
    std::map<std::string, double> tolerance_overrides;  // per-check replacements
    std::optional<std::vector<std::string>> only;  // no value: all checks; empty list: none
    std::string report_path;                       // empty: stdout only
    std::string format = "text";                   // "text" or "json"
    NewtonSettings solver;

    // The drift vector actually used: the stored one when non-empty, else
    // 0.5 on the first axis and -0.2 on the second when dim > 2.
    Eigen::VectorXd effective_drift() const;
    FinslerStructure structure() const;

    // Throws ConfigError on out-of-range fields, a bad drift, an unknown
    // format, or check names that are not in the registry.
    void validate() const;

    // Parse the JSON configuration shape that render_json echoes back.
    // Unknown keys are rejected so typos fail loudly. Throws ConfigError.
    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
};

// Verdict of one registered check over the whole sample set.
struct CheckReport {
    std::string name;
    std::string paper_ref;  // stable cross-reference tokens carried into reports
    int samples = 0;        // attempted
    int skipped = 0;        // abandoned by a solver or conditioning failure
    double max_residual = 0.0;  // worst residual over the non-skipped samples
    double tolerance = 0.0;
    bool passed = false;
    double seconds = 0.0;  // accumulated body time across samples
};

// The pass rule shared by the suite and by report consumers: the worst
// residual stays within tolerance and fewer than five percent of the
// samples were skipped. NaN residuals never pass.
bool check_passes(double max_residual, double tolerance, int skipped, int samples);

// Everything one check body may touch for one sample. The frame is the
// order-4 expansion at the sampled point and is shared by all checks of
// that sample; the rng is a private stream keyed by (seed, check, sample),
// so bodies may draw from it freely without coupling to each other.
struct SampleWorkspace {
    const RunConfig& config;
    const FinslerStructure& structure;
    const Leaf& leaf;
    const LeafConnection& connection;
    const LeafFrame& frame;
    SplitMix64 rng;
};

// One registered identity check: a name, its cross-reference tokens, the
// family-aware base tolerance, and a body returning the sample's residual.
// Bodies may throw the solver and conditioning errors; the runner counts
// those samples as skipped.
struct CheckSpec {
    std::string name;
    std::string paper_ref;
    std::function<double(const RunConfig&)> base_tolerance;
    std::function<double(SampleWorkspace&)> body;
};

// The registered checks in report order: pointwise vertical algebra first,
// then the per-leaf connection geometry. The two halves live in their own
// translation units.
const std::vector<CheckSpec>& check_registry();
std::vector<CheckSpec> algebra_checks();
std::vector<CheckSpec> leaf_checks();

// Base tolerance with any per-run override applied.
double check_tolerance(const CheckSpec& spec, const RunConfig& cfg);

// Deterministic sampling helpers. Every stream is derived from a (seed,
// label, counter) triple, so draws depend only on the configuration and
// never on evaluation order or thread count.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view label, std::uint64_t counter);
double uniform_in(SplitMix64& rng, double lo, double hi);
double gaussian(SplitMix64& rng);

// A fiber vector with a gaussian direction and a radius uniform in
// [lo, hi]; stays clear of the zero section.
Eigen::VectorXd random_fiber_vector(SplitMix64& rng, int n, double lo = 0.6, double hi = 2.0);
VerticalVector random_vertical(SplitMix64& rng, int n);

// The index-th sampled point of the run: base coordinates uniform in
// [-1/2, 1/2]^n, fiber vectors from random_fiber_vector.
BigTangentPoint sample_point(const RunConfig& cfg, int index);

// Run every enabled check over the sampled points and assemble one report
// per check, in registry order. Samples run in parallel; the residual slots
// are keyed by (check, sample), so the outcome is independent of scheduling.
std::vector<CheckReport> run_suite(const RunConfig& cfg);

bool all_passed(const std::vector<CheckReport>& reports);

// Aligned table with a configuration header and a one-line summary.
std::string render_text(const RunConfig& cfg, const std::vector<CheckReport>& reports);

// Two-key object {config_echo, reports}; the echo parses back through
// RunConfig::from_json_text. Identical runs produce byte-identical output
// except for the seconds fields.
std::string render_json(const RunConfig& cfg, const std::vector<CheckReport>& reports);

// Whichever of the two cfg.format selects.
std::string render_report(const RunConfig& cfg, const std::vector<CheckReport>& reports);

// Write the rendered report to cfg.report_path (no-op when empty). Throws
// ConfigError when the file cannot be written.
void write_report_file(const RunConfig& cfg, const std::vector<CheckReport>& reports);

// Human-readable account of one sampled point: coordinates, norms, and the
// dual solve statistics at that point.
std::string describe_point(const RunConfig& cfg, int index);

}  // namespace bigtan
