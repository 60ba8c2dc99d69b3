#include "bigtan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bigtan/errors.hpp"

namespace bigtan {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError(what); }

bool known_check(const std::string& name) {
    const auto& registry = check_registry();
    return std::any_of(registry.begin(), registry.end(),
                       [&](const CheckSpec& c) { return c.name == name; });
}

std::string format_double(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*e", precision, v);
    return buf;
}

std::string format_vector(const Eigen::VectorXd& v) {
    std::ostringstream out;
    out << "[";
    for (int i = 0; i < v.size(); ++i) {
        if (i > 0) out << ", ";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", v[i]);
        out << buf;
    }
    out << "]";
    return out.str();
}

ordered_json config_to_json(const RunConfig& cfg) {
    ordered_json echo;
    echo["metric"] = family_name(cfg.family);
    echo["dim"] = cfg.dim;
    echo["eps"] = cfg.conformal_eps;
    ordered_json drift = ordered_json::array();
    const Eigen::VectorXd b =
        cfg.family == MetricFamily::randers ? cfg.effective_drift() : cfg.drift;
    for (int i = 0; i < b.size(); ++i) drift.push_back(b[i]);
    echo["drift"] = std::move(drift);
    echo["samples"] = cfg.samples;
    echo["seed"] = cfg.seed;
    ordered_json tols = ordered_json::object();
    for (const auto& [name, value] : cfg.tolerance_overrides) tols[name] = value;
    echo["tolerances"] = std::move(tols);
    if (cfg.only) {
        echo["only"] = *cfg.only;
    } else {
        echo["only"] = nullptr;
    }
    echo["report"] = cfg.report_path;
    echo["format"] = cfg.format;
    echo["solver"] = {{"tolerance", cfg.solver.tolerance},
                      {"max_iterations", cfg.solver.max_iterations},
                      {"jet_refinements", cfg.solver.jet_refinements},
                      {"random_restarts", cfg.solver.random_restarts}};
    return echo;
}

// Field extraction with type errors surfaced as ConfigError.
template <class T>
T field_as(const ordered_json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        config_fail(std::string("config field '") + key + "': " + e.what());
    }
}

RunConfig config_from_json(const ordered_json& j) {
    if (!j.is_object()) config_fail("configuration must be a JSON object");
    static const std::set<std::string> keys = {"metric", "dim",    "eps",  "drift",
                                               "samples", "seed",   "tolerances", "only",
                                               "report",  "format", "solver"};
    for (const auto& [key, value] : j.items()) {
        if (!keys.count(key)) config_fail("unknown configuration key '" + key + "'");
    }

    RunConfig cfg;
    if (j.contains("metric")) {
        const auto name = field_as<std::string>(j, "metric");
        try {
            cfg.family = family_from_name(name);
        } catch (const Error& e) {
            config_fail(e.what());
        }
    }
    if (j.contains("dim")) cfg.dim = field_as<int>(j, "dim");
    if (j.contains("eps")) cfg.conformal_eps = field_as<double>(j, "eps");
    if (j.contains("drift")) {
        const auto entries = field_as<std::vector<double>>(j, "drift");
        cfg.drift.resize(static_cast<Eigen::Index>(entries.size()));
        for (std::size_t i = 0; i < entries.size(); ++i)
            cfg.drift[static_cast<Eigen::Index>(i)] = entries[i];
    }
    if (j.contains("samples")) cfg.samples = field_as<int>(j, "samples");
    if (j.contains("seed")) cfg.seed = field_as<std::uint64_t>(j, "seed");
    if (j.contains("tolerances")) {
        const auto& tols = j.at("tolerances");
        if (!tols.is_object()) config_fail("config field 'tolerances': expected an object");
        for (const auto& [name, value] : tols.items()) {
            if (!value.is_number()) config_fail("tolerance for '" + name + "' must be a number");
            cfg.tolerance_overrides[name] = value.get<double>();
        }
    }
    if (j.contains("only") && !j.at("only").is_null()) {
        cfg.only = field_as<std::vector<std::string>>(j, "only");
    }
    if (j.contains("report")) cfg.report_path = field_as<std::string>(j, "report");
    if (j.contains("format")) cfg.format = field_as<std::string>(j, "format");
    if (j.contains("solver")) {
        const auto& solver = j.at("solver");
        if (!solver.is_object()) config_fail("config field 'solver': expected an object");
        static const std::set<std::string> solver_keys = {"tolerance", "max_iterations",
                                                          "jet_refinements", "random_restarts"};
        for (const auto& [key, value] : solver.items()) {
            if (!solver_keys.count(key)) config_fail("unknown solver key '" + key + "'");
        }
        if (solver.contains("tolerance"))
            cfg.solver.tolerance = field_as<double>(solver, "tolerance");
        if (solver.contains("max_iterations"))
            cfg.solver.max_iterations = field_as<int>(solver, "max_iterations");
        if (solver.contains("jet_refinements"))
            cfg.solver.jet_refinements = field_as<int>(solver, "jet_refinements");
        if (solver.contains("random_restarts"))
            cfg.solver.random_restarts = field_as<int>(solver, "random_restarts");
    }
    cfg.validate();
    return cfg;
}

}  // namespace

Eigen::VectorXd RunConfig::effective_drift() const {
    if (drift.size() != 0) return drift;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    b[0] = 0.5;
    if (dim > 2) b[1] = -0.2;
    return b;
}

FinslerStructure RunConfig::structure() const {
    switch (family) {
        case MetricFamily::euclidean:
            return FinslerStructure::euclidean(dim);
        case MetricFamily::riemannian_conformal:
            return FinslerStructure::conformal(dim, conformal_eps);
        case MetricFamily::randers:
            return FinslerStructure::randers(dim, effective_drift());
    }
    config_fail("unhandled metric family");
}

void RunConfig::validate() const {
    if (dim < 2 || dim > 8) config_fail("dim must be between 2 and 8");
    if (samples < 1 || samples > 1000000) config_fail("samples must be between 1 and 1000000");
    if (!std::isfinite(conformal_eps)) config_fail("eps must be finite");
    if (drift.size() != 0) {
        if (static_cast<int>(drift.size()) != dim)
            config_fail("drift must have one entry per dimension");
        if (!drift.allFinite() || drift.norm() >= 1.0)
            config_fail("drift must be finite with norm below 1");
    }
    if (format != "text" && format != "json") config_fail("format must be 'text' or 'json'");
    if (!(solver.tolerance > 0.0) || !std::isfinite(solver.tolerance))
        config_fail("solver tolerance must be positive");
    if (solver.max_iterations < 1) config_fail("solver max_iterations must be at least 1");
    if (solver.jet_refinements < 1) config_fail("solver jet_refinements must be at least 1");
    if (solver.random_restarts < 0) config_fail("solver random_restarts must be non-negative");
    for (const auto& [name, value] : tolerance_overrides) {
        if (!known_check(name)) config_fail("unknown check name in tolerances: '" + name + "'");
        if (!(value > 0.0) || !std::isfinite(value))
            config_fail("tolerance for '" + name + "' must be positive");
    }
    if (only) {
        for (const auto& name : *only) {
            if (!known_check(name)) config_fail("unknown check name in only: '" + name + "'");
        }
    }
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        config_fail(std::string("configuration is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_fail("cannot open configuration file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

bool check_passes(double max_residual, double tolerance, int skipped, int samples) {
    const bool residual_ok = max_residual <= tolerance;  // false for NaN
    const bool skip_ok = 20 * skipped < samples;
    return residual_ok && skip_ok;
}

const std::vector<CheckSpec>& check_registry() {
    static const std::vector<CheckSpec> all = [] {
        std::vector<CheckSpec> v = algebra_checks();
        std::vector<CheckSpec> leaf = leaf_checks();
        v.insert(v.end(), std::make_move_iterator(leaf.begin()),
                 std::make_move_iterator(leaf.end()));
        return v;
    }();
    return all;
}

double check_tolerance(const CheckSpec& spec, const RunConfig& cfg) {
    auto it = cfg.tolerance_overrides.find(spec.name);
    if (it != cfg.tolerance_overrides.end()) return it->second;
    return spec.base_tolerance(cfg);
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view label, std::uint64_t counter) {
    return mix_seed(mix_seed(seed, fnv1a(label)), counter);
}

double uniform_in(SplitMix64& rng, double lo, double hi) {
    return lo + (hi - lo) * rng.uniform01();
}

double gaussian(SplitMix64& rng) {
    const double u = 1.0 - rng.uniform01();  // (0, 1], keeps the log finite
    const double v = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

Eigen::VectorXd random_fiber_vector(SplitMix64& rng, int n, double lo, double hi) {
    for (int attempt = 0; attempt < 32; ++attempt) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = gaussian(rng);
        const double norm = v.norm();
        if (norm < 1e-6) continue;
        return (uniform_in(rng, lo, hi) / norm) * v;
    }
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[0] = 0.5 * (lo + hi);
    return v;
}

VerticalVector random_vertical(SplitMix64& rng, int n) {
    VerticalVector v;
    v.comp1.resize(n);
    v.comp2.resize(n);
    for (int i = 0; i < n; ++i) v.comp1[i] = gaussian(rng);
    for (int i = 0; i < n; ++i) v.comp2[i] = gaussian(rng);
    return v;
}

BigTangentPoint sample_point(const RunConfig& cfg, int index) {
    SplitMix64 rng{stream_seed(cfg.seed, "sample-point", static_cast<std::uint64_t>(index))};
    BigTangentPoint at;
    at.x.resize(cfg.dim);
    for (int i = 0; i < cfg.dim; ++i) at.x[i] = uniform_in(rng, -0.5, 0.5);
    at.y = random_fiber_vector(rng, cfg.dim);
    at.p = random_fiber_vector(rng, cfg.dim);
    return at;
}

namespace {

struct SampleSlot {
    double residual = 0.0;
    bool skipped = false;
    double seconds = 0.0;
};

// True for the failure classes the run policy tolerates: the sample is
// counted as skipped instead of aborting the suite.
bool run_one_body(const CheckSpec& spec, SampleWorkspace& ws, SampleSlot& slot) {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    try {
        slot.residual = spec.body(ws);
    } catch (const SolverError&) {
        ok = false;
    } catch (const SingularityError&) {
        ok = false;
    } catch (const DegenerateMetricError&) {
        ok = false;
    } catch (const ZeroSectionError&) {
        ok = false;
    }
    slot.skipped = !ok;
    slot.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return ok;
}

}  // namespace

std::vector<CheckReport> run_suite(const RunConfig& cfg) {
    cfg.validate();
    const auto& registry = check_registry();

    std::vector<int> enabled;
    for (int i = 0; i < static_cast<int>(registry.size()); ++i) {
        if (!cfg.only || std::find(cfg.only->begin(), cfg.only->end(), registry[i].name) !=
                             cfg.only->end()) {
            enabled.push_back(i);
        }
    }

    const FinslerStructure s = cfg.structure();
    std::vector<std::vector<SampleSlot>> slots(
        enabled.size(), std::vector<SampleSlot>(static_cast<std::size_t>(cfg.samples)));

    const auto run_sample = [&](int index) {
        const BigTangentPoint at = sample_point(cfg, index);
        const auto mark_all_skipped = [&] {
            for (std::size_t k = 0; k < enabled.size(); ++k)
                slots[k][static_cast<std::size_t>(index)].skipped = true;
        };
        try {
            Leaf leaf(s, at.x, cfg.solver);
            LeafConnection connection(std::move(leaf));
            const LeafFrame frame = connection.leaf().frame(at);
            for (std::size_t k = 0; k < enabled.size(); ++k) {
                const CheckSpec& spec = registry[static_cast<std::size_t>(enabled[k])];
                SampleWorkspace ws{cfg,
                                   s,
                                   connection.leaf(),
                                   connection,
                                   frame,
                                   SplitMix64{stream_seed(cfg.seed, spec.name,
                                                          static_cast<std::uint64_t>(index))}};
                run_one_body(spec, ws, slots[k][static_cast<std::size_t>(index)]);
            }
        } catch (const SolverError&) {
            mark_all_skipped();
        } catch (const SingularityError&) {
            mark_all_skipped();
        } catch (const DegenerateMetricError&) {
            mark_all_skipped();
        } catch (const ZeroSectionError&) {
            mark_all_skipped();
        }
    };

    const unsigned hardware = std::max(1u, std::thread::hardware_concurrency());
    const unsigned workers =
        std::min<unsigned>(hardware, static_cast<unsigned>(std::max(1, cfg.samples)));
    if (workers <= 1 || enabled.empty()) {
        for (int i = 0; i < cfg.samples; ++i) run_sample(i);
    } else {
        std::vector<std::exception_ptr> failures(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (int i = static_cast<int>(t); i < cfg.samples;
                         i += static_cast<int>(workers)) {
                        run_sample(i);
                    }
                } catch (...) {
                    failures[t] = std::current_exception();
                }
            });
        }
        for (auto& thread : pool) thread.join();
        for (const auto& failure : failures) {
            if (failure) std::rethrow_exception(failure);
        }
    }

    std::vector<CheckReport> reports;
    reports.reserve(enabled.size());
    for (std::size_t k = 0; k < enabled.size(); ++k) {
        const CheckSpec& spec = registry[static_cast<std::size_t>(enabled[k])];
        CheckReport report;
        report.name = spec.name;
        report.paper_ref = spec.paper_ref;
        report.samples = cfg.samples;
        report.tolerance = check_tolerance(spec, cfg);
        for (const SampleSlot& slot : slots[k]) {
            report.seconds += slot.seconds;
            if (slot.skipped) {
                ++report.skipped;
            } else if (std::isnan(slot.residual) || slot.residual > report.max_residual) {
                if (!std::isnan(report.max_residual)) report.max_residual = slot.residual;
            }
        }
        report.passed =
            check_passes(report.max_residual, report.tolerance, report.skipped, report.samples);
        reports.push_back(std::move(report));
    }
    return reports;
}

bool all_passed(const std::vector<CheckReport>& reports) {
    return std::all_of(reports.begin(), reports.end(),
                       [](const CheckReport& r) { return r.passed; });
}

std::string render_text(const RunConfig& cfg, const std::vector<CheckReport>& reports) {
    std::size_t name_width = 5;
    std::size_t ref_width = 3;
    for (const auto& r : reports) {
        name_width = std::max(name_width, r.name.size());
        ref_width = std::max(ref_width, r.paper_ref.size());
    }

    std::ostringstream out;
    out << "suite: metric=" << family_name(cfg.family) << " dim=" << cfg.dim
        << " samples=" << cfg.samples << " seed=" << cfg.seed;
    if (cfg.family == MetricFamily::randers)
        out << " drift=" << format_vector(cfg.effective_drift());
    if (cfg.family == MetricFamily::riemannian_conformal) out << " eps=" << cfg.conformal_eps;
    out << "\n";

    const auto pad = [](const std::string& s, std::size_t width) {
        return s + std::string(width > s.size() ? width - s.size() : 0, ' ');
    };
    out << pad("check", name_width) << "  " << pad("ref", ref_width)
        << "  samples  skipped  max residual  tolerance  verdict  seconds\n";
    for (const auto& r : reports) {
        char tail[128];
        std::snprintf(tail, sizeof tail, "  %7d  %7d  %12s  %9s  %-7s  %7.3f", r.samples,
                      r.skipped, format_double(r.max_residual, 3).c_str(),
                      format_double(r.tolerance, 1).c_str(), r.passed ? "pass" : "FAIL",
                      r.seconds);
        out << pad(r.name, name_width) << "  " << pad(r.paper_ref, ref_width) << tail << "\n";
    }

    int passed = 0;
    for (const auto& r : reports) passed += r.passed ? 1 : 0;
    out << "summary: " << passed << " of " << reports.size() << " checks passed\n";
    return out.str();
}

std::string render_json(const RunConfig& cfg, const std::vector<CheckReport>& reports) {
    ordered_json doc;
    doc["config_echo"] = config_to_json(cfg);
    ordered_json list = ordered_json::array();
    for (const auto& r : reports) {
        ordered_json item;
        item["name"] = r.name;
        item["paper_ref"] = r.paper_ref;
        item["samples"] = r.samples;
        item["skipped"] = r.skipped;
        item["max_residual"] = r.max_residual;
        item["tolerance"] = r.tolerance;
        item["verdict"] = r.passed ? "pass" : "fail";
        item["seconds"] = r.seconds;
        list.push_back(std::move(item));
    }
    doc["reports"] = std::move(list);
    return doc.dump(2) + "\n";
}

std::string render_report(const RunConfig& cfg, const std::vector<CheckReport>& reports) {
    return cfg.format == "json" ? render_json(cfg, reports) : render_text(cfg, reports);
}

void write_report_file(const RunConfig& cfg, const std::vector<CheckReport>& reports) {
    if (cfg.report_path.empty()) return;
    std::ofstream out(cfg.report_path);
    if (!out) config_fail("cannot write report file: " + cfg.report_path);
    out << render_report(cfg, reports);
    out.flush();
    if (!out) config_fail("cannot write report file: " + cfg.report_path);
}

std::string describe_point(const RunConfig& cfg, int index) {
    if (index < 0) config_fail("point index must be non-negative");
    const BigTangentPoint at = sample_point(cfg, index);
    const FinslerStructure s = cfg.structure();
    const Leaf leaf(s, at.x, cfg.solver);
    const LeafFrame frame = leaf.frame(at);
    const VerticalMetricData md = frame.metric_data();
    const LegendreSolution solve =
        leaf.dual().invert(std::span<const double>(at.x.data(), at.x.size()),
                           std::span<const double>(at.p.data(), at.p.size()));

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(md.g);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> egs(md.g_star);

    std::ostringstream out;
    out << "sample " << index << " of metric " << family_name(cfg.family) << ", dim " << cfg.dim
        << ", seed " << cfg.seed << "\n";
    out << "  x = " << format_vector(at.x) << "\n";
    out << "  y = " << format_vector(at.y) << "\n";
    out << "  p = " << format_vector(at.p) << "\n";
    char line[160];
    std::snprintf(line, sizeof line, "  F^2 = %.12g   K^2 = %.12g   |e| = %.12g\n", md.F2, md.K2,
                  md.norm_E);
    out << line;
    std::snprintf(line, sizeof line,
                  "  dual solve: %d residual evaluations, %d restarts, residual %s\n",
                  solve.iterations, solve.restarts_used,
                  format_double(solve.residual, 3).c_str());
    out << line;
    std::snprintf(line, sizeof line, "  jet defect: %s\n",
                  format_double(frame.dual_jet_residual(), 3).c_str());
    out << line;
    std::snprintf(line, sizeof line, "  g  eigenvalues in [%.6g, %.6g]\n",
                  eg.eigenvalues().minCoeff(), eg.eigenvalues().maxCoeff());
    out << line;
    std::snprintf(line, sizeof line, "  g* eigenvalues in [%.6g, %.6g]\n",
                  egs.eigenvalues().minCoeff(), egs.eigenvalues().maxCoeff());
    out << line;
    out << "  y(p) = " << format_vector(solve.y_of_p) << "\n";
    return out.str();
}

}  // namespace bigtan
