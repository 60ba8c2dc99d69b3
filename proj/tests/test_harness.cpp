#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bigtan/errors.hpp"
#include "bigtan/harness.hpp"

using namespace bigtan;

namespace {

// Every cross-reference token the registry has to exercise at least once.
const std::vector<std::string> required_tokens = {
    "I1",   "I4",   "I5",   "I6",   "I7",   "I8",    //
    "xII1", "xII2", "xII3", "xII4", "xII5", "xII6",  //
    "yII1", "yII2", "yII3", "yII4", "yII5", "yII6",  //
    "II1",  "II2",  "II3",  "II4",  "II5",  "II6",  "II7",  "II8",  "II9",
    "II10", "II11", "II12", "II13", "II14", "II15", "II16", "II17", "II18",
    "II19", "II20", "II21", "II22", "II23", "II24", "II25",  //
    "r1",   "t2",   "t3",   "cor-t3",                        //
    "a1",   "a2",   "a3",   "a4",   "a5",   "a7",   "a8",   "a9",   "a10",
    "thm-integrability", "prop-span", "prop-eprime", "thm-nonumbilic"};

std::set<std::string> tokens_of(const std::string& refs) {
    std::set<std::string> out;
    std::istringstream in(refs);
    std::string token;
    while (in >> token) out.insert(token);
    return out;
}

RunConfig small_config(MetricFamily family, int dim, int samples, std::uint64_t seed) {
    RunConfig cfg;
    cfg.family = family;
    cfg.dim = dim;
    cfg.samples = samples;
    cfg.seed = seed;
    return cfg;
}

// Reports with the timing stripped, for determinism comparisons.
std::string stable_summary(const std::vector<CheckReport>& reports) {
    std::ostringstream out;
    for (const auto& r : reports) {
        out << r.name << '|' << r.paper_ref << '|' << r.samples << '|' << r.skipped << '|'
            << r.max_residual << '|' << r.tolerance << '|' << r.passed << '\n';
    }
    return out.str();
}

}  // namespace

TEST_CASE("registry is well formed and covers every reference token") {
    const auto& registry = check_registry();
    REQUIRE(registry.size() == 27);

    std::set<std::string> names;
    std::set<std::string> seen_tokens;
    for (const auto& spec : registry) {
        CHECK(!spec.name.empty());
        CHECK(names.insert(spec.name).second);
        CHECK(!spec.paper_ref.empty());
        CHECK(bool(spec.body));
        CHECK(bool(spec.base_tolerance));
        for (const auto& token : tokens_of(spec.paper_ref)) seen_tokens.insert(token);
        for (const MetricFamily family :
             {MetricFamily::euclidean, MetricFamily::riemannian_conformal,
              MetricFamily::randers}) {
            RunConfig cfg = small_config(family, 2, 1, 1);
            CHECK(spec.base_tolerance(cfg) > 0.0);
        }
    }
    CHECK(names.count("mean_curvature") == 1);

    for (const auto& token : required_tokens) {
        CAPTURE(token);
        CHECK(seen_tokens.count(token) == 1);
    }
}

TEST_CASE("configuration json round trips and rejects malformed input") {
    const std::string text = R"({
        "metric": "randers",
        "dim": 3,
        "eps": 0.2,
        "drift": [0.4, -0.1, 0.0],
        "samples": 12,
        "seed": 99,
        "tolerances": {"mean_curvature": 0.5},
        "only": ["mean_curvature", "euler_finsler"],
        "report": "out.json",
        "format": "json",
        "solver": {"tolerance": 1e-11, "max_iterations": 40,
                   "jet_refinements": 2, "random_restarts": 4}
    })";
    const RunConfig cfg = RunConfig::from_json_text(text);
    CHECK(cfg.family == MetricFamily::randers);
    CHECK(cfg.dim == 3);
    CHECK(cfg.conformal_eps == doctest::Approx(0.2));
    REQUIRE(cfg.drift.size() == 3);
    CHECK(cfg.drift[0] == doctest::Approx(0.4));
    CHECK(cfg.samples == 12);
    CHECK(cfg.seed == 99);
    CHECK(cfg.tolerance_overrides.at("mean_curvature") == doctest::Approx(0.5));
    REQUIRE(cfg.only.has_value());
    CHECK(cfg.only->size() == 2);
    CHECK(cfg.report_path == "out.json");
    CHECK(cfg.format == "json");
    CHECK(cfg.solver.tolerance == doctest::Approx(1e-11));
    CHECK(cfg.solver.max_iterations == 40);
    CHECK(cfg.solver.jet_refinements == 2);
    CHECK(cfg.solver.random_restarts == 4);

    CHECK_THROWS_AS(RunConfig::from_json_text("not json at all"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"metrc": "euclidean"})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"dim": 1})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"dim": 9})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"samples": 0})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"format": "yaml"})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"only": ["no_such_check"]})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"tolerances": {"no_such_check": 1e-5}})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"tolerances": {"mean_curvature": -1.0}})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"metric": "randers", "dim": 2,
                                                  "drift": [0.9, 0.9]})"),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"drift": [0.1]})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"solver": {"bogus": 1}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json_text(R"({"solver": {"max_iterations": 0}})"),
                    ConfigError);

    const std::string path = "harness_config_roundtrip.json";
    {
        std::ofstream out(path);
        out << text;
    }
    const RunConfig from_file = RunConfig::from_json_file(path);
    CHECK(from_file.dim == 3);
    std::remove(path.c_str());
    CHECK_THROWS_AS(RunConfig::from_json_file("no/such/directory/config.json"), ConfigError);
}

TEST_CASE("default drift matches the stock randers fixtures") {
    RunConfig cfg = small_config(MetricFamily::randers, 2, 1, 1);
    Eigen::VectorXd b2 = cfg.effective_drift();
    REQUIRE(b2.size() == 2);
    CHECK(b2[0] == doctest::Approx(0.5));
    CHECK(b2[1] == doctest::Approx(0.0));

    cfg.dim = 4;
    Eigen::VectorXd b4 = cfg.effective_drift();
    REQUIRE(b4.size() == 4);
    CHECK(b4[0] == doctest::Approx(0.5));
    CHECK(b4[1] == doctest::Approx(-0.2));
    CHECK(b4[2] == doctest::Approx(0.0));

    cfg.dim = 2;
    cfg.drift = Eigen::Vector2d(0.1, 0.2);
    CHECK(cfg.effective_drift()[1] == doctest::Approx(0.2));
}

TEST_CASE("sampled points are deterministic, boxed, and off the zero section") {
    const RunConfig cfg = small_config(MetricFamily::euclidean, 3, 1, 42);
    const BigTangentPoint a = sample_point(cfg, 5);
    const BigTangentPoint b = sample_point(cfg, 5);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.p - b.p).cwiseAbs().maxCoeff() == 0.0);

    const BigTangentPoint c = sample_point(cfg, 6);
    CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);

    for (int index = 0; index < 50; ++index) {
        const BigTangentPoint at = sample_point(cfg, index);
        CHECK(at.x.cwiseAbs().maxCoeff() <= 0.5);
        CHECK(at.y.norm() >= 0.6);
        CHECK(at.y.norm() <= 2.0);
        CHECK(at.p.norm() >= 0.6);
        CHECK(at.p.norm() <= 2.0);
    }
}

TEST_CASE("seed streams separate by label and counter") {
    CHECK(stream_seed(1, "a", 0) != stream_seed(1, "a", 1));
    CHECK(stream_seed(1, "a", 0) != stream_seed(1, "b", 0));
    CHECK(stream_seed(1, "a", 0) != stream_seed(2, "a", 0));

    SplitMix64 r1{7};
    SplitMix64 r2{7};
    CHECK(uniform_in(r1, -1.0, 1.0) == uniform_in(r2, -1.0, 1.0));
    CHECK(gaussian(r1) == gaussian(r2));
    for (int i = 0; i < 100; ++i) {
        const double u = uniform_in(r1, 0.25, 0.75);
        CHECK(u >= 0.25);
        CHECK(u <= 0.75);
        CHECK(std::isfinite(gaussian(r1)));
    }
}

TEST_CASE("euclidean suite passes with tiny residuals and reports every check") {
    RunConfig cfg = small_config(MetricFamily::euclidean, 2, 10, 31);
    const std::vector<CheckReport> reports = run_suite(cfg);
    const auto& registry = check_registry();
    REQUIRE(reports.size() == registry.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CAPTURE(reports[i].name);
        CHECK(reports[i].name == registry[i].name);
        CHECK(reports[i].samples == 10);
        CHECK(reports[i].skipped == 0);
        CHECK(reports[i].passed);
        const double budget = reports[i].name == "leaf_curvature_flat" ? 1e-7 : 1e-10;
        CHECK(reports[i].max_residual <= budget);
    }
    CHECK(all_passed(reports));

    const std::vector<CheckReport> again = run_suite(cfg);
    CHECK(stable_summary(reports) == stable_summary(again));
}

TEST_CASE("randers suite passes at dim 2 with the default drift") {
    RunConfig cfg = small_config(MetricFamily::randers, 2, 100, 2024);
    const std::vector<CheckReport> reports = run_suite(cfg);
    REQUIRE(reports.size() == check_registry().size());
    for (const auto& r : reports) {
        CAPTURE(r.name);
        CHECK(r.skipped == 0);
        CHECK(r.passed);
    }
}

TEST_CASE("filtering runs exactly the named checks") {
    RunConfig cfg = small_config(MetricFamily::randers, 2, 10, 3);
    cfg.only = std::vector<std::string>{"mean_curvature"};
    const std::vector<CheckReport> reports = run_suite(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(reports.front().name == "mean_curvature");
    CHECK(reports.front().passed);
    CHECK(reports.front().max_residual < 1e-6);

    cfg.only = std::vector<std::string>{};
    const std::vector<CheckReport> none = run_suite(cfg);
    CHECK(none.empty());
    CHECK(all_passed(none));
    const std::string doc = render_json(cfg, none);
    const auto parsed = nlohmann::json::parse(doc);
    CHECK(parsed.at("reports").is_array());
    CHECK(parsed.at("reports").empty());
}

TEST_CASE("verdict rule rejects NaN, over-tolerance, and heavy skipping") {
    CHECK(check_passes(1e-12, 1e-10, 0, 100));
    CHECK(!check_passes(1e-8, 1e-10, 0, 100));
    CHECK(!check_passes(std::nan(""), 1e-10, 0, 100));
    CHECK(check_passes(0.0, 1e-10, 4, 100));
    CHECK(!check_passes(0.0, 1e-10, 5, 100));
    CHECK(!check_passes(0.0, 1e-10, 1, 10));
    CHECK(check_passes(0.0, 1e-10, 0, 1));
    CHECK(!check_passes(0.0, 1e-10, 1, 1));
}

TEST_CASE("tolerance overrides change the reported budget") {
    RunConfig cfg = small_config(MetricFamily::euclidean, 2, 3, 5);
    cfg.only = std::vector<std::string>{"mean_curvature"};
    cfg.tolerance_overrides["mean_curvature"] = 0.25;
    const std::vector<CheckReport> reports = run_suite(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(reports.front().tolerance == doctest::Approx(0.25));
}

TEST_CASE("a failing check is rendered loudly and fails the run") {
    RunConfig cfg = small_config(MetricFamily::euclidean, 2, 5, 5);
    cfg.tolerance_overrides["euler_finsler"] = 1e-30;
    const std::vector<CheckReport> reports = run_suite(cfg);
    CHECK(!all_passed(reports));
    bool found = false;
    for (const auto& r : reports) {
        if (r.name == "euler_finsler") {
            found = true;
            CHECK(!r.passed);
        } else {
            CHECK(r.passed);
        }
    }
    CHECK(found);
    CHECK(render_text(cfg, reports).find("FAIL") != std::string::npos);
    CHECK(render_json(cfg, reports).find("\"fail\"") != std::string::npos);
}

TEST_CASE("an impossible solver budget skips samples instead of crashing") {
    RunConfig cfg = small_config(MetricFamily::randers, 2, 5, 17);
    cfg.solver.tolerance = 1e-30;  // unreachable in floating point
    cfg.solver.max_iterations = 2;
    cfg.solver.random_restarts = 0;
    cfg.only = std::vector<std::string>{"leaf_connection_metric"};
    const std::vector<CheckReport> reports = run_suite(cfg);
    REQUIRE(reports.size() == 1);
    CHECK(reports.front().skipped == 5);
    CHECK(reports.front().max_residual == 0.0);
    CHECK(!reports.front().passed);
}

TEST_CASE("json report round trips and the verdict re-derives from its fields") {
    RunConfig cfg = small_config(MetricFamily::randers, 2, 20, 77);
    cfg.format = "json";
    const std::vector<CheckReport> reports = run_suite(cfg);
    const std::string doc = render_json(cfg, reports);
    const auto parsed = nlohmann::json::parse(doc);

    const auto& echo = parsed.at("config_echo");
    const RunConfig rebuilt = RunConfig::from_json_text(echo.dump());
    CHECK(rebuilt.family == cfg.family);
    CHECK(rebuilt.dim == cfg.dim);
    CHECK(rebuilt.samples == cfg.samples);
    CHECK(rebuilt.seed == cfg.seed);
    CHECK(rebuilt.format == cfg.format);
    REQUIRE(rebuilt.drift.size() == 2);
    CHECK(rebuilt.drift[0] == doctest::Approx(0.5));

    const auto& rows = parsed.at("reports");
    REQUIRE(rows.size() == reports.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[static_cast<int>(i)];
        CHECK(row.at("name").get<std::string>() == reports[i].name);
        CHECK(row.at("paper_ref").get<std::string>() == reports[i].paper_ref);
        const bool re_derived =
            check_passes(row.at("max_residual").get<double>(),
                         row.at("tolerance").get<double>(), row.at("skipped").get<int>(),
                         row.at("samples").get<int>());
        CHECK(re_derived == (row.at("verdict").get<std::string>() == "pass"));
    }

    // A second run differs only in the timing fields.
    const std::string doc2 = render_json(cfg, run_suite(cfg));
    auto strip = [](std::string text) {
        auto parsed_doc = nlohmann::ordered_json::parse(std::move(text));
        for (auto& row : parsed_doc.at("reports")) row.erase("seconds");
        return parsed_doc.dump();
    };
    CHECK(strip(doc) == strip(doc2));
}

TEST_CASE("report files are written where asked and refused elsewhere") {
    RunConfig cfg = small_config(MetricFamily::euclidean, 2, 2, 9);
    cfg.only = std::vector<std::string>{"euler_finsler"};
    cfg.format = "json";
    cfg.report_path = "harness_report_test.json";
    const std::vector<CheckReport> reports = run_suite(cfg);
    write_report_file(cfg, reports);
    std::ifstream in(cfg.report_path);
    REQUIRE(bool(in));
    nlohmann::json parsed;
    in >> parsed;
    CHECK(parsed.at("reports").size() == 1);
    std::remove(cfg.report_path.c_str());

    cfg.report_path = "no/such/directory/report.json";
    CHECK_THROWS_AS(write_report_file(cfg, reports), ConfigError);

    cfg.report_path.clear();
    write_report_file(cfg, reports);  // no-op without a path
}

TEST_CASE("describe_point is deterministic and carries the solve summary") {
    RunConfig cfg = small_config(MetricFamily::randers, 2, 1, 7);
    const std::string text = describe_point(cfg, 3);
    CHECK(text == describe_point(cfg, 3));
    CHECK(text.find("x = ") != std::string::npos);
    CHECK(text.find("dual solve") != std::string::npos);
    CHECK(text.find("g* eigenvalues") != std::string::npos);
    CHECK(text != describe_point(cfg, 4));
    CHECK_THROWS_AS(describe_point(cfg, -1), ConfigError);
}

TEST_CASE("text rendering carries the header, one row per check, and a summary") {
    RunConfig cfg = small_config(MetricFamily::riemannian_conformal, 2, 3, 13);
    const std::vector<CheckReport> reports = run_suite(cfg);
    const std::string text = render_text(cfg, reports);
    CHECK(text.find("suite: metric=riemannian_conformal") != std::string::npos);
    CHECK(text.find("summary: 27 of 27 checks passed") != std::string::npos);
    std::size_t rows = 0;
    for (const auto& r : reports) {
        if (text.find(r.name) != std::string::npos) ++rows;
    }
    CHECK(rows == reports.size());
}
