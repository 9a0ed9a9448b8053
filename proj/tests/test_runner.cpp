#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "serendip/proxy_metrics.hpp"
#include "serendip/runner.hpp"
#include "support/test_util.hpp"

using namespace serendip;
using namespace serendip::runner;
using nlohmann::json;

namespace {

const std::string kFixtureManifest =
    (std::filesystem::path(BUNDLED_FIXTURE_DIR) / "manifest.json").string();
const std::string kMiniManifest =
    (std::filesystem::path(TEST_FIXTURES_DIR) / "mini_taobao" / "manifest.json")
        .string();

std::filesystem::path write_config(const std::filesystem::path& dir,
                                   const json& config) {
    const auto path = dir / "config.json";
    std::ofstream out(path, std::ios::binary);
    out << config.dump(2);
    return path;
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    json j;
    in >> j;
    return j;
}

}  // namespace

TEST_CASE("validate") {
    const auto dir = testutil::scratch_dir("runner_validate");

    SUBCASE("well-formed config is ok") {
        const auto path = write_config(
            dir, {{"dataset", kFixtureManifest},
                  {"methods", json::array({{{"type", "proxy"}, {"metric", "snpr"}}})}});
        const auto config = RunConfig::load(path);
        CHECK(validate(config).empty());
    }
    SUBCASE("aux flag the dataset cannot satisfy is named") {
        // mini_taobao's user t009 has no curiosity value.
        const auto path = write_config(
            dir,
            {{"dataset", kMiniManifest},
             {"methods",
              json::array(
                  {{{"type", "llm"},
                    {"name", "m"},
                    {"model", {{"model_id", "x"}, {"endpoint", "mock:echo:3"}}},
                    {"prompt", {{"aux", json::array({"curiosity"})}}}}})}});
        const auto problems = validate(RunConfig::load(path));
        REQUIRE(problems.size() == 1);
        CHECK(problems[0].find("curiosity") != std::string::npos);
        CHECK(problems[0].find("t009") != std::string::npos);
    }
    SUBCASE("missing dataset file is reported with its path") {
        const auto path = write_config(
            dir, {{"dataset", (dir / "nowhere" / "manifest.json").string()},
                  {"methods", json::array({{{"type", "random"}}})}});
        const auto problems = validate(RunConfig::load(path));
        REQUIRE(problems.size() == 1);
        CHECK(problems[0].find("nowhere") != std::string::npos);
    }
    SUBCASE("ensemble members must name earlier llm methods") {
        const auto path = write_config(
            dir, {{"dataset", kFixtureManifest},
                  {"methods",
                   json::array({{{"type", "random"}},
                                {{"type", "ensemble"},
                                 {"name", "ens"},
                                 {"members", json::array({"random"})}}})}});
        const auto problems = validate(RunConfig::load(path));
        REQUIRE(problems.size() == 1);
        CHECK(problems[0].find("does not name an earlier llm method") !=
              std::string::npos);
    }
    SUBCASE("duplicate method names are rejected") {
        const auto path = write_config(
            dir, {{"dataset", kFixtureManifest},
                  {"methods", json::array({{{"type", "random"}, {"name", "x"}},
                                           {{"type", "random"}, {"name", "x"}}})}});
        CHECK_FALSE(validate(RunConfig::load(path)).empty());
    }
    SUBCASE("config parse failures throw ConfigError") {
        CHECK_THROWS_AS(RunConfig::load(dir / "missing.json"), ConfigError);
        const auto empty = write_config(dir, {{"dataset", kFixtureManifest}});
        CHECK_THROWS_AS(RunConfig::load(empty), ConfigError);
    }
}

TEST_CASE("run: random-only config is byte-reproducible outside the meta block") {
    const auto dir = testutil::scratch_dir("runner_random");
    const auto path = write_config(
        dir, {{"dataset", kFixtureManifest},
              {"seed", 11},
              {"methods", json::array({{{"type", "random"}, {"seed", 42}}})}});
    const auto config = RunConfig::load(path);

    RunOptions options;
    options.output_dir = dir / "run1";
    run(config, options);
    options.output_dir = dir / "run2";
    run(config, options);

    json a = load_json(dir / "run1" / "report.json");
    json b = load_json(dir / "run2" / "report.json");
    a.erase("meta");
    b.erase("meta");
    CHECK(a.dump() == b.dump());

    CHECK(std::filesystem::exists(dir / "run1" / "table.txt"));
    CHECK(std::filesystem::exists(dir / "run1" / "scores.csv"));
    CHECK(std::filesystem::exists(dir / "run1" / "config.json"));
    CHECK_FALSE(a.at("config_digest").get<std::string>().empty());
    CHECK_FALSE(a.at("dataset_digest").get<std::string>().empty());
}

TEST_CASE("run: proxy rows match module-level recomputation") {
    const auto dir = testutil::scratch_dir("runner_proxy");
    const auto path = write_config(
        dir,
        {{"dataset", kFixtureManifest},
         {"seed", 5},
         {"methods",
          json::array({{{"type", "proxy"}, {"metric", "sog"}},
                       {{"type", "proxy"}, {"metric", "snpr"}},
                       {{"type", "proxy"}, {"metric", "purs"}, {"seed", 5}},
                       {{"type", "proxy"}, {"metric", "desr"}}})}});
    RunOptions options;
    options.output_dir = dir / "out";
    const auto result = run(RunConfig::load(path), options);
    REQUIRE(result.report.entries.size() == 4);

    // Independent recomputation through the module-level operations.
    const Dataset ds = load_dataset(kFixtureManifest);
    const features::FeatureIndex index(ds);
    std::vector<double> raw_sog, raw_snpr, raw_purs, raw_desr;
    for (const EvaluationCase& c : ds.cases) {
        raw_sog.push_back(proxy::sog_score(c, ds, index, proxy::SogWeights()));
        raw_snpr.push_back(proxy::snpr_score(c, ds, index));
        raw_purs.push_back(proxy::purs_score(c, ds, index, 5));
        raw_desr.push_back(proxy::desr_score(c, ds, index));
    }
    const std::vector<std::vector<double>*> raws = {&raw_sog, &raw_snpr,
                                                    &raw_purs, &raw_desr};
    const std::vector<std::string> names = {"sog", "snpr", "purs", "desr"};
    for (std::size_t m = 0; m < 4; ++m) {
        const auto likert = proxy::normalize_to_likert(*raws[m]);
        const std::vector<double> scores(likert.begin(), likert.end());
        const auto expected = meta::evaluate_method(scores, ds, names[m]);
        const auto& entry = result.report.entries[m];
        CHECK(entry.method_id == names[m]);
        CHECK(entry.pearson_pct ==
              doctest::Approx(expected.pearson_pct).epsilon(1e-9));
        CHECK(entry.mae == doctest::Approx(expected.mae).epsilon(1e-9));
        CHECK(entry.rmse == doctest::Approx(expected.rmse).epsilon(1e-9));
        CHECK(entry.n == ds.cases.size());
    }

    // Significance table covers every unordered pair.
    CHECK(result.report.significance.size() == 6);
}

TEST_CASE("run: ground-truth mock scores a perfect method, fully offline") {
    const auto dir = testutil::scratch_dir("runner_truth");
    const auto path = write_config(
        dir,
        {{"dataset", kFixtureManifest},
         {"runs_per_llm", 5},
         {"methods",
          json::array(
              {{{"type", "llm"},
                {"name", "oracle"},
                {"model", {{"model_id", "truth"}, {"endpoint", "mock:truth"}}},
                {"prompt", {{"shots", 0}, {"history_length", 10}}}}})}});
    RunOptions options;
    options.output_dir = dir / "out";
    options.offline = true;
    const auto result = run(RunConfig::load(path), options);

    REQUIRE(result.report.entries.size() == 1);
    const auto& entry = result.report.entries[0];
    CHECK(entry.pearson_pct == doctest::Approx(100.0));
    CHECK(entry.mae == 0.0);
    CHECK(entry.rmse == 0.0);
    CHECK(entry.parse_failures == 0);
    CHECK(result.llm_http_requests == 0);
    CHECK(result.report_json.at("meta").at("llm_http_requests").get<int>() == 0);
}

TEST_CASE("run: llm methods and ensembles compose") {
    const auto dir = testutil::scratch_dir("runner_ensemble");
    const auto path = write_config(
        dir,
        {{"dataset", kFixtureManifest},
         {"runs_per_llm", 2},
         {"parallelism", 3},
         {"methods",
          json::array(
              {{{"type", "llm"},
                {"name", "low"},
                {"model", {{"model_id", "low"}, {"endpoint", "mock:echo:2"}}}},
               {{"type", "llm"},
                {"name", "high"},
                {"model", {{"model_id", "high"}, {"endpoint", "mock:echo:4"}}}},
               {{"type", "ensemble"},
                {"name", "pair"},
                {"members", json::array({"low", "high"})}}})}});
    RunOptions options;
    options.output_dir = dir / "out";
    const auto result = run(RunConfig::load(path), options);

    REQUIRE(result.report.entries.size() == 3);
    // Echo mocks give constant vectors; the ensemble averages them to 3.0.
    CHECK(result.report.entries[0].degenerate);
    CHECK(result.report.entries[1].degenerate);
    CHECK(result.report.entries[2].degenerate);
    CHECK(result.report.entries[2].ensemble_members ==
          std::vector<std::string>{"low", "high"});

    const Dataset ds = load_dataset(kFixtureManifest);
    double mae_expected = 0;
    for (const EvaluationCase& c : ds.cases)
        mae_expected += std::abs(3.0 - c.ground_truth);
    mae_expected /= static_cast<double>(ds.cases.size());
    CHECK(result.report.entries[2].mae ==
          doctest::Approx(mae_expected).epsilon(1e-12));
}

TEST_CASE("run: few-shot examples are excluded from every method's cases") {
    const auto dir = testutil::scratch_dir("runner_fewshot");
    const auto path = write_config(
        dir,
        {{"dataset", kFixtureManifest},
         {"runs_per_llm", 1},
         {"methods",
          json::array(
              {{{"type", "random"}, {"seed", 3}},
               {{"type", "llm"},
                {"name", "shots"},
                {"model", {{"model_id", "m"}, {"endpoint", "mock:echo:3"}}},
                {"prompt", {{"shots", 5}, {"few_shot_seed", 21}}}}})}});
    RunOptions options;
    options.output_dir = dir / "out";
    const auto result = run(RunConfig::load(path), options);

    const Dataset ds = load_dataset(kFixtureManifest);
    for (const auto& entry : result.report.entries)
        CHECK(entry.n == ds.cases.size() - 5);
    CHECK(result.report_json.at("meta").at("excluded_case_indices").size() == 5);

    // scores.csv has one row per evaluated case plus a header.
    std::ifstream csv(dir / "out" / "scores.csv");
    std::size_t lines = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++lines;
    CHECK(lines == ds.cases.size() - 5 + 1);
}

TEST_CASE("run: a warmed cache reproduces the report byte-for-byte") {
    const auto dir = testutil::scratch_dir("runner_warm_cache");
    const auto path = write_config(
        dir,
        {{"dataset", kFixtureManifest},
         {"runs_per_llm", 3},
         {"methods",
          json::array(
              {{{"type", "llm"},
                {"name", "oracle"},
                {"model", {{"model_id", "truth"}, {"endpoint", "mock:truth"}}},
                {"prompt", {{"shots", 0}}}}})}});
    const auto config = RunConfig::load(path);
    RunOptions options;
    options.output_dir = dir / "out";

    run(config, options);
    json first = load_json(dir / "out" / "report.json");
    const auto cache_size = std::filesystem::file_size(dir / "out" / "llm_cache.jsonl");

    // Second run into the same directory: every completion is a cache hit.
    run(config, options);
    json second = load_json(dir / "out" / "report.json");
    CHECK(std::filesystem::file_size(dir / "out" / "llm_cache.jsonl") ==
          cache_size);

    first.erase("meta");
    second.erase("meta");
    CHECK(first.dump() == second.dump());
}

#ifdef SERENDIP_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const std::string command =
        std::string("\"") + SERENDIP_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli: exit codes") {
    const auto dir = testutil::scratch_dir("cli_exit_codes");

    SUBCASE("validate ok is 0") {
        const auto path = write_config(
            dir, {{"dataset", kFixtureManifest},
                  {"methods", json::array({{{"type", "random"}, {"seed", 1}}})}});
        CHECK(run_cli("validate --config \"" + path.string() + "\"") == 0);
    }
    SUBCASE("config problems exit 2") {
        CHECK(run_cli("validate --config \"" + (dir / "missing.json").string() +
                      "\"") == 2);
        const auto bad = write_config(
            dir, {{"dataset", (dir / "nope.json").string()},
                  {"methods", json::array({{{"type", "random"}}})}});
        CHECK(run_cli("run --config \"" + bad.string() + "\" --out \"" +
                      (dir / "out_bad").string() + "\"") == 2);
    }
    SUBCASE("offline transport failure exits 3 and flushes a partial report") {
        const auto path = write_config(
            dir,
            {{"dataset", kFixtureManifest},
             {"runs_per_llm", 1},
             {"methods",
              json::array(
                  {{{"type", "random"}, {"seed", 9}},
                   {{"type", "llm"},
                    {"name", "remote"},
                    {"model",
                     {{"model_id", "m"},
                      {"endpoint", "http://127.0.0.1:1/v1"}}}}})}});
        const auto out = dir / "out_offline";
        CHECK(run_cli("run --config \"" + path.string() + "\" --offline --out \"" +
                      out.string() + "\"") == 3);
        const json report = load_json(out / "report.json");
        CHECK(report.at("meta").at("status").get<std::string>() ==
              "transport_error");
        // The method that completed before the failure is still reported.
        REQUIRE(report.at("entries").size() == 1);
        CHECK(report.at("entries")[0].at("method_id").get<std::string>() ==
              "random");
    }
    SUBCASE("report verb renders an existing report") {
        const auto path = write_config(
            dir, {{"dataset", kFixtureManifest},
                  {"methods", json::array({{{"type", "random"}, {"seed", 2}}})}});
        const auto out = dir / "out_report";
        REQUIRE(run_cli("run --config \"" + path.string() + "\" --out \"" +
                        out.string() + "\"") == 0);
        CHECK(run_cli("report --report \"" + (out / "report.json").string() +
                      "\"") == 0);
        CHECK(run_cli("report --report \"" + (dir / "no_report.json").string() +
                      "\"") == 1);
    }
}
#endif

TEST_CASE("render_report_table reads a written report back") {
    const auto dir = testutil::scratch_dir("runner_report_verb");
    const auto path = write_config(
        dir, {{"dataset", kFixtureManifest},
              {"methods", json::array({{{"type", "random"}, {"seed", 1}}})}});
    RunOptions options;
    options.output_dir = dir / "out";
    run(RunConfig::load(path), options);

    const std::string table = render_report_table(dir / "out" / "report.json");
    CHECK(table.find("random") != std::string::npos);
    CHECK(table.find("Pearson(%)") != std::string::npos);

    // Matches the table that the run itself wrote.
    std::ifstream in(dir / "out" / "table.txt");
    const std::string written{std::istreambuf_iterator<char>(in),
                              std::istreambuf_iterator<char>()};
    CHECK(table == written);
}
