#include "serendip/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>

#include "serendip/digest.hpp"
#include "serendip/features.hpp"
#include "serendip/prompt_templates.hpp"

namespace serendip::runner {

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "0.1.0";

std::string iso_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string dataset_digest(const std::filesystem::path& manifest) {
    const DatasetSchema schema = load_schema(manifest);
    const auto base = manifest.parent_path();
    std::string combined = Sha256::file_hex(manifest);
    for (const auto& table :
         {schema.users, schema.items, schema.interactions, schema.cases})
        combined += Sha256::file_hex(base / table.file);
    return Sha256::hex(combined);
}

std::string format_csv_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// Per-method outcome kept around for the CSV and the significance table.
struct MethodScores {
    std::string name;
    std::vector<double> final_scores;       // what evaluate_method sees
    std::optional<std::vector<double>> raw; // pre-normalization proxy outputs
    int parse_failures = 0;
    std::vector<std::string> members;
};

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void write_scores_csv(const std::filesystem::path& path,
                      std::span<const EvaluationCase> cases,
                      std::span<const MethodScores> methods) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "case_index,user_id,item_id,ground_truth";
    for (const MethodScores& m : methods) {
        out << ',' << m.name;
        if (m.raw) out << ',' << m.name << "_raw";
    }
    out << '\n';
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const EvaluationCase& c = cases[i];
        out << c.case_index << ',' << c.user_id << ',' << c.target_item_id << ','
            << c.ground_truth;
        for (const MethodScores& m : methods) {
            out << ',' << format_csv_value(m.final_scores[i]);
            if (m.raw) out << ',' << format_csv_value((*m.raw)[i]);
        }
        out << '\n';
    }
}

std::vector<double> to_doubles(const std::vector<int>& v) {
    return {v.begin(), v.end()};
}

}  // namespace

RunResult run(const RunConfig& config, const RunOptions& options) {
    // Resolve the run directory up front so partial results have a home.
    std::filesystem::path run_dir =
        options.output_dir ? *options.output_dir : config.output_dir;
    if (run_dir.empty())
        throw ConfigError("no output directory (set 'output_dir' or pass --out)");
    std::filesystem::create_directories(run_dir);

    const int parallelism =
        options.parallelism ? *options.parallelism : config.parallelism;
    if (parallelism < 1) throw ConfigError("parallelism must be >= 1");

    const Dataset dataset = load_dataset(config.dataset_manifest);
    const features::FeatureIndex index(dataset);

    // Few-shot example cases are carved out of the evaluation set once, for
    // every method, so all score vectors stay aligned.
    std::map<std::string, std::vector<EvaluationCase>> shot_pools;
    std::set<int> excluded;
    for (const MethodConfig& m : config.methods) {
        if (m.type != MethodConfig::Type::llm || m.prompt.shots <= 0) continue;
        auto selected = prompting::select_few_shot_examples(
            dataset.cases, m.prompt.shots, m.prompt.few_shot_seed);
        for (const EvaluationCase& c : selected) excluded.insert(c.case_index);
        shot_pools.emplace(m.name, std::move(selected));
    }
    std::vector<EvaluationCase> eval_cases;
    for (const EvaluationCase& c : dataset.cases)
        if (!excluded.contains(c.case_index)) eval_cases.push_back(c);
    if (eval_cases.empty())
        throw ConfigError("few-shot examples consumed every evaluation case");

    LlmClient client({.cache_file = run_dir / "llm_cache.jsonl",
                      .offline = options.offline});

    // mock:truth endpoints answer with the case's ground truth, looked up by
    // the exact prompt text. Prompts register here as they are built.
    std::map<std::string, std::string, std::less<>> truth_replies;
    client.set_callback_responder([&truth_replies](std::string_view prompt) {
        const auto it = truth_replies.find(prompt);
        if (it == truth_replies.end())
            throw Error("mock:truth has no reply for this prompt (is it a "
                        "summarization prompt?)");
        return it->second;
    });

    std::vector<MethodScores> all_scores;
    meta::MetaEvalReport report;
    report.config_digest = config.digest();
    report.dataset_digest = dataset_digest(config.dataset_manifest);

    json meta_block = {{"created_at", iso_utc_now()},
                       {"tool_version", kToolVersion},
                       {"template_version", std::string(prompting::kTemplateVersion)},
                       {"offline", options.offline},
                       {"cases_evaluated", eval_cases.size()},
                       {"excluded_case_indices", json::array()},
                       {"status", "ok"}};
    for (const int idx : excluded) meta_block["excluded_case_indices"].push_back(idx);

    const auto flush_artifacts = [&](const std::string& status,
                                     const std::string& error) {
        meta_block["status"] = status;
        if (!error.empty()) meta_block["error"] = error;
        meta_block["llm_http_requests"] = client.http_requests();

        json report_json = report.to_json();
        report_json["meta"] = meta_block;
        write_text_file(run_dir / "report.json", report_json.dump(2) + "\n");
        write_text_file(run_dir / "table.txt",
                        meta::MetaEvalReport::render_table(report_json));
        write_scores_csv(run_dir / "scores.csv", eval_cases, all_scores);
        write_text_file(run_dir / "config.json", config.raw.dump(2) + "\n");
        return report_json;
    };

    try {
        for (const MethodConfig& m : config.methods) {
            MethodScores scores;
            scores.name = m.name;

            switch (m.type) {
                case MethodConfig::Type::proxy: {
                    std::vector<double> raw;
                    raw.reserve(eval_cases.size());
                    const ProxyParams& p = m.proxy;
                    const std::uint64_t seed = p.seed.value_or(config.seed);
                    for (const EvaluationCase& c : eval_cases) {
                        double value = 0;
                        if (p.metric == "sog")
                            value = proxy::sog_score(c, dataset, index, p.weights,
                                                     p.batch, p.history_length);
                        else if (p.metric == "snpr")
                            value = proxy::snpr_score(c, dataset, index, p.lambda,
                                                      p.history_length);
                        else if (p.metric == "purs")
                            value = proxy::purs_score(c, dataset, index, seed,
                                                      p.clusters, p.unexp_factor,
                                                      p.history_length);
                        else
                            value = proxy::desr_score(c, dataset, index,
                                                      p.short_window);
                        raw.push_back(value);
                    }
                    const std::vector<int> likert = proxy::normalize_to_likert(raw);
                    scores.raw = std::move(raw);
                    scores.final_scores = to_doubles(likert);
                    break;
                }
                case MethodConfig::Type::random: {
                    const auto ratings = meta::random_baseline(
                        eval_cases.size(), m.random_seed.value_or(config.seed));
                    scores.final_scores = to_doubles(ratings);
                    break;
                }
                case MethodConfig::Type::llm: {
                    prompting::PromptSpec spec = m.prompt;
                    if (!m.prompt_domain_from_config)
                        spec.domain_wording = dataset.domain;

                    // Long-term profiles are summarized once per (user, cutoff).
                    std::map<std::pair<std::string, std::int64_t>, std::string>
                        long_profiles;
                    if (spec.aux.contains(
                            prompting::AuxField::long_term_profile)) {
                        for (const EvaluationCase& c : eval_cases) {
                            const auto key =
                                std::make_pair(c.user_id, c.cutoff_timestamp);
                            if (long_profiles.contains(key)) continue;
                            long_profiles[key] =
                                features::build_long_term_profile(
                                    dataset, dataset.user(c.user_id),
                                    c.cutoff_timestamp, client, m.model)
                                    .text;
                        }
                    }

                    const auto pool_it = shot_pools.find(m.name);
                    const std::span<const EvaluationCase> pool =
                        pool_it == shot_pools.end()
                            ? std::span<const EvaluationCase>{}
                            : std::span<const EvaluationCase>(pool_it->second);

                    std::vector<std::string> prompts;
                    prompts.reserve(eval_cases.size());
                    for (const EvaluationCase& c : eval_cases) {
                        prompting::AuxProfiles profiles;
                        if (const auto it = long_profiles.find(
                                {c.user_id, c.cutoff_timestamp});
                            it != long_profiles.end())
                            profiles.long_term = it->second;
                        auto rendered = prompting::build_prompt(
                            c, dataset, index, spec, pool, &profiles);
                        if (m.model.endpoint == "mock:truth")
                            truth_replies[rendered.text] =
                                std::to_string(c.ground_truth);
                        prompts.push_back(std::move(rendered.text));
                    }

                    const RateAllResult rated =
                        client.rate_all(m.model, prompts, config.runs_per_llm,
                                        parallelism, m.retry_budget);
                    scores.final_scores = rated.mean_ratings;
                    scores.parse_failures = rated.total_parse_failures();
                    break;
                }
                case MethodConfig::Type::ensemble: {
                    std::vector<std::vector<double>> member_vectors;
                    for (const std::string& member : m.members.members) {
                        const auto it = std::find_if(
                            all_scores.begin(), all_scores.end(),
                            [&](const MethodScores& s) { return s.name == member; });
                        if (it == all_scores.end())
                            throw ConfigError("ensemble '" + m.name +
                                              "': member '" + member +
                                              "' has no scores yet");
                        member_vectors.push_back(it->final_scores);
                        scores.parse_failures += it->parse_failures;
                    }
                    scores.final_scores =
                        ensemble::ensemble_scores(member_vectors, m.members);
                    scores.members = m.members.members;
                    break;
                }
            }

            meta::MethodReport entry = meta::evaluate_method(
                scores.final_scores, eval_cases, m.name, scores.parse_failures);
            entry.ensemble_members = scores.members;
            report.entries.push_back(std::move(entry));
            all_scores.push_back(std::move(scores));
        }
    } catch (const TransportError& e) {
        flush_artifacts("transport_error", e.what());
        throw;
    }

    // Pairwise significance over per-case absolute errors.
    std::vector<std::vector<double>> abs_errors;
    for (const MethodScores& m : all_scores) {
        std::vector<double> errors;
        errors.reserve(eval_cases.size());
        for (std::size_t i = 0; i < eval_cases.size(); ++i)
            errors.push_back(
                std::abs(m.final_scores[i] - eval_cases[i].ground_truth));
        abs_errors.push_back(std::move(errors));
    }
    for (std::size_t a = 0; a < all_scores.size(); ++a) {
        for (std::size_t b = a + 1; b < all_scores.size(); ++b) {
            if (eval_cases.size() < 2) continue;
            const meta::TTestResult t =
                meta::significance_test(abs_errors[a], abs_errors[b]);
            report.significance.push_back({all_scores[a].name,
                                           all_scores[b].name, t.t_statistic,
                                           t.p_value, t.degenerate});
        }
    }

    RunResult result;
    result.report_json = flush_artifacts("ok", "");
    result.report = std::move(report);
    result.run_dir = run_dir;
    result.llm_http_requests = client.http_requests();
    return result;
}

std::string render_report_table(const std::filesystem::path& report_json_path) {
    std::ifstream in(report_json_path);
    if (!in) throw Error("cannot open report: " + report_json_path.string());
    json report;
    try {
        in >> report;
    } catch (const json::exception& e) {
        throw Error("report " + report_json_path.string() + ": " + e.what());
    }
    return meta::MetaEvalReport::render_table(report);
}

}  // namespace serendip::runner
