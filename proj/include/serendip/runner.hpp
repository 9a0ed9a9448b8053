#pragma once

#include <filesystem>
#include <optional>

#include "serendip/meta_eval.hpp"
#include "serendip/run_config.hpp"

namespace serendip::runner {

struct RunOptions {
    bool offline = false;
    std::optional<int> parallelism;
    std::optional<std::filesystem::path> output_dir;
};

struct RunResult {
    meta::MetaEvalReport report;
    nlohmann::json report_json;  // report plus the run metadata block
    std::filesystem::path run_dir;
    long long llm_http_requests = 0;
};

/// Executes every configured method over the dataset and writes the run
/// artifacts (config copy, report.json, table.txt, scores.csv, llm cache)
/// into the output directory. On transport failure the partial report is
/// still flushed before the error propagates.
RunResult run(const RunConfig& config, const RunOptions& options = {});

/// Re-renders the human-readable table from an existing report.json.
std::string render_report_table(const std::filesystem::path& report_json_path);

}  // namespace serendip::runner
