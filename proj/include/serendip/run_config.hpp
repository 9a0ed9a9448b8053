#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "serendip/ensemble.hpp"
#include "serendip/llm_client.hpp"
#include "serendip/prompting.hpp"
#include "serendip/proxy_metrics.hpp"

namespace serendip::runner {

struct ProxyParams {
    std::string metric;  // sog | snpr | purs | desr
    proxy::SogWeights weights{};
    std::vector<std::string> batch;  // sog diversity batch, usually empty
    double lambda = 0.7;
    std::optional<std::uint64_t> seed;  // purs; falls back to the global seed
    int clusters = 5;
    double unexp_factor = 1.0;
    int short_window = 10;
    int history_length = 10;
};

struct MethodConfig {
    enum class Type { proxy, random, llm, ensemble };
    Type type = Type::proxy;
    std::string name;

    ProxyParams proxy;                       // type == proxy
    std::optional<std::uint64_t> random_seed;  // type == random
    ModelSpec model;                         // type == llm
    prompting::PromptSpec prompt;            // type == llm
    bool prompt_domain_from_config = false;  // domain_wording given explicitly
    int retry_budget = 2;                    // type == llm
    ensemble::EnsembleSpec members;          // type == ensemble
};

/// One experiment: dataset, methods, and reproducibility knobs. Loaded from a
/// single JSON file so runs are diffable; CLI flags only override scalars.
struct RunConfig {
    std::filesystem::path dataset_manifest;  // resolved against the config dir
    std::uint64_t seed = 0;
    int runs_per_llm = 5;
    int parallelism = 1;
    std::filesystem::path output_dir;
    std::vector<MethodConfig> methods;
    nlohmann::json raw;  // exact parsed config, for the digest and the copy

    static RunConfig load(const std::filesystem::path& path);

    std::string digest() const;
};

/// Static feasibility checks (files, aux data availability, member
/// references). Never touches the network. Empty result means "ok".
std::vector<std::string> validate(const RunConfig& config);

}  // namespace serendip::runner
