#include "serendip/run_config.hpp"

#include <fstream>
#include <set>

#include "serendip/data_model.hpp"
#include "serendip/digest.hpp"

namespace serendip::runner {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

proxy::SogWeights parse_weights(const json& j) {
    if (!j.is_object())
        throw ConfigError("proxy weights must be an object with the keys "
                          "relevance/diversity/dissimilarity/unpopularity");
    return proxy::SogWeights(get_or(j, "relevance", 1.0),
                             get_or(j, "diversity", 1.0),
                             get_or(j, "dissimilarity", 1.0),
                             get_or(j, "unpopularity", 1.0));
}

prompting::PromptSpec parse_prompt_spec(const json& j, bool& domain_given) {
    prompting::PromptSpec spec;
    spec.shots = get_or(j, "shots", 0);
    spec.history_length = get_or(j, "history_length", 10);
    spec.include_interaction_kind = get_or(j, "include_interaction_kind", false);
    spec.include_rating_values = get_or(j, "include_rating_values", false);
    spec.few_shot_seed = get_or<std::uint64_t>(j, "few_shot_seed", 0);
    spec.short_term_weeks = get_or(j, "short_term_weeks", 2);
    if (j.contains("aux"))
        for (const auto& flag : j.at("aux"))
            spec.aux.insert(
                prompting::aux_field_from_string(flag.get<std::string>()));
    if (j.contains("history_kinds")) {
        std::set<InteractionKind> kinds;
        for (const auto& k : j.at("history_kinds"))
            kinds.insert(interaction_kind_from_string(k.get<std::string>()));
        spec.history_kinds = std::move(kinds);
    }
    domain_given = j.contains("domain_wording");
    if (domain_given)
        spec.domain_wording =
            domain_from_string(j.at("domain_wording").get<std::string>());
    if (spec.shots < 0) throw ConfigError("prompt.shots must be >= 0");
    if (spec.history_length < 1)
        throw ConfigError("prompt.history_length must be >= 1");
    return spec;
}

ModelSpec parse_model_spec(const json& j) {
    ModelSpec spec;
    if (!j.contains("model_id") || !j.contains("endpoint"))
        throw ConfigError("llm model needs 'model_id' and 'endpoint'");
    spec.model_id = j.at("model_id").get<std::string>();
    spec.endpoint = j.at("endpoint").get<std::string>();
    spec.auth_env_var = get_or<std::string>(j, "auth_env_var", "");
    spec.temperature = get_or(j, "temperature", 0.00001);
    spec.max_tokens = get_or(j, "max_tokens", 8);
    spec.timeout_seconds = get_or(j, "timeout_seconds", 60.0);
    if (spec.temperature < 0) throw ConfigError("model.temperature must be >= 0");
    return spec;
}

MethodConfig parse_method(const json& j, std::size_t position) {
    if (!j.contains("type"))
        throw ConfigError("method #" + std::to_string(position) +
                          " is missing 'type'");
    const std::string type = j.at("type").get<std::string>();
    MethodConfig m;

    if (type == "proxy") {
        m.type = MethodConfig::Type::proxy;
        if (!j.contains("metric"))
            throw ConfigError("proxy method needs a 'metric'");
        m.proxy.metric = j.at("metric").get<std::string>();
        if (m.proxy.metric != "sog" && m.proxy.metric != "snpr" &&
            m.proxy.metric != "purs" && m.proxy.metric != "desr")
            throw ConfigError("unknown proxy metric: " + m.proxy.metric);
        if (j.contains("weights")) m.proxy.weights = parse_weights(j.at("weights"));
        m.proxy.batch = get_or(j, "batch", std::vector<std::string>{});
        m.proxy.lambda = get_or(j, "lambda", 0.7);
        if (j.contains("seed")) m.proxy.seed = j.at("seed").get<std::uint64_t>();
        m.proxy.clusters = get_or(j, "clusters", 5);
        m.proxy.unexp_factor = get_or(j, "unexp_factor", 1.0);
        m.proxy.short_window = get_or(j, "short_window", 10);
        m.proxy.history_length = get_or(j, "history_length", 10);
        m.name = get_or<std::string>(j, "name", m.proxy.metric);
    } else if (type == "random") {
        m.type = MethodConfig::Type::random;
        if (j.contains("seed")) m.random_seed = j.at("seed").get<std::uint64_t>();
        m.name = get_or<std::string>(j, "name", "random");
    } else if (type == "llm") {
        m.type = MethodConfig::Type::llm;
        if (!j.contains("model")) throw ConfigError("llm method needs 'model'");
        m.model = parse_model_spec(j.at("model"));
        m.prompt = parse_prompt_spec(j.contains("prompt") ? j.at("prompt") : json::object(),
                                     m.prompt_domain_from_config);
        m.retry_budget = get_or(j, "retry_budget", 2);
        if (m.retry_budget < 0) throw ConfigError("retry_budget must be >= 0");
        m.name = get_or<std::string>(j, "name", m.model.model_id);
    } else if (type == "ensemble") {
        m.type = MethodConfig::Type::ensemble;
        if (!j.contains("members"))
            throw ConfigError("ensemble method needs 'members'");
        m.members.members = j.at("members").get<std::vector<std::string>>();
        if (m.members.members.empty())
            throw ConfigError("ensemble members must be non-empty");
        m.name = get_or<std::string>(j, "name", "ensemble");
    } else {
        throw ConfigError("unknown method type: " + type);
    }
    return m;
}

}  // namespace

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }

    RunConfig config;
    config.raw = j;
    try {
        if (!j.contains("dataset"))
            throw ConfigError("config needs a 'dataset' manifest path");
        const std::filesystem::path dataset = j.at("dataset").get<std::string>();
        config.dataset_manifest =
            dataset.is_absolute() ? dataset : path.parent_path() / dataset;
        config.seed = get_or<std::uint64_t>(j, "seed", 0);
        config.runs_per_llm = get_or(j, "runs_per_llm", 5);
        config.parallelism = get_or(j, "parallelism", 1);
        if (j.contains("output_dir"))
            config.output_dir = j.at("output_dir").get<std::string>();
        if (!j.contains("methods") || !j.at("methods").is_array() ||
            j.at("methods").empty())
            throw ConfigError("config needs a non-empty 'methods' array");
        std::size_t position = 0;
        for (const auto& mj : j.at("methods"))
            config.methods.push_back(parse_method(mj, position++));
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }

    if (config.runs_per_llm < 1) throw ConfigError("runs_per_llm must be >= 1");
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    return config;
}

std::string RunConfig::digest() const { return Sha256::hex(raw.dump()); }

std::vector<std::string> validate(const RunConfig& config) {
    std::vector<std::string> problems;

    Dataset dataset;
    bool have_dataset = false;
    if (!std::filesystem::exists(config.dataset_manifest)) {
        problems.push_back("dataset manifest not found: " +
                           config.dataset_manifest.string());
    } else {
        try {
            dataset = load_dataset(config.dataset_manifest);
            have_dataset = true;
        } catch (const std::exception& e) {
            problems.push_back(std::string("dataset: ") + e.what());
        }
    }

    std::set<std::string> names;
    std::set<std::string> llm_names;
    for (const MethodConfig& m : config.methods) {
        if (!names.insert(m.name).second)
            problems.push_back("duplicate method name: " + m.name);

        if (m.type == MethodConfig::Type::llm) {
            llm_names.insert(m.name);
            if (have_dataset) {
                for (const auto flag : m.prompt.aux) {
                    using prompting::AuxField;
                    const auto field_missing = [&](const EvaluationCase& c) {
                        const UserRecord& u = dataset.user(c.user_id);
                        switch (flag) {
                            case AuxField::curiosity: return !u.curiosity;
                            case AuxField::big_five: return !u.big_five;
                            case AuxField::age: return !u.age;
                            case AuxField::gender: return !u.gender;
                            default: return false;
                        }
                    };
                    for (const EvaluationCase& c : dataset.cases) {
                        if (field_missing(c)) {
                            problems.push_back(
                                "method '" + m.name + "': aux flag '" +
                                prompting::to_string(flag) +
                                "' is not satisfiable (user " + c.user_id +
                                " has no such data)");
                            break;
                        }
                    }
                }
                if (m.prompt.shots > 0 &&
                    static_cast<std::size_t>(m.prompt.shots) >=
                        dataset.cases.size())
                    problems.push_back(
                        "method '" + m.name + "': shots=" +
                        std::to_string(m.prompt.shots) +
                        " leaves no cases to evaluate (dataset has " +
                        std::to_string(dataset.cases.size()) + ")");
            }
        } else if (m.type == MethodConfig::Type::ensemble) {
            for (const std::string& member : m.members.members)
                if (!llm_names.contains(member))
                    problems.push_back("ensemble '" + m.name +
                                       "': member '" + member +
                                       "' does not name an earlier llm method");
        }
    }
    return problems;
}

}  // namespace serendip::runner
