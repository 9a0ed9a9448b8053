#include "serendip/llm_client.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "serendip/digest.hpp"
#include "serendip/rating_parse.hpp"

namespace serendip {

namespace {

using nlohmann::json;

class EchoBackend : public ChatBackend {
public:
    explicit EchoBackend(std::string reply) : reply_(std::move(reply)) {}
    std::string complete(const ModelSpec&, const std::string&) override {
        return reply_;
    }

private:
    std::string reply_;
};

// Replays a JSON array of canned replies in call order.
class ScriptBackend : public ChatBackend {
public:
    explicit ScriptBackend(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw Error("scripted mock: cannot open " + path.string());
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw Error("scripted mock " + path.string() + ": " + e.what());
        }
        if (!j.is_array())
            throw Error("scripted mock " + path.string() + ": expected a JSON array");
        for (const auto& entry : j) replies_.push_back(entry.get<std::string>());
    }

    std::string complete(const ModelSpec&, const std::string&) override {
        const std::lock_guard lock(mu_);
        if (next_ >= replies_.size())
            throw TransportError("scripted mock exhausted after " +
                                 std::to_string(replies_.size()) + " replies");
        return replies_[next_++];
    }

private:
    std::mutex mu_;
    std::vector<std::string> replies_;
    std::size_t next_ = 0;
};

class CallbackBackend : public ChatBackend {
public:
    explicit CallbackBackend(const std::function<std::string(std::string_view)>& fn)
        : fn_(fn) {}
    std::string complete(const ModelSpec&, const std::string& prompt) override {
        if (!fn_) throw Error("callback mock used before a responder was installed");
        return fn_(prompt);
    }

private:
    const std::function<std::string(std::string_view)>& fn_;
};

struct EndpointParts {
    std::string base;  // scheme://host[:port]
    std::string path;  // full request path
};

EndpointParts split_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw TransportError("malformed endpoint URL: " + endpoint);
    const auto path_start = endpoint.find('/', scheme_end + 3);
    EndpointParts parts;
    if (path_start == std::string::npos) {
        parts.base = endpoint;
        parts.path = "";
    } else {
        parts.base = endpoint.substr(0, path_start);
        parts.path = endpoint.substr(path_start);
    }
    while (!parts.path.empty() && parts.path.back() == '/') parts.path.pop_back();
    if (parts.path.find("/chat/completions") == std::string::npos)
        parts.path += "/chat/completions";
    return parts;
}

std::string format_temperature(double t) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", t);
    return buf;
}

}  // namespace

int RateAllResult::total_parse_failures() const {
    int total = 0;
    for (const int f : parse_failures) total += f;
    return total;
}

struct LlmClient::Impl {
    Options opts;

    std::mutex cache_mu;
    std::unordered_map<std::string, std::string> cache;
    std::ofstream cache_out;

    std::mutex backends_mu;
    std::map<std::string, std::unique_ptr<ChatBackend>> backends;

    std::function<std::string(std::string_view)> responder;
    std::atomic<long long> http_requests{0};

    void load_cache_file() {
        if (opts.cache_file.empty()) return;
        std::ifstream in(opts.cache_file);
        if (in) {
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.empty()) continue;
                json j = json::parse(line, nullptr, false);
                if (j.is_discarded()) {
                    // A torn final line from an interrupted run is recoverable;
                    // anything else is corruption.
                    if (in.peek() == std::ifstream::traits_type::eof()) break;
                    throw Error("cache file " + opts.cache_file.string() +
                                ": unparseable record at line " +
                                std::to_string(line_no));
                }
                cache[j.at("key").get<std::string>()] =
                    j.at("reply").get<std::string>();
            }
        }
        if (const auto parent = opts.cache_file.parent_path(); !parent.empty())
            std::filesystem::create_directories(parent);
        cache_out.open(opts.cache_file, std::ios::app);
        if (!cache_out)
            throw Error("cannot open cache file for append: " +
                        opts.cache_file.string());
    }

    void persist(const std::string& key, const ModelSpec& spec, int run_index,
                 std::string_view prompt, const std::string& reply) {
        if (!cache_out.is_open()) return;
        const json record = {{"key", key},
                             {"model", spec.model_id},
                             {"run", run_index},
                             {"prompt_sha256", Sha256::hex(prompt)},
                             {"reply", reply}};
        cache_out << record.dump() << '\n';
        cache_out.flush();
    }
};

LlmClient::LlmClient() : LlmClient(Options{}) {}

LlmClient::LlmClient(Options opts) : impl_(std::make_unique<Impl>()) {
    impl_->opts = std::move(opts);
    impl_->load_cache_file();
}

LlmClient::~LlmClient() = default;

std::string LlmClient::cache_key(const ModelSpec& spec, std::string_view prompt,
                                 int run_index) {
    Sha256 h;
    h.update(spec.model_id);
    h.update("\x1f");
    h.update(format_temperature(spec.temperature));
    h.update("\x1f");
    h.update(std::to_string(run_index));
    h.update("\x1f");
    h.update(prompt);
    return h.finish_hex();
}

void LlmClient::set_callback_responder(
    std::function<std::string(std::string_view)> fn) {
    impl_->responder = std::move(fn);
}

long long LlmClient::http_requests() const { return impl_->http_requests.load(); }

bool LlmClient::offline() const { return impl_->opts.offline; }

std::string LlmClient::complete(const ModelSpec& spec, const std::string& prompt,
                                int run_index) {
    const std::string key = cache_key(spec, prompt, run_index);
    {
        const std::lock_guard lock(impl_->cache_mu);
        const auto it = impl_->cache.find(key);
        if (it != impl_->cache.end()) return it->second;
    }

    const std::string reply = complete_uncached(spec, prompt);

    const std::lock_guard lock(impl_->cache_mu);
    const auto [it, inserted] = impl_->cache.emplace(key, reply);
    if (inserted) impl_->persist(key, spec, run_index, prompt, reply);
    return it->second;
}

RatingOutcome LlmClient::rate_case(const ModelSpec& spec,
                                   const std::string& prompt_text, int run_index,
                                   int retry_budget) {
    if (retry_budget < 0)
        throw std::invalid_argument("rate_case: retry_budget must be >= 0");
    std::string prompt = prompt_text;
    for (int attempt = 0; attempt <= retry_budget; ++attempt) {
        // Each re-ask appends another reminder line, as the conversation
        // would grow; this also gives every attempt its own cache key.
        if (attempt > 0) prompt += "\nRespond with a single digit 1-5.";
        const std::string reply = complete(spec, prompt, run_index);
        if (const auto rating = prompting::parse_rating(reply))
            return {*rating, false};
    }
    return {3, true};
}

RateAllResult LlmClient::rate_all(const ModelSpec& spec,
                                  std::span<const std::string> prompts, int runs,
                                  int parallelism, int retry_budget) {
    if (runs < 1) throw std::invalid_argument("rate_all: runs must be >= 1");
    if (parallelism < 1)
        throw std::invalid_argument("rate_all: parallelism must be >= 1");

    const std::size_t n = prompts.size();
    const std::size_t total = n * static_cast<std::size_t>(runs);

    struct Cell {
        double rating = 0;
        bool parse_failed = false;
        bool ok = false;
        std::string error;
    };
    std::vector<Cell> grid(total);
    std::atomic<std::size_t> next{0};

    const auto worker = [&] {
        while (true) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) break;
            const std::size_t case_i = task / static_cast<std::size_t>(runs);
            const int run_i = static_cast<int>(task % static_cast<std::size_t>(runs));
            Cell& cell = grid[task];
            try {
                const RatingOutcome out =
                    rate_case(spec, prompts[case_i], run_i, retry_budget);
                cell.rating = out.rating;
                cell.parse_failed = out.parse_failed;
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    };

    const int workers =
        static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                                               std::max<std::size_t>(total, 1)));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    RateAllResult result;
    result.mean_ratings.assign(n, 0.0);
    result.parse_failures.assign(n, 0);
    std::vector<std::size_t> failed_cases;
    std::string first_error;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0;
        int ok_runs = 0;
        for (int r = 0; r < runs; ++r) {
            const Cell& cell = grid[i * static_cast<std::size_t>(runs) +
                                    static_cast<std::size_t>(r)];
            if (cell.ok) {
                sum += cell.rating;
                ok_runs += 1;
                if (cell.parse_failed) result.parse_failures[i] += 1;
            } else if (first_error.empty()) {
                first_error = cell.error;
            }
        }
        if (ok_runs == 0) {
            failed_cases.push_back(i);
            result.mean_ratings[i] = std::nan("");
        } else {
            result.mean_ratings[i] = sum / ok_runs;
        }
    }

    if (!failed_cases.empty())
        throw RateAllError("rate_all: " + std::to_string(failed_cases.size()) +
                               " case(s) failed every run (first error: " +
                               first_error + ")",
                           std::move(result));
    return result;
}

std::string LlmClient::complete_uncached(const ModelSpec& spec,
                                         const std::string& prompt) {
    return backend_for(spec).complete(spec, prompt);
}

namespace {

// Stateless per-call HTTP transport; a fresh connection per request keeps it
// safe under concurrent workers.
class OpenAiHttpBackend : public ChatBackend {
public:
    OpenAiHttpBackend(const LlmClient::Options& opts,
                      std::atomic<long long>& request_counter)
        : opts_(opts), requests_(request_counter) {}

    std::string complete(const ModelSpec& spec, const std::string& prompt) override {
        if (opts_.offline)
            throw TransportError("offline mode: refusing network call to " +
                                 spec.endpoint +
                                 " (prompt not present in cache)");

        const EndpointParts parts = split_endpoint(spec.endpoint);

        httplib::Headers headers;
        if (!spec.auth_env_var.empty()) {
            const char* cred = std::getenv(spec.auth_env_var.c_str());
            if (cred == nullptr || *cred == '\0')
                throw TransportError("credential environment variable not set: " +
                                     spec.auth_env_var);
            headers.emplace("Authorization", std::string("Bearer ") + cred);
        }

        const json body = {{"model", spec.model_id},
                           {"messages", json::array({{{"role", "user"},
                                                      {"content", prompt}}})},
                           {"temperature", spec.temperature},
                           {"max_tokens", spec.max_tokens}};
        const std::string payload = body.dump();

        double backoff_ms = opts_.backoff_initial_ms;
        std::string last_failure;
        for (int attempt = 0; attempt <= opts_.transport_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(
                    static_cast<long long>(backoff_ms)));
                backoff_ms *= opts_.backoff_multiplier;
            }

            httplib::Client cli(parts.base);
            const auto timeout = std::chrono::milliseconds(
                static_cast<long long>(spec.timeout_seconds * 1000.0));
            cli.set_connection_timeout(timeout);
            cli.set_read_timeout(timeout);
            cli.set_write_timeout(timeout);

            requests_.fetch_add(1);
            const httplib::Result res =
                cli.Post(parts.path, headers, payload, "application/json");

            if (!res) {
                last_failure = "connection error: " + httplib::to_string(res.error());
                continue;  // transient
            }
            if (res->status == 429 || res->status >= 500) {
                last_failure = "HTTP " + std::to_string(res->status);
                continue;  // transient
            }
            if (res->status != 200)
                throw TransportError("HTTP " + std::to_string(res->status) +
                                     " from " + spec.endpoint + ": " +
                                     res->body.substr(0, 200));
            return extract_content(res->body, spec);
        }
        throw TransportError("request to " + spec.endpoint + " failed after " +
                             std::to_string(opts_.transport_retries + 1) +
                             " attempts (" + last_failure + ")");
    }

private:
    static std::string extract_content(const std::string& body,
                                       const ModelSpec& spec) {
        const json j = json::parse(body, nullptr, false);
        if (!j.is_discarded() && j.contains("choices") && j["choices"].is_array() &&
            !j["choices"].empty()) {
            const auto& choice = j["choices"][0];
            if (choice.contains("message") && choice["message"].contains("content"))
                return choice["message"]["content"].get<std::string>();
        }
        throw TransportError("malformed response body from " + spec.endpoint);
    }

    const LlmClient::Options& opts_;
    std::atomic<long long>& requests_;
};

}  // namespace

ChatBackend& LlmClient::backend_for(const ModelSpec& spec) {
    const std::lock_guard lock(impl_->backends_mu);
    const auto it = impl_->backends.find(spec.endpoint);
    if (it != impl_->backends.end()) return *it->second;

    std::unique_ptr<ChatBackend> backend;
    const std::string& ep = spec.endpoint;
    if (ep.rfind("mock:echo:", 0) == 0) {
        backend = std::make_unique<EchoBackend>(ep.substr(10));
    } else if (ep.rfind("mock:script:", 0) == 0) {
        backend = std::make_unique<ScriptBackend>(ep.substr(12));
    } else if (ep == "mock:callback" || ep == "mock:truth") {
        backend = std::make_unique<CallbackBackend>(impl_->responder);
    } else if (ep.rfind("mock:", 0) == 0) {
        throw Error("unknown mock endpoint: " + ep);
    } else {
        backend = std::make_unique<OpenAiHttpBackend>(impl_->opts,
                                                      impl_->http_requests);
    }
    auto [pos, _] = impl_->backends.emplace(spec.endpoint, std::move(backend));
    return *pos->second;
}

}  // namespace serendip
