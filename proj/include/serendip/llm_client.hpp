#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "serendip/errors.hpp"

namespace serendip {

/// One chat-completion endpoint plus the decoding settings used for every
/// request against it. The credential itself is only ever read from the
/// environment at request time; it is never stored, cached, or reported.
struct ModelSpec {
    std::string model_id;
    std::string endpoint;       // http(s)://... or a mock: scheme, see below
    std::string auth_env_var;   // empty = unauthenticated endpoint
    double temperature = 0.00001;
    int max_tokens = 8;
    double timeout_seconds = 60.0;
};

// Mock endpoints (network-free):
//   mock:echo:<reply>     always answers <reply>
//   mock:script:<path>    answers from a JSON array of strings, in call order
//   mock:callback         answers via the responder installed on the client

struct RatingOutcome {
    int rating = 3;
    bool parse_failed = false;
};

struct RateAllResult {
    std::vector<double> mean_ratings;   // aligned with the input prompt order
    std::vector<int> parse_failures;    // per case, across runs
    int total_parse_failures() const;
};

/// Thrown when at least one case failed every run; carries whatever completed.
class RateAllError : public TransportError {
public:
    RateAllError(const std::string& msg, RateAllResult partial)
        : TransportError(msg), partial_(std::move(partial)) {}
    const RateAllResult& partial() const { return partial_; }

private:
    RateAllResult partial_;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ModelSpec& spec, const std::string& prompt) = 0;
};

/// Uniform access to chat-completion backends with a persistent reply cache,
/// transparent retries, and bounded concurrency. Shareable across threads.
class LlmClient {
public:
    struct Options {
        std::filesystem::path cache_file;  // empty = in-memory cache only
        bool offline = false;              // forbid all network activity
        int transport_retries = 3;
        double backoff_initial_ms = 200.0;
        double backoff_multiplier = 2.0;
    };

    LlmClient();
    explicit LlmClient(Options opts);
    ~LlmClient();

    LlmClient(const LlmClient&) = delete;
    LlmClient& operator=(const LlmClient&) = delete;

    /// Cache-first completion. run_index distinguishes repeat-run samples
    /// that would otherwise share a key.
    std::string complete(const ModelSpec& spec, const std::string& prompt,
                         int run_index);

    /// complete + rating parse; re-asks with a single-digit reminder up to
    /// retry_budget times, then falls back to the midpoint rating 3 with
    /// parse_failed set.
    RatingOutcome rate_case(const ModelSpec& spec, const std::string& prompt_text,
                            int run_index, int retry_budget);

    /// Scores every prompt `runs` times and returns per-case mean ratings in
    /// input order, regardless of completion order. Requests are issued by at
    /// most `parallelism` workers.
    RateAllResult rate_all(const ModelSpec& spec,
                           std::span<const std::string> prompts, int runs,
                           int parallelism, int retry_budget = 2);

    /// Responder backing mock:callback endpoints.
    void set_callback_responder(std::function<std::string(std::string_view)> fn);

    /// Count of HTTP requests actually sent (cache hits and mocks excluded).
    long long http_requests() const;

    bool offline() const;

    static std::string cache_key(const ModelSpec& spec, std::string_view prompt,
                                 int run_index);

private:
    std::string complete_uncached(const ModelSpec& spec, const std::string& prompt);
    ChatBackend& backend_for(const ModelSpec& spec);

    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace serendip
