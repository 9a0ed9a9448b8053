#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "serendip/llm_client.hpp"
#include "support/test_util.hpp"

using namespace serendip;

namespace {

ModelSpec echo_spec(const std::string& reply) {
    ModelSpec spec;
    spec.model_id = "echo";
    spec.endpoint = "mock:echo:" + reply;
    return spec;
}

std::filesystem::path write_script(const std::filesystem::path& dir,
                                   const std::vector<std::string>& replies) {
    const auto path = dir / "script.json";
    std::ofstream out(path, std::ios::binary);
    out << nlohmann::json(replies).dump();
    return path;
}

ModelSpec script_spec(const std::filesystem::path& path) {
    ModelSpec spec;
    spec.model_id = "scripted";
    spec.endpoint = "mock:script:" + path.string();
    return spec;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("echo mock answers every prompt the same way") {
    LlmClient client;
    CHECK(client.complete(echo_spec("4"), "anything", 0) == "4");
    CHECK(client.complete(echo_spec("4"), "something else", 3) == "4");
    CHECK(client.http_requests() == 0);
}

TEST_CASE("scripted mock replays the transcript byte-for-byte") {
    const auto dir = testutil::scratch_dir("llm_script");
    const std::vector<std::string> replies = {"first é", "second", "3"};
    const auto spec = script_spec(write_script(dir, replies));
    LlmClient client;
    for (std::size_t i = 0; i < replies.size(); ++i)
        CHECK(client.complete(spec, "p" + std::to_string(i), 0) == replies[i]);
    CHECK_THROWS_WITH_AS(client.complete(spec, "p-extra", 0),
                         doctest::Contains("exhausted"), TransportError);
}

TEST_CASE("cache serves repeat calls without touching the backend") {
    LlmClient client;
    std::atomic<int> calls{0};
    client.set_callback_responder([&](std::string_view) {
        calls.fetch_add(1);
        return "4";
    });
    ModelSpec spec;
    spec.model_id = "cb";
    spec.endpoint = "mock:callback";

    CHECK(client.complete(spec, "same prompt", 0) == "4");
    CHECK(client.complete(spec, "same prompt", 0) == "4");
    CHECK(calls.load() == 1);
    // A different run index is a different sample.
    CHECK(client.complete(spec, "same prompt", 1) == "4");
    CHECK(calls.load() == 2);
}

TEST_CASE("cache keys separate model, temperature, run, and prompt") {
    ModelSpec a;
    a.model_id = "m1";
    ModelSpec b = a;
    CHECK(LlmClient::cache_key(a, "p", 0) == LlmClient::cache_key(b, "p", 0));
    b.model_id = "m2";
    CHECK(LlmClient::cache_key(a, "p", 0) != LlmClient::cache_key(b, "p", 0));
    b = a;
    b.temperature = 0.5;
    CHECK(LlmClient::cache_key(a, "p", 0) != LlmClient::cache_key(b, "p", 0));
    CHECK(LlmClient::cache_key(a, "p", 0) != LlmClient::cache_key(a, "p", 1));
    CHECK(LlmClient::cache_key(a, "p", 0) != LlmClient::cache_key(a, "q", 0));
}

TEST_CASE("cache persists across client instances") {
    const auto dir = testutil::scratch_dir("llm_cache");
    const auto cache_file = dir / "cache.jsonl";
    ModelSpec spec;
    spec.model_id = "cb";
    spec.endpoint = "mock:callback";

    std::atomic<int> calls{0};
    {
        LlmClient first({.cache_file = cache_file});
        first.set_callback_responder([&](std::string_view) {
            calls.fetch_add(1);
            return "cached reply";
        });
        CHECK(first.complete(spec, "prompt", 0) == "cached reply");
        CHECK(calls.load() == 1);
    }
    {
        LlmClient second({.cache_file = cache_file});
        second.set_callback_responder([&](std::string_view) {
            calls.fetch_add(1);
            return "fresh reply";
        });
        // Identical key: answered from the reloaded cache.
        CHECK(second.complete(spec, "prompt", 0) == "cached reply");
        CHECK(calls.load() == 1);
        // New key: backend again.
        CHECK(second.complete(spec, "prompt two", 0) == "fresh reply");
        CHECK(calls.load() == 2);
    }
}

TEST_CASE("rate_case") {
    const auto dir = testutil::scratch_dir("llm_rate_case");

    SUBCASE("clean reply") {
        LlmClient client;
        const auto out = client.rate_case(echo_spec("3"), "p", 0, 2);
        CHECK(out.rating == 3);
        CHECK_FALSE(out.parse_failed);
    }
    SUBCASE("persistent garbage falls back to the midpoint after 3 attempts") {
        const auto spec = script_spec(
            write_script(dir, {"nope", "still nothing", "useless"}));
        LlmClient client;
        const auto out = client.rate_case(spec, "p", 0, 2);
        CHECK(out.rating == 3);
        CHECK(out.parse_failed);
        // All three scripted replies were consumed: attempts really happened.
        CHECK_THROWS_AS(client.complete(spec, "q", 0), TransportError);
    }
    SUBCASE("garbage then a digit recovers on the retry") {
        const auto spec = script_spec(write_script(dir, {"hmm, unsure", "5"}));
        LlmClient client;
        const auto out = client.rate_case(spec, "p", 0, 1);
        CHECK(out.rating == 5);
        CHECK_FALSE(out.parse_failed);
    }
}

TEST_CASE("rate_all") {
    SUBCASE("constant mock, five runs, means are exact") {
        LlmClient client;
        const std::vector<std::string> prompts = {"a", "b", "c"};
        const auto result = client.rate_all(echo_spec("4"), prompts, 5, 2);
        REQUIRE(result.mean_ratings.size() == 3);
        for (const double m : result.mean_ratings) CHECK(m == 4.0);
        CHECK(result.total_parse_failures() == 0);
        CHECK(client.http_requests() == 0);
    }
    SUBCASE("runs=1 equals single ratings") {
        LlmClient client;
        const std::vector<std::string> prompts = {"a"};
        const auto result = client.rate_all(echo_spec("2"), prompts, 1, 1);
        CHECK(result.mean_ratings == std::vector<double>{2.0});
    }
    SUBCASE("scripted per-run ratings average to 3.6") {
        const auto dir = testutil::scratch_dir("llm_rate_all");
        const auto spec =
            script_spec(write_script(dir, {"3", "3", "4", "4", "4"}));
        LlmClient client;
        const std::vector<std::string> prompts = {"only case"};
        const auto result = client.rate_all(spec, prompts, 5, 1);
        CHECK(result.mean_ratings[0] == doctest::Approx(3.6));
    }
    SUBCASE("output is invariant to parallelism") {
        std::vector<std::string> prompts;
        for (int i = 0; i < 25; ++i) prompts.push_back("p" + std::to_string(i));
        LlmClient a, b;
        const auto r1 = a.rate_all(echo_spec("5"), prompts, 3, 1);
        const auto r4 = b.rate_all(echo_spec("5"), prompts, 3, 4);
        CHECK(r1.mean_ratings == r4.mean_ratings);
        CHECK(r1.parse_failures == r4.parse_failures);
    }
    SUBCASE("a case failing every run aborts with partial progress") {
        const auto dir = testutil::scratch_dir("llm_rate_all_fail");
        const auto spec = script_spec(write_script(dir, {"4"}));
        LlmClient client;
        const std::vector<std::string> prompts = {"first", "second"};
        try {
            client.rate_all(spec, prompts, 1, 1, 0);
            FAIL("expected RateAllError");
        } catch (const RateAllError& e) {
            REQUIRE(e.partial().mean_ratings.size() == 2);
            CHECK(e.partial().mean_ratings[0] == 4.0);
            CHECK(std::isnan(e.partial().mean_ratings[1]));
        }
    }
    SUBCASE("argument validation") {
        LlmClient client;
        const std::vector<std::string> prompts = {"a"};
        CHECK_THROWS_AS(client.rate_all(echo_spec("1"), prompts, 0, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(client.rate_all(echo_spec("1"), prompts, 1, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("http transport against a loopback chat-completions server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    std::string seen_auth;
    std::string seen_model;
    std::string seen_prompt;
    double seen_temperature = -1;
    std::atomic<int> fail_first{0};

    server.Post("/v1/chat/completions", [&](const httplib::Request& req,
                                            httplib::Response& res) {
        hits.fetch_add(1);
        if (fail_first.load() > 0) {
            fail_first.fetch_sub(1);
            res.status = 503;
            return;
        }
        seen_auth = req.get_header_value("Authorization");
        const auto body = nlohmann::json::parse(req.body);
        seen_model = body.at("model").get<std::string>();
        seen_prompt = body.at("messages")[0].at("content").get<std::string>();
        seen_temperature = body.at("temperature").get<double>();
        res.set_content(
            nlohmann::json{
                {"choices",
                 nlohmann::json::array(
                     {{{"message", {{"role", "assistant"}, {"content", "4"}}}}})}}
                .dump(),
            "application/json");
    });
    server.Post("/v1/bad/chat/completions",
                [&](const httplib::Request&, httplib::Response& res) {
                    res.set_content("{\"surprise\": true}", "application/json");
                });

    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto dir = testutil::scratch_dir("llm_http");
    const auto cache_file = dir / "cache.jsonl";
    setenv("SERENDIP_TEST_API_KEY", "sekret-token-123", 1);

    ModelSpec spec;
    spec.model_id = "qwen-test";
    spec.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    spec.auth_env_var = "SERENDIP_TEST_API_KEY";
    spec.timeout_seconds = 5;

    SUBCASE("request shape, bearer auth, caching, credential scrubbing") {
        LlmClient client({.cache_file = cache_file});
        CHECK(client.complete(spec, "rate this", 0) == "4");
        CHECK(hits.load() == 1);
        CHECK(client.http_requests() == 1);
        CHECK(seen_auth == "Bearer sekret-token-123");
        CHECK(seen_model == "qwen-test");
        CHECK(seen_prompt == "rate this");
        CHECK(seen_temperature == doctest::Approx(0.00001));

        CHECK(client.complete(spec, "rate this", 0) == "4");
        CHECK(hits.load() == 1);  // cache hit

        const std::string cache_bytes = slurp(cache_file);
        CHECK(cache_bytes.find("sekret") == std::string::npos);
        CHECK(cache_bytes.find("\"reply\":\"4\"") != std::string::npos);
    }
    SUBCASE("transient 5xx is retried with backoff") {
        fail_first.store(2);
        LlmClient client({.cache_file = {},
                          .offline = false,
                          .transport_retries = 3,
                          .backoff_initial_ms = 5});
        CHECK(client.complete(spec, "after retries", 0) == "4");
        CHECK(client.http_requests() == 3);
    }
    SUBCASE("missing credential env var fails fast") {
        ModelSpec bad = spec;
        bad.auth_env_var = "SERENDIP_DEFINITELY_UNSET_VAR";
        LlmClient client;
        CHECK_THROWS_WITH_AS(client.complete(bad, "p", 0),
                             doctest::Contains("SERENDIP_DEFINITELY_UNSET_VAR"),
                             TransportError);
        CHECK(client.http_requests() == 0);
    }
    SUBCASE("malformed response body is a transport error") {
        ModelSpec bad = spec;
        bad.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/bad";
        LlmClient client;
        CHECK_THROWS_WITH_AS(client.complete(bad, "p", 0),
                             doctest::Contains("malformed response body"),
                             TransportError);
    }
    SUBCASE("offline mode refuses the network but serves the warm cache") {
        {
            LlmClient warm({.cache_file = cache_file});
            CHECK(warm.complete(spec, "offline-able", 0) == "4");
        }
        LlmClient offline_client({.cache_file = cache_file, .offline = true});
        CHECK(offline_client.complete(spec, "offline-able", 0) == "4");
        CHECK(offline_client.http_requests() == 0);
        CHECK_THROWS_WITH_AS(offline_client.complete(spec, "cold prompt", 0),
                             doctest::Contains("offline"), TransportError);
    }

    server.stop();
    server_thread.join();
}
