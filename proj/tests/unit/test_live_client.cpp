// OpenAIBackend against a local HTTP server.
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "mathgen/backend.hpp"
#include "mathgen/error.hpp"

using namespace mathgen;
using namespace std::chrono_literals;

namespace {

const char* kOk =
    R"({"choices":[{"message":{"role":"assistant","content":"QUESTION: 1+1?\nANSWER: 2"}}],"usage":{"prompt_tokens":11,"completion_tokens":6}})";

// Serves POST /v1/chat/completions from a handler on an ephemeral port.
class FakeServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

    explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            {
                std::lock_guard lock(mu_);
                bodies_.push_back(req.body);
                auth_ = req.get_header_value("Authorization");
            }
            handler_(req, res, ++calls_);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int calls() const { return calls_; }
    std::string auth() const {
        std::lock_guard lock(mu_);
        return auth_;
    }
    std::string last_body() const {
        std::lock_guard lock(mu_);
        return bodies_.back();
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
    mutable std::mutex mu_;
    std::vector<std::string> bodies_;
    std::string auth_;
};

struct RecordingSleeper {
    std::shared_ptr<std::vector<std::chrono::milliseconds>> waits =
        std::make_shared<std::vector<std::chrono::milliseconds>>();
    OpenAIBackend::Sleeper fn() {
        auto w = waits;
        return [w](std::chrono::milliseconds d) { w->push_back(d); };
    }
};

ChatRequest req() {
    return {"gpt-4o", {{ChatRole::User, "Write a question."}}, 0.9, 17, std::nullopt};
}

LiveBackendConfig config_for(const FakeServer& s) {
    LiveBackendConfig c;
    c.base_url = s.url();
    c.timeout = 5s;
    return c;
}

}  // namespace

TEST_CASE("successful call sends the bearer token and request body") {
    FakeServer server([](auto&, auto& res, int) { res.set_content(kOk, "application/json"); });
    OpenAIBackend backend(config_for(server), std::string("sk-test"));
    const auto r = backend.complete(req());
    CHECK(r.content == "QUESTION: 1+1?\nANSWER: 2");
    CHECK(r.attempts == 1);
    CHECK(r.usage.prompt_tokens == 11);
    CHECK(server.auth() == "Bearer sk-test");
    const auto body = nlohmann::json::parse(server.last_body());
    CHECK(body["seed"] == 17);
    CHECK(body["messages"][0]["content"] == "Write a question.");
}

TEST_CASE("429 twice then 200 is retried with exponential backoff") {
    FakeServer server([](auto&, auto& res, int call) {
        if (call <= 2) {
            res.status = 429;
            res.set_content(R"({"error":"rate limited"})", "application/json");
        } else {
            res.set_content(kOk, "application/json");
        }
    });
    RecordingSleeper sleeper;
    OpenAIBackend backend(config_for(server), std::string("k"), sleeper.fn());
    const auto r = backend.complete(req());
    CHECK(r.content.find("ANSWER: 2") != std::string::npos);
    CHECK(r.attempts == 3);
    CHECK(server.calls() == 3);
    REQUIRE(sleeper.waits->size() == 2);
    CHECK((*sleeper.waits)[0] == 1000ms);
    CHECK((*sleeper.waits)[1] == 2000ms);
    CHECK(r.backoff == *sleeper.waits);
}

TEST_CASE("Retry-After extends the wait") {
    FakeServer server([](auto&, auto& res, int call) {
        if (call == 1) {
            res.status = 503;
            res.set_header("Retry-After", "3");
        } else {
            res.set_content(kOk, "application/json");
        }
    });
    RecordingSleeper sleeper;
    OpenAIBackend backend(config_for(server), std::string("k"), sleeper.fn());
    backend.complete(req());
    REQUIRE(sleeper.waits->size() == 1);
    CHECK((*sleeper.waits)[0] == 3000ms);
}

TEST_CASE("persistent 5xx exhausts retries after 1s, 2s, 4s") {
    FakeServer server([](auto&, auto& res, int) { res.status = 500; });
    RecordingSleeper sleeper;
    OpenAIBackend backend(config_for(server), std::string("k"), sleeper.fn());
    try {
        backend.complete(req());
        FAIL("expected RetriesExhausted");
    } catch (const RetriesExhausted& e) {
        CHECK(e.attempts() == 4);
    }
    CHECK(server.calls() == 4);
    REQUIRE(sleeper.waits->size() == 3);
    CHECK((*sleeper.waits)[0] == 1000ms);
    CHECK((*sleeper.waits)[1] == 2000ms);
    CHECK((*sleeper.waits)[2] == 4000ms);
}

TEST_CASE("other 4xx responses are not retried") {
    FakeServer server([](auto&, auto& res, int) {
        res.status = 400;
        res.set_content(R"({"error":"bad request"})", "application/json");
    });
    RecordingSleeper sleeper;
    OpenAIBackend backend(config_for(server), std::string("k"), sleeper.fn());
    CHECK_THROWS_AS(backend.complete(req()), BackendError);
    CHECK(server.calls() == 1);
    CHECK(sleeper.waits->empty());
}

TEST_CASE("malformed success body is reported") {
    FakeServer server([](auto&, auto& res, int) { res.set_content(R"({"id":"x"})", "application/json"); });
    OpenAIBackend backend(config_for(server), std::string("k"));
    CHECK_THROWS_AS(backend.complete(req()), MalformedResponse);
    CHECK(server.calls() == 1);
}

TEST_CASE("connection failures are retried and then reported") {
    LiveBackendConfig c;
    c.base_url = "http://127.0.0.1:1";
    c.timeout = 1s;
    c.retry.max_retries = 1;
    RecordingSleeper sleeper;
    OpenAIBackend backend(c, std::string("k"), sleeper.fn());
    CHECK_THROWS_AS(backend.complete(req()), RetriesExhausted);
    CHECK(sleeper.waits->size() == 1);
}

TEST_CASE("missing credential fails before any network call") {
    ::unsetenv("MATHGEN_TEST_MISSING_KEY");
    FakeServer server([](auto&, auto& res, int) { res.set_content(kOk, "application/json"); });
    auto c = config_for(server);
    c.api_key_env = "MATHGEN_TEST_MISSING_KEY";
    CHECK_THROWS_AS(OpenAIBackend{c}, ConfigError);
    ::setenv("MATHGEN_TEST_MISSING_KEY", "", 1);
    CHECK_THROWS_AS(OpenAIBackend{c}, ConfigError);
    CHECK(server.calls() == 0);

    ::setenv("MATHGEN_TEST_MISSING_KEY", "from-env", 1);
    OpenAIBackend backend(c);
    backend.complete(req());
    CHECK(server.auth() == "Bearer from-env");
    ::unsetenv("MATHGEN_TEST_MISSING_KEY");
}

TEST_CASE("base url path prefix is kept") {
    httplib::Server srv;
    std::atomic<int> hits{0};
    srv.Post("/proxy/v1/chat/completions", [&](const auto&, auto& res) {
        ++hits;
        res.set_content(kOk, "application/json");
    });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    LiveBackendConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/proxy/";
    OpenAIBackend backend(c, std::string("k"));
    CHECK_NOTHROW(backend.complete(req()));
    CHECK(hits == 1);
    srv.stop();
    t.join();
}
