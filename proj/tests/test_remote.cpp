#include <doctest.h>

// Eigen (via embed.hpp) must precede httplib's system includes
#include "ehk/clock.hpp"
#include "ehk/embed.hpp"
#include "ehk/ermodels.hpp"
#include "ehk/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace ehk;

namespace {

// one local endpoint per test case
struct LocalServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    LocalServer() = default;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }

    ~LocalServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

} // namespace

TEST_CASE("remote embed backend: parses the response and sends the api key") {
    LocalServer ls;
    std::string seen_auth, seen_model;
    ls.server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        const auto body = nlohmann::json::parse(req.body);
        seen_model = body.at("model").get<std::string>();
        res.set_content("{\"data\":[{\"embedding\":[0.6,0.8,0.0,0.0]}]}", "application/json");
    });
    ls.start();

    ::setenv("EHK_EMBED_API_KEY", "sekrit", 1);
    embed::RemoteBackendConfig config;
    config.endpoint = ls.endpoint();
    config.dim = 4;
    config.normalizes = true;
    embed::RemoteBackend backend(config);
    const auto v = backend.embed_text("calm person");
    ::unsetenv("EHK_EMBED_API_KEY");

    REQUIRE(v.size() == 4);
    CHECK(v(0) == 0.6);
    CHECK(v(1) == 0.8);
    CHECK(seen_auth == "Bearer sekrit");
    CHECK(seen_model == "BAAI/bge-large-en-v1.5");
}

TEST_CASE("remote embed backend: retries server errors with backoff, then succeeds") {
    LocalServer ls;
    std::atomic<int> calls{0};
    ls.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        if (calls.fetch_add(1) == 0) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
        } else {
            res.set_content("{\"data\":[{\"embedding\":[1.0,0.0]}]}", "application/json");
        }
    });
    ls.start();

    embed::RemoteBackendConfig config;
    config.endpoint = ls.endpoint();
    config.dim = 2;
    config.normalizes = false;
    config.backoff_initial_s = 0.01;
    embed::RemoteBackend backend(config);
    const auto v = backend.embed_text("x");
    CHECK(v(0) == 1.0);
    CHECK(calls.load() == 2);
}

TEST_CASE("remote embed backend: dimension mismatch is a protocol error, not retried") {
    LocalServer ls;
    std::atomic<int> calls{0};
    ls.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        calls.fetch_add(1);
        res.set_content("{\"data\":[{\"embedding\":[1.0,0.0,0.0]}]}", "application/json");
    });
    ls.start();

    embed::RemoteBackendConfig config;
    config.endpoint = ls.endpoint();
    config.dim = 2;
    embed::RemoteBackend backend(config);
    CHECK_THROWS_AS(backend.embed_text("x"), ProtocolError);
    CHECK(calls.load() == 1);
}

TEST_CASE("remote embed backend: malformed body is a protocol error") {
    LocalServer ls;
    ls.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json at all", "application/json");
    });
    ls.start();

    embed::RemoteBackendConfig config;
    config.endpoint = ls.endpoint();
    config.dim = 2;
    embed::RemoteBackend backend(config);
    CHECK_THROWS_AS(backend.embed_text("x"), ProtocolError);
}

TEST_CASE("remote embed backend: in-flight limit caps concurrency") {
    LocalServer ls;
    std::atomic<int> active{0}, peak{0};
    ls.server.Post("/embed", [&](const httplib::Request&, httplib::Response& res) {
        const int now = active.fetch_add(1) + 1;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(30));
        active.fetch_sub(1);
        res.set_content("{\"data\":[{\"embedding\":[1.0,0.0]}]}", "application/json");
    });
    ls.start();

    embed::RemoteBackendConfig config;
    config.endpoint = ls.endpoint();
    config.dim = 2;
    config.normalizes = false;
    config.max_in_flight = 4;
    embed::RemoteBackend backend(config);
    std::vector<std::thread> workers;
    for (int i = 0; i < 10; ++i) {
        workers.emplace_back([&backend, i] { backend.embed_text("t" + std::to_string(i)); });
    }
    for (auto& w : workers) w.join();
    CHECK(peak.load() <= 4);
    CHECK(peak.load() >= 2); // actually ran concurrently
}

TEST_CASE("remote vlm backend: returns text, measures latency, rejects empty") {
    LocalServer ls;
    ls.server.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        CHECK(body.at("prompt").get<std::string>().find("emotions") != std::string::npos);
        res.set_content("{\"text\":\"The human looks pleased and calm.\"}", "application/json");
    });
    ls.start();

    ermodels::RemoteVlmConfig config;
    config.model = "remote-x";
    config.endpoint = ls.endpoint();
    ermodels::RemoteVlmBackend backend(config);
    ermodels::VlmRequest request;
    request.model_id = "remote-x";
    request.episode_id = "E01";
    request.prompt_id = "er_study1";
    request.prompt_text = "Please describe what emotions the human is expressing.";
    const auto response = backend.run(request);
    CHECK(response.text == "The human looks pleased and calm.");
    CHECK(response.latency_s >= 0.0);
}

TEST_CASE("remote vlm backend: empty model text is a protocol error") {
    LocalServer ls;
    ls.server.Post("/generate", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"text\":\"   \"}", "application/json");
    });
    ls.start();

    ermodels::RemoteVlmConfig config;
    config.model = "remote-x";
    config.endpoint = ls.endpoint();
    ermodels::RemoteVlmBackend backend(config);
    ermodels::VlmRequest request;
    request.prompt_text = "p";
    CHECK_THROWS_AS(backend.run(request), ProtocolError);
}
