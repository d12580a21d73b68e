#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "audit/evidence.hpp"
#include "audit/json_io.hpp"
#include "audit/remote.hpp"

using namespace audit;

namespace {

// Loopback endpoint used by every case: scores are x/2, group members of G_1
// are selected. Also exposes misbehaving routes for the error-path tests.
class TestServer {
public:
    TestServer() {
        server_.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            const Json body = Json::parse(req.body);
            Json outputs = Json::array();
            for (const auto& input : body.at("inputs")) {
                if (mode_ == Mode::BadValue) {
                    outputs.push_back(2);
                } else if (input.contains("group")) {
                    outputs.push_back(input.at("group") == "G_1" ? 1 : 0);
                } else {
                    outputs.push_back(input.at("x").get<double>() / 2.0);
                }
            }
            if (mode_ == Mode::ShortBody) outputs.erase(outputs.begin());
            if (mode_ == Mode::Status500) {
                res.status = 500;
                res.set_content("boom", "text/plain");
                return;
            }
            if (mode_ == Mode::Garbage) {
                res.set_content("not json{", "application/json");
                return;
            }
            Json reply;
            reply["outputs"] = std::move(outputs);
            res.set_content(reply.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~TestServer() {
        server_.stop();
        thread_.join();
    }

    enum class Mode { Ok, BadValue, Status500, Garbage, ShortBody };

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
    void set_mode(Mode mode) { mode_ = mode; }
    int hits() const { return hits_; }
    std::string last_body() const { return last_body_; }
    std::string last_auth() const { return last_auth_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    Mode mode_ = Mode::Ok;
    std::string last_body_;
    std::string last_auth_;
};

EndpointDescriptor score_endpoint(const std::string& url) {
    EndpointDescriptor d;
    d.url = url;
    d.schema.features = {FeatureSpec{"x", FeatureKind::Numeric, 0.0, 1.0, {}}};
    d.output_space = OutputSpace::score_grid(0.0, 1.0, 0.0);
    d.deterministic = true;
    return d;
}

EndpointDescriptor binary_endpoint(const std::string& url) {
    EndpointDescriptor d;
    d.url = url;
    d.schema.group_set = {"G_1", "G_2"};
    d.output_space = OutputSpace::binary();
    return d;
}

ModelInput x_input(double x) {
    ModelInput in;
    in.features["x"] = x;
    return in;
}

ModelInput group_input(const std::string& g) {
    ModelInput in;
    in.group = g;
    return in;
}

}  // namespace

TEST_CASE("remote query round-trips one input") {
    TestServer server;
    const auto model = remote_model(binary_endpoint(server.url()));
    CHECK(model->query(group_input("G_1"), 0).number() == 1.0);
    CHECK(model->query(group_input("G_2"), 0).number() == 0.0);
    // Seeds are never transmitted.
    const Json body = Json::parse(server.last_body());
    CHECK(body.size() == 1);
    CHECK(body.contains("inputs"));
    CHECK(server.last_body().find("seed") == std::string::npos);
}

TEST_CASE("batches preserve input order and chunk by max_batch") {
    TestServer server;
    auto descriptor = score_endpoint(server.url());
    descriptor.max_batch = 3;
    const auto model = remote_model(descriptor);

    std::vector<ModelInput> inputs;
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < 7; ++i) {
        inputs.push_back(x_input(i / 10.0));
        seeds.push_back(i);
    }
    const int before = server.hits();
    const auto outputs = model->query_batch(inputs, seeds);
    REQUIRE(outputs.size() == 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(outputs[i].number() == doctest::Approx(i / 20.0));
    }
    CHECK(server.hits() - before == 3);  // ceil(7 / 3)
}

TEST_CASE("non-conformant outputs raise and are recorded as anomalies") {
    TestServer server;
    server.set_mode(TestServer::Mode::BadValue);
    const auto model = remote_model(binary_endpoint(server.url()));
    CHECK_THROWS_AS(model->query(group_input("G_1"), 0), NonConformantOutputError);
    const auto anomalies = model->anomalies();
    REQUIRE(anomalies.size() == 1);
    CHECK(anomalies[0].raw_value == "2");
    CHECK(anomalies[0].reason.find("output space") != std::string::npos);
}

TEST_CASE("protocol violations are distinct from transport failures") {
    TestServer server;
    const auto model = remote_model(binary_endpoint(server.url()));

    server.set_mode(TestServer::Mode::Status500);
    CHECK_THROWS_AS(model->query(group_input("G_1"), 0), ProtocolError);

    server.set_mode(TestServer::Mode::Garbage);
    CHECK_THROWS_AS(model->query(group_input("G_1"), 0), ProtocolError);

    server.set_mode(TestServer::Mode::ShortBody);
    CHECK_THROWS_AS(model->query(group_input("G_1"), 0), ProtocolError);

    // A closed port is a transport failure, and transport errors are not
    // schema errors.
    auto dead = binary_endpoint("http://127.0.0.1:1");
    dead.timeout_ms = 500;
    const auto unreachable = remote_model(dead);
    CHECK_THROWS_AS(unreachable->query(group_input("G_1"), 0), TransportError);
}

TEST_CASE("schema is enforced before anything goes on the wire") {
    TestServer server;
    const auto model = remote_model(binary_endpoint(server.url()));
    const int before = server.hits();
    CHECK_THROWS_AS(model->query(group_input("G_9"), 0), SchemaError);
    CHECK_THROWS_AS(model->query(x_input(0.5), 0), SchemaError);
    CHECK(server.hits() == before);
}

TEST_CASE("bearer token is read from the configured environment variable") {
    TestServer server;
    auto descriptor = binary_endpoint(server.url());
    descriptor.bearer_token_env = "AUDIT_TEST_TOKEN";
    ::setenv("AUDIT_TEST_TOKEN", "sesame", 1);
    const auto model = remote_model(descriptor);
    model->query(group_input("G_1"), 0);
    CHECK(server.last_auth() == "Bearer sesame");
    ::unsetenv("AUDIT_TEST_TOKEN");
}

TEST_CASE("remote stochasticity is flagged as non-replayable in evidence") {
    TestServer server;
    const auto model = remote_model(binary_endpoint(server.url()));
    CHECK(model->stochastic());
    CHECK_FALSE(model->replayable());

    StratifiedStrategy strategy;
    strategy.dist.group = CategoricalDist{{"G_1", "G_2"}, {}};
    strategy.quotas = {{"G_1", 4}, {"G_2", 4}};
    QueryBudget budget(8);
    const auto evidence = collect(*model, strategy, 8, budget, 11, 1);
    REQUIRE(evidence.n() == 8);
    for (const auto& rec : evidence.records) CHECK_FALSE(rec.replayable);

    // A provider-declared deterministic endpoint stays replayable.
    auto deterministic = score_endpoint(server.url());
    const auto det_model = remote_model(deterministic);
    CHECK(det_model->replayable());
}
