#include "contourseg/errors.hpp"
#include "contourseg/session.hpp"

#include "loopback.hpp"

#include <doctest.h>
#include <httplib.h>

#include <algorithm>
#include <numeric>
#include <filesystem>
#include <set>
#include <thread>
#include <unistd.h>

using namespace contourseg;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

Bytes test_png(Dims d) {
    RgbImage img{d, std::vector<std::uint8_t>(d.area() * 3)};
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        img.rgb[i] = static_cast<std::uint8_t>(i * 31);
    }
    return encode_rgb_png(img);
}

struct FakeClock {
    std::shared_ptr<SessionClock::time_point> now = std::make_shared<SessionClock::time_point>();
    std::function<SessionClock::time_point()> fn() const {
        auto n = now;
        return [n] { return *n; };
    }
};

std::string create(SessionService& svc, Dims d = {64, 64}) {
    const ServiceResponse r = svc.create_session(test_png(d));
    REQUIRE(r.status == 200);
    return r.body["id"].get<std::string>();
}

}  // namespace

TEST_CASE("session creation") {
    SessionService svc(SessionConfig{});
    const ServiceResponse ok = svc.create_session(test_png({64, 64}));
    CHECK(ok.status == 200);
    const std::string id = ok.body["id"];
    CHECK(id.size() == 32);
    CHECK(std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); }));
    CHECK(create(svc) != id);

    const Bytes png = test_png({64, 64});
    const Bytes truncated(png.begin(), png.begin() + 40);
    CHECK(svc.create_session(truncated).status == 400);

    const Bytes huge = read_file(fs::path(CONTOURSEG_TEST_DATA) / "huge_8192.png");
    CHECK(svc.create_session(huge).status == 413);

    const ServiceResponse fresh = svc.get_state(id);
    CHECK(fresh.status == 200);
    CHECK(fresh.body["clicks"] == 0);
    CHECK(fresh.body["mask"].is_null());
    CHECK(fresh.body["crop"].is_null());
}

TEST_CASE("clicking, undo and state") {
    SessionService svc(SessionConfig{});
    const std::string id = create(svc, {120, 100});

    ServiceResponse r = svc.add_click(id, 30, 50);
    CHECK(r.status == 200);
    CHECK(r.body["clicks"] == 1);
    CHECK(r.body["mask"].is_null());

    CHECK(svc.add_click(id, 120, 50).status == 422);
    CHECK(svc.add_click(id, -1, 50).status == 422);
    CHECK(svc.get_state(id).body["clicks"] == 1);

    const ServiceResponse two = svc.add_click(id, 80, 50);
    REQUIRE(two.status == 200);
    CHECK(two.body["clicks"] == 2);
    REQUIRE(two.body["mask"].is_string());
    const auto& crop = two.body["crop"];
    CHECK(crop["w"].get<int>() > 0);

    // The service adds nothing on top of the offline pipeline.
    const RgbImage img = decode_image(test_png({120, 100}));
    ClickSet clicks;
    clicks.append({30, 50}, ClickSource::Human);
    clicks.append({80, 50}, ClickSource::Human);
    const Prediction offline = full_pipeline(img, clicks, BaselinePredictor(), CropParams{}, EncodingParams{});
    const PixelMask served = decode_mask_png(base64_decode(two.body["mask"].get<std::string>()));
    CHECK(served == offline.mask_full);
    CHECK(crop["x0"] == offline.crop.x0);
    CHECK(crop["h"] == offline.crop.side_h);

    const ServiceResponse state = svc.get_state(id);
    CHECK(state.body == two.body);
    CHECK(svc.get_state(id).body.dump() == state.body.dump());

    CHECK(svc.add_click(id, 55, 20).status == 200);
    const ServiceResponse undone = svc.undo_click(id);
    CHECK(undone.status == 200);
    CHECK(undone.body.dump() == two.body.dump());

    svc.undo_click(id);
    const ServiceResponse zero = svc.undo_click(id);
    CHECK(zero.body["clicks"] == 0);
    CHECK(zero.body["mask"].is_null());
    CHECK(svc.undo_click(id).status == 409);
}

TEST_CASE("unknown, deleted and expired sessions") {
    FakeClock clock;
    SessionConfig cfg;
    cfg.ttl = 60s;
    cfg.clock = clock.fn();
    SessionService svc(cfg);

    CHECK(svc.get_state("00000000000000000000000000000000").status == 404);
    CHECK(svc.add_click("nope", 1, 1).status == 404);
    CHECK(svc.undo_click("nope").status == 404);

    const std::string id = create(svc);
    CHECK(svc.delete_session(id).status == 204);
    CHECK(svc.get_state(id).status == 404);
    CHECK(svc.delete_session(id).status == 404);

    const std::string live = create(svc);
    *clock.now += 59s;
    CHECK(svc.get_state(live).status == 200);
    *clock.now += 59s;
    CHECK(svc.get_state(live).status == 200);
    *clock.now += 61s;
    CHECK(svc.get_state(live).status == 404);
    svc.purge_expired();
    CHECK(svc.session_count() == 0);
}

TEST_CASE("concurrent clicks on one session are serialized") {
    SessionService svc(SessionConfig{});
    const std::string id = create(svc, {200, 200});
    constexpr int kThreads = 8, kPerThread = 5;
    std::vector<int> seen;
    std::mutex mu;
    {
        std::vector<std::jthread> threads;
        for (int t = 0; t < kThreads; ++t) {
            threads.emplace_back([&, t] {
                for (int k = 0; k < kPerThread; ++k) {
                    const ServiceResponse r = svc.add_click(id, 20 + t * 20, 20 + k * 30);
                    std::lock_guard lock(mu);
                    seen.push_back(r.body["clicks"].get<int>());
                }
            });
        }
    }
    std::sort(seen.begin(), seen.end());
    std::vector<int> expect(kThreads * kPerThread);
    std::iota(expect.begin(), expect.end(), 1);
    CHECK(seen == expect);
}

TEST_CASE("external predictor calls are bounded") {
    std::atomic<loopback::Mode> mode{loopback::Mode::Slow};
    loopback::Server server(mode);
    SessionConfig cfg;
    cfg.predictor = "external:" + server.endpoint();
    cfg.max_external_calls = 1;
    cfg.external_queue_limit = 0;
    cfg.predictor_timeout = 5000ms;
    SessionService svc(cfg);
    const std::string a = create(svc), b = create(svc);
    svc.add_click(a, 10, 10);
    svc.add_click(b, 10, 10);

    int status_a = 0, status_b = 0;
    {
        std::jthread ta([&] { status_a = svc.add_click(a, 50, 50).status; });
        std::this_thread::sleep_for(150ms);
        status_b = svc.add_click(b, 50, 50).status;
    }
    CHECK(status_a == 200);
    CHECK(status_b == 503);
    // The rejected click left no trace.
    CHECK(svc.get_state(b).body["clicks"] == 1);

    mode = loopback::Mode::ServerError;
    CHECK(svc.add_click(b, 50, 50).status == 502);
    CHECK(svc.get_state(b).body["clicks"] == 1);
}

TEST_CASE("snapshot writes every session") {
    SessionService svc(SessionConfig{});
    const std::string id = create(svc);
    svc.add_click(id, 5, 5);
    svc.add_click(id, 40, 30);
    const fs::path dir = fs::temp_directory_path() / ("contourseg_snap_" + std::to_string(::getpid()));
    svc.snapshot(dir);
    CHECK(fs::exists(dir / id / "image.png"));
    const auto state = nlohmann::json::parse(std::string(
        [&] { const Bytes b = read_file(dir / id / "state.json"); return std::string(b.begin(), b.end()); }()));
    CHECK(state["clicks"] == 2);
    fs::remove_all(dir);
}

TEST_CASE("HTTP routes") {
    SessionService svc(SessionConfig{});
    ServerOptions opts;
    opts.cors_origin = "http://ui.example";
    SessionServer server(svc, opts);
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    const Bytes png = test_png({64, 48});
    const std::string raw(png.begin(), png.end());

    auto res = cli.Post("/sessions", raw, "image/png");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "http://ui.example");
    const std::string id = nlohmann::json::parse(res->body)["id"];

    httplib::MultipartFormDataItems items{{"image", raw, "x.png", "image/png"}};
    res = cli.Post("/sessions", items);
    REQUIRE(res);
    CHECK(res->status == 200);

    const nlohmann::json b64{{"image", base64_encode(png)}};
    res = cli.Post("/sessions", b64.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 200);
    res = cli.Post("/sessions", R"({"image": "%%%"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    res = cli.Post("/sessions", "garbage", "application/octet-stream");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Post("/sessions/" + id + "/clicks", R"({"x": 10, "y": 10})", "application/json");
    REQUIRE(res);
    CHECK(nlohmann::json::parse(res->body)["clicks"] == 1);
    res = cli.Post("/sessions/" + id + "/clicks", R"({"x": 40.5, "y": 30})", "application/json");
    REQUIRE(res);
    const auto two = nlohmann::json::parse(res->body);
    CHECK(two["mask"].is_string());
    res = cli.Post("/sessions/" + id + "/clicks", R"({"x": 1000, "y": 30})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    res = cli.Post("/sessions/" + id + "/clicks", R"({"x": "a"})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = cli.Get("/sessions/" + id);
    REQUIRE(res);
    CHECK(nlohmann::json::parse(res->body) == two);

    res = cli.Post("/sessions/" + id + "/undo", "", "application/json");
    REQUIRE(res);
    CHECK(nlohmann::json::parse(res->body)["clicks"] == 1);

    res = cli.Options("/sessions");
    REQUIRE(res);
    CHECK(res->status == 204);
    CHECK(res->get_header_value("Access-Control-Allow-Methods").find("DELETE") != std::string::npos);

    res = cli.Delete("/sessions/" + id);
    REQUIRE(res);
    CHECK(res->status == 204);
    res = cli.Get("/sessions/" + id);
    REQUIRE(res);
    CHECK(res->status == 404);

    server.stop();
    th.join();
}
