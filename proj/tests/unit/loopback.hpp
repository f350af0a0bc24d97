#pragma once

// In-process predictor server for protocol tests. Echo mode answers with the
// request's heatmap channel as the probability map.

#include "contourseg/predictor.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <string>
#include <thread>

namespace loopback {

enum class Mode { Echo, WrongSize, Oversized, Malformed, BadBase64, Slow, ServerError };

class Server {
public:
    explicit Server(std::atomic<Mode>& mode) : mode_(mode) {
        server_.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests;
            const Mode m = mode_.load();
            if (m == Mode::Malformed) {
                res.set_content("{\"probs\": 12", "application/json");
                return;
            }
            if (m == Mode::BadBase64) {
                res.set_content(R"({"probs": "***"})", "application/json");
                return;
            }
            if (m == Mode::ServerError) {
                res.status = 500;
                res.set_content("boom", "text/plain");
                return;
            }
            if (m == Mode::Slow) {
                std::this_thread::sleep_for(std::chrono::milliseconds(600));
            }
            const contourseg::ModelInput in = contourseg::decode_predict_request(nlohmann::json::parse(req.body));
            contourseg::ProbGrid out = in.heatmap;
            if (m == Mode::WrongSize || m == Mode::Oversized) {
                out = contourseg::ProbGrid(m == Mode::WrongSize ? in.size / 2 : in.size * 2);
            }
            res.set_content(contourseg::encode_predict_response(out).dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~Server() {
        server_.stop();
        thread_.join();
    }

    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> requests{0};

private:
    std::atomic<Mode>& mode_;
    httplib::Server server_;
    int port_ = -1;
    std::thread thread_;
};

}  // namespace loopback
