#pragma once

#include "contourseg/click_sim.hpp"
#include "contourseg/geometry.hpp"
#include "contourseg/image_io.hpp"
#include "contourseg/predictor.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace contourseg {

using SessionClock = std::chrono::steady_clock;

struct SessionConfig {
    std::string predictor = "baseline";
    std::chrono::seconds ttl{1800};
    std::size_t max_image_pixels = 4096u * 4096u;
    int max_external_calls = 4;
    int external_queue_limit = 16;
    std::chrono::milliseconds predictor_timeout{30000};
    CropParams crop;
    EncodingParams enc;
    std::function<SessionClock::time_point()> clock;  // defaults to steady_clock::now
};

struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

// Admission control for predictor calls: at most `limit` run at once and at
// most `queue` wait; beyond that acquire() fails immediately.
class CallGate {
public:
    CallGate(int limit, int queue) : limit_(limit), queue_(queue) {}
    bool acquire();
    void release();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int limit_;
    int queue_;
    int active_ = 0;
    int waiting_ = 0;
};

class SessionService {
public:
    explicit SessionService(SessionConfig config);
    ~SessionService();

    /// `predictor` may name "baseline" or "baseline-hull"; anything else
    /// falls back to the configured predictor.
    ServiceResponse create_session(std::span<const std::uint8_t> image_bytes,
                                   const std::optional<std::string>& predictor = std::nullopt);
    ServiceResponse add_click(const std::string& id, double x, double y);
    ServiceResponse undo_click(const std::string& id);
    ServiceResponse get_state(const std::string& id) const;
    ServiceResponse delete_session(const std::string& id);

    std::size_t session_count() const;
    void purge_expired();
    /// Writes <dir>/<id>/image.png and state.json for every live session.
    void snapshot(const std::filesystem::path& dir) const;

    const SessionConfig& config() const { return config_; }

private:
    struct Session;

    std::shared_ptr<Session> find(const std::string& id) const;
    SessionClock::time_point now() const;
    nlohmann::json state_json(const Session& s) const;
    std::optional<ServiceResponse> recompute(Session& s) const;

    SessionConfig config_;
    std::shared_ptr<const Predictor> default_predictor_;
    std::shared_ptr<const Predictor> baseline_;
    std::shared_ptr<const Predictor> baseline_hull_;
    bool external_ = false;
    mutable CallGate gate_;
    mutable std::shared_mutex map_mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

struct ServerOptions {
    std::string cors_origin = "*";
    std::optional<std::filesystem::path> static_dir;
    std::size_t max_body_bytes = 256u << 20;
};

/// HTTP front end for SessionService.
class SessionServer {
public:
    SessionServer(SessionService& service, ServerOptions options);
    ~SessionServer();

    bool listen(const std::string& host, int port);
    /// Returns the bound port or -1.
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    void wait_until_ready() const;

private:
    SessionService& service_;
    ServerOptions options_;
    std::unique_ptr<httplib::Server> server_;
};

/// Random 128-bit id as 32 lowercase hex digits.
std::string new_session_id();

}  // namespace contourseg
