#include "contourseg/session.hpp"

#include "contourseg/errors.hpp"

#include <httplib.h>
#include <openssl/rand.h>
#include <spdlog/spdlog.h>

#include <cmath>

namespace contourseg {

namespace {

ServiceResponse error_response(int status, std::string_view code, const std::string& message) {
    return {status, {{"error", std::string(code)}, {"message", message}}};
}

ServiceResponse not_found(const std::string& id) {
    return error_response(404, "NotFound", "no session " + id);
}

int status_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::PredictorTimeout:
        return 504;
    case ErrorCode::ProtocolError:
    case ErrorCode::ShapeMismatch:
        return 502;
    case ErrorCode::ImageTooLarge:
        return 413;
    case ErrorCode::ImageDecode:
    case ErrorCode::InvalidArgument:
        return 400;
    default:
        return 500;
    }
}

}  // namespace

struct SessionService::Session {
    std::string id;
    RgbImage image;
    Bytes image_png;  // kept for snapshots
    std::shared_ptr<const Predictor> predictor;
    bool external = false;
    ClickSet clicks;
    std::optional<Prediction> last_prediction;
    std::string mask_b64;
    SessionClock::time_point created_at;
    SessionClock::time_point last_active;
    bool deleted = false;
    mutable std::mutex mu;
};

bool CallGate::acquire() {
    std::unique_lock lock(mu_);
    if (active_ < limit_) {
        ++active_;
        return true;
    }
    if (waiting_ >= queue_) {
        return false;
    }
    ++waiting_;
    cv_.wait(lock, [&] { return active_ < limit_; });
    --waiting_;
    ++active_;
    return true;
}

void CallGate::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_one();
}

std::string new_session_id() {
    unsigned char raw[16];
    if (RAND_bytes(raw, sizeof raw) != 1) {
        throw Error(ErrorCode::Io, "RAND_bytes failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (unsigned char b : raw) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

SessionService::SessionService(SessionConfig config)
    : config_(std::move(config)),
      baseline_(std::make_shared<BaselinePredictor>(BaselineMode::PairDisk)),
      baseline_hull_(std::make_shared<BaselinePredictor>(BaselineMode::Hull)),
      gate_(config_.max_external_calls, config_.external_queue_limit) {
    if (config_.max_external_calls < 1 || config_.external_queue_limit < 0 || config_.ttl.count() <= 0) {
        throw Error(ErrorCode::InvalidArgument, "session limits must be positive");
    }
    config_.crop.validate();
    config_.enc.validate();
    if (config_.predictor == "baseline") {
        default_predictor_ = baseline_;
    } else if (config_.predictor == "baseline-hull") {
        default_predictor_ = baseline_hull_;
    } else {
        default_predictor_ = make_predictor(config_.predictor, config_.predictor_timeout);
        external_ = true;
    }
}

SessionService::~SessionService() = default;

SessionClock::time_point SessionService::now() const {
    return config_.clock ? config_.clock() : SessionClock::now();
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) const {
    std::shared_lock lock(map_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        return nullptr;
    }
    return it->second;
}

nlohmann::json SessionService::state_json(const Session& s) const {
    nlohmann::json points = nlohmann::json::array();
    for (const Click& c : s.clicks) {
        points.push_back({{"x", c.point.x}, {"y", c.point.y}, {"order", c.order}});
    }
    nlohmann::json body{{"clicks", s.clicks.size()}, {"points", std::move(points)}};
    if (s.last_prediction) {
        const CropRect& c = s.last_prediction->crop;
        body["mask"] = s.mask_b64;
        body["crop"] = {{"x0", c.x0}, {"y0", c.y0}, {"w", c.side_w}, {"h", c.side_h}};
    } else {
        body["mask"] = nullptr;
        body["crop"] = nullptr;
    }
    return body;
}

// Re-runs the pipeline for the current clicks. On failure the session keeps
// its previous prediction and the error response is returned.
std::optional<ServiceResponse> SessionService::recompute(Session& s) const {
    if (s.clicks.size() < 2) {
        s.last_prediction.reset();
        s.mask_b64.clear();
        return std::nullopt;
    }
    if (s.external && !gate_.acquire()) {
        return error_response(503, "Busy", "predictor queue is full");
    }
    try {
        Prediction p = full_pipeline(s.image, s.clicks, *s.predictor, config_.crop, config_.enc);
        if (s.external) {
            gate_.release();
        }
        s.mask_b64 = base64_encode(encode_mask_png(p.mask_full));
        s.last_prediction = std::move(p);
        return std::nullopt;
    } catch (const Error& e) {
        if (s.external) {
            gate_.release();
        }
        return error_response(status_for(e.code()), to_string(e.code()), e.what());
    }
}

ServiceResponse SessionService::create_session(std::span<const std::uint8_t> image_bytes,
                                               const std::optional<std::string>& predictor) {
    purge_expired();
    auto s = std::make_shared<Session>();
    try {
        s->image = decode_image(image_bytes, config_.max_image_pixels);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ImageTooLarge) {
            return error_response(413, to_string(e.code()), e.what());
        }
        return error_response(400, to_string(e.code()), e.what());
    }
    s->image_png.assign(image_bytes.begin(), image_bytes.end());
    if (predictor == "baseline") {
        s->predictor = baseline_;
    } else if (predictor == "baseline-hull") {
        s->predictor = baseline_hull_;
    } else {
        s->predictor = default_predictor_;
        s->external = external_;
    }
    s->created_at = s->last_active = now();
    s->id = new_session_id();
    {
        std::unique_lock lock(map_mu_);
        sessions_[s->id] = s;
    }
    spdlog::debug("session {} created ({}x{})", s->id, s->image.dims.width, s->image.dims.height);
    return {200, {{"id", s->id}, {"width", s->image.dims.width}, {"height", s->image.dims.height}}};
}

ServiceResponse SessionService::add_click(const std::string& id, double x, double y) {
    auto s = find(id);
    if (!s) {
        return not_found(id);
    }
    std::lock_guard lock(s->mu);
    const auto t = now();
    if (s->deleted || t - s->last_active > config_.ttl) {
        return not_found(id);
    }
    s->last_active = t;
    const Dims d = s->image.dims;
    if (!std::isfinite(x) || !std::isfinite(y) || x < 0 || y < 0 || x > d.width - 1 || y > d.height - 1) {
        return error_response(422, "OutOfBounds", "click outside the image");
    }
    s->clicks.append({x, y}, ClickSource::Human);
    if (auto err = recompute(*s)) {
        s->clicks.pop_back();
        return *err;
    }
    return {200, state_json(*s)};
}

ServiceResponse SessionService::undo_click(const std::string& id) {
    auto s = find(id);
    if (!s) {
        return not_found(id);
    }
    std::lock_guard lock(s->mu);
    const auto t = now();
    if (s->deleted || t - s->last_active > config_.ttl) {
        return not_found(id);
    }
    s->last_active = t;
    if (s->clicks.empty()) {
        return error_response(409, "NoClicks", "nothing to undo");
    }
    const Click removed = s->clicks.back();
    s->clicks.pop_back();
    if (auto err = recompute(*s)) {
        s->clicks.append(removed.point, removed.source);
        return *err;
    }
    return {200, state_json(*s)};
}

ServiceResponse SessionService::get_state(const std::string& id) const {
    auto s = find(id);
    if (!s) {
        return not_found(id);
    }
    std::lock_guard lock(s->mu);
    const auto t = now();
    if (s->deleted || t - s->last_active > config_.ttl) {
        return not_found(id);
    }
    s->last_active = t;
    return {200, state_json(*s)};
}

ServiceResponse SessionService::delete_session(const std::string& id) {
    std::shared_ptr<Session> s;
    {
        std::unique_lock lock(map_mu_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) {
            return not_found(id);
        }
        s = it->second;
        sessions_.erase(it);
    }
    std::lock_guard lock(s->mu);
    s->deleted = true;
    return {204, nullptr};
}

std::size_t SessionService::session_count() const {
    std::shared_lock lock(map_mu_);
    return sessions_.size();
}

void SessionService::purge_expired() {
    const auto t = now();
    std::unique_lock lock(map_mu_);
    std::erase_if(sessions_, [&](const auto& kv) {
        std::lock_guard slock(kv.second->mu);
        return t - kv.second->last_active > config_.ttl;
    });
}

void SessionService::snapshot(const std::filesystem::path& dir) const {
    std::vector<std::shared_ptr<Session>> all;
    {
        std::shared_lock lock(map_mu_);
        for (const auto& kv : sessions_) {
            all.push_back(kv.second);
        }
    }
    for (const auto& s : all) {
        std::lock_guard lock(s->mu);
        const auto sub = dir / s->id;
        std::filesystem::create_directories(sub);
        write_file(sub / "image.png", encode_rgb_png(s->image));
        write_file(sub / "state.json", state_json(*s).dump(2) + "\n");
    }
}

SessionServer::SessionServer(SessionService& service, ServerOptions options)
    : service_(service), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;
    srv.set_payload_max_length(options_.max_body_bytes);

    auto reply = [](httplib::Response& res, const ServiceResponse& r) {
        res.status = r.status;
        if (r.status != 204) {
            res.set_content(r.body.dump(), "application/json");
        }
    };

    srv.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", options_.cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    srv.Post("/sessions", [this, reply](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> predictor;
        if (req.has_param("predictor")) {
            predictor = req.get_param_value("predictor");
        }
        if (req.is_multipart_form_data()) {
            if (!req.has_file("image")) {
                reply(res, error_response(400, "InvalidArgument", "multipart body needs an \"image\" field"));
                return;
            }
            const std::string& data = req.get_file_value("image").content;
            reply(res, service_.create_session(
                           {reinterpret_cast<const std::uint8_t*>(data.data()), data.size()}, predictor));
            return;
        }
        if (req.get_header_value("Content-Type").starts_with("application/json")) {
            Bytes bytes;
            try {
                const auto body = nlohmann::json::parse(req.body);
                bytes = base64_decode(body.at("image").get<std::string>());
                if (body.contains("predictor") && body["predictor"].is_string()) {
                    predictor = body["predictor"].get<std::string>();
                }
            } catch (const std::exception& e) {
                reply(res, error_response(400, "InvalidArgument", e.what()));
                return;
            }
            reply(res, service_.create_session(bytes, predictor));
            return;
        }
        reply(res, service_.create_session(
                       {reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()}, predictor));
    });

    srv.Post(R"(/sessions/([0-9a-f]+)/clicks)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        double x = 0, y = 0;
        try {
            const auto body = nlohmann::json::parse(req.body);
            x = body.at("x").get<double>();
            y = body.at("y").get<double>();
        } catch (const std::exception& e) {
            reply(res, error_response(400, "InvalidArgument", std::string("expected {\"x\", \"y\"}: ") + e.what()));
            return;
        }
        reply(res, service_.add_click(req.matches[1], x, y));
    });
    srv.Post(R"(/sessions/([0-9a-f]+)/undo)", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.undo_click(req.matches[1]));
    });
    srv.Get(R"(/sessions/([0-9a-f]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.get_state(req.matches[1]));
    });
    srv.Delete(R"(/sessions/([0-9a-f]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.delete_session(req.matches[1]));
    });

    if (options_.static_dir && !srv.set_mount_point("/", options_.static_dir->string())) {
        throw Error(ErrorCode::InvalidArgument, "static directory not found: " + options_.static_dir->string());
    }
}

SessionServer::~SessionServer() = default;

bool SessionServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

int SessionServer::bind_to_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool SessionServer::listen_after_bind() { return server_->listen_after_bind(); }

void SessionServer::stop() { server_->stop(); }

void SessionServer::wait_until_ready() const { server_->wait_until_ready(); }

}  // namespace contourseg
