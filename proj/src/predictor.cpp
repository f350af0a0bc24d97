#include "contourseg/predictor.hpp"

#include "contourseg/errors.hpp"
#include "contourseg/kernels.hpp"
#include "contourseg/mask_ops.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>

namespace contourseg {

namespace {

std::uint8_t quantize(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Grid grid_from_png(const std::string& b64, const char* field) {
    GrayImage g;
    try {
        g = decode_gray_png(base64_decode(b64));
    } catch (const Error& e) {
        throw Error(ErrorCode::ProtocolError, std::string(field) + ": " + e.what());
    }
    if (g.dims.width != g.dims.height) {
        throw Error(ErrorCode::ShapeMismatch, std::string(field) + " raster is not square");
    }
    Grid out(g.dims.width);
    for (std::size_t i = 0; i < g.pixels.size(); ++i) {
        out.values[i] = static_cast<float>(g.pixels[i]) / 255.0f;
    }
    return out;
}

std::string grid_to_png(const Grid& grid) {
    GrayImage g{{grid.size, grid.size}, std::vector<std::uint8_t>(grid.values.size())};
    std::transform(grid.values.begin(), grid.values.end(), g.pixels.begin(), quantize);
    return base64_encode(encode_gray_png(g));
}

void fill_disk(Grid& out, const Point& a, const Point& b) {
    const Point c{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const double r2 = 0.25 * ((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y));
    for (int v = 0; v < out.size; ++v) {
        for (int u = 0; u < out.size; ++u) {
            const double dx = u - c.x;
            const double dy = v - c.y;
            if (dx * dx + dy * dy <= r2 + 1e-9) {
                out.at(u, v) = 1.0f;
            }
        }
    }
}

void fill_from_mask(Grid& out, const PixelMask& mask) {
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] = mask.bytes()[i] ? 1.0f : 0.0f;
    }
}

struct Endpoint {
    std::string scheme_host_port;
    std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    Endpoint e;
    if (path_start == std::string::npos) {
        e.scheme_host_port = url;
    } else {
        e.scheme_host_port = url.substr(0, path_start);
        e.base_path = url.substr(path_start);
    }
    while (!e.base_path.empty() && e.base_path.back() == '/') {
        e.base_path.pop_back();
    }
    return e;
}

}  // namespace

void EncodingParams::validate() const {
    if (!(sigma > 0.0) || !(binarize_threshold > 0.0 && binarize_threshold < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "encoding needs sigma > 0 and threshold in (0, 1)");
    }
}

Heatmap encode_clicks(std::span<const Point> crop_clicks, int size, const EncodingParams& params) {
    params.validate();
    Heatmap out(size);
    if (crop_clicks.empty()) {
        return out;
    }
    std::vector<float> xs, ys;
    xs.reserve(crop_clicks.size());
    ys.reserve(crop_clicks.size());
    const double hi = size - 1;
    for (const Point& p : crop_clicks) {
        xs.push_back(static_cast<float>(std::clamp(p.x, 0.0, hi)));
        ys.push_back(static_cast<float>(std::clamp(p.y, 0.0, hi)));
    }
    // max_k exp(-d_k^2 / 2s^2) == exp(-min_k d_k^2 / 2s^2)
    const auto& k = kernels::active();
    const double inv = 1.0 / (2.0 * params.sigma * params.sigma);
    std::vector<float> row(static_cast<std::size_t>(size));
    for (int v = 0; v < size; ++v) {
        k.min_sq_distance_row(row.data(), size, static_cast<float>(v), xs.data(), ys.data(), xs.size());
        float* dst = out.values.data() + static_cast<std::size_t>(v) * size;
        for (int u = 0; u < size; ++u) {
            dst[u] = static_cast<float>(std::exp(-static_cast<double>(row[u]) * inv));
        }
    }
    return out;
}

ModelInput assemble_input(const RgbImage& image, const CropRect& crop, const ClickSet& clicks, int size,
                          const EncodingParams& params) {
    if (!crop.valid() || crop.source != image.dims) {
        throw Error(ErrorCode::DegenerateCrop, "crop does not fit the image");
    }
    ModelInput in;
    in.size = size;
    in.image.assign(3 * static_cast<std::size_t>(size) * size, 0.0f);

    struct Tap {
        int lo, hi;
        double frac;
    };
    const auto taps = [size](int origin, int side) {
        std::vector<Tap> t(static_cast<std::size_t>(size));
        for (int i = 0; i < size; ++i) {
            const double s = std::clamp(static_cast<double>(i) * side / size, 0.0, side - 1.0);
            const int lo = static_cast<int>(std::floor(s));
            t[i] = {origin + lo, origin + std::min(lo + 1, side - 1), s - lo};
        }
        return t;
    };
    const std::vector<Tap> tx = taps(crop.x0, crop.side_w);
    const std::vector<Tap> ty = taps(crop.y0, crop.side_h);
    for (int c = 0; c < 3; ++c) {
        float* plane = in.image.data() + static_cast<std::size_t>(c) * size * size;
        for (int v = 0; v < size; ++v) {
            const Tap& ry = ty[v];
            for (int u = 0; u < size; ++u) {
                const Tap& rx = tx[u];
                const double top = image.at(rx.lo, ry.lo, c) * (1.0 - rx.frac) + image.at(rx.hi, ry.lo, c) * rx.frac;
                const double bot = image.at(rx.lo, ry.hi, c) * (1.0 - rx.frac) + image.at(rx.hi, ry.hi, c) * rx.frac;
                plane[static_cast<std::size_t>(v) * size + u] =
                    static_cast<float>((top * (1.0 - ry.frac) + bot * ry.frac) / 255.0);
            }
        }
    }

    for (const Click& c : clicks) {
        in.clicks.push_back(map_point(c.point, crop, size, MapDirection::ToCrop));
    }
    in.heatmap = encode_clicks(in.clicks, size, params);
    return in;
}

ProbGrid baseline_predict(const ModelInput& input, std::span<const Point> crop_clicks, BaselineMode mode) {
    if (crop_clicks.size() < 2) {
        throw Error(ErrorCode::TooFewClicks, "baseline predictor needs at least two clicks");
    }
    ProbGrid out(input.size);
    const Dims dims{input.size, input.size};
    if (mode == BaselineMode::PairDisk) {
        if (crop_clicks.size() == 2) {
            fill_disk(out, crop_clicks[0], crop_clicks[1]);
            return out;
        }
        if (convex_hull(crop_clicks).size() < 3) {
            // Collinear: disk over the farthest pair.
            std::size_t bi = 0, bj = 1;
            double best = -1.0;
            for (std::size_t i = 0; i < crop_clicks.size(); ++i) {
                for (std::size_t j = i + 1; j < crop_clicks.size(); ++j) {
                    const double d = std::hypot(crop_clicks[i].x - crop_clicks[j].x, crop_clicks[i].y - crop_clicks[j].y);
                    if (d > best) {
                        best = d;
                        bi = i;
                        bj = j;
                    }
                }
            }
            fill_disk(out, crop_clicks[bi], crop_clicks[bj]);
            return out;
        }
    }
    fill_from_mask(out, fill_convex_hull(crop_clicks, dims));
    return out;
}

ProbGrid BaselinePredictor::predict(const ModelInput& input) const {
    return baseline_predict(input, input.clicks, mode_);
}

std::string BaselinePredictor::name() const {
    return mode_ == BaselineMode::PairDisk ? "baseline" : "baseline-hull";
}

nlohmann::json encode_predict_request(const ModelInput& input) {
    RgbImage rgb{{input.size, input.size}, std::vector<std::uint8_t>(3 * static_cast<std::size_t>(input.size) * input.size)};
    for (int v = 0; v < input.size; ++v) {
        for (int u = 0; u < input.size; ++u) {
            for (int c = 0; c < 3; ++c) {
                rgb.rgb[(static_cast<std::size_t>(v) * input.size + u) * 3 + c] = quantize(input.channel(c, u, v));
            }
        }
    }
    nlohmann::json clicks = nlohmann::json::array();
    for (const Point& p : input.clicks) {
        clicks.push_back({{"x", p.x}, {"y", p.y}});
    }
    return {{"size", input.size},
            {"image", base64_encode(encode_rgb_png(rgb))},
            {"heatmap", grid_to_png(input.heatmap)},
            {"clicks", std::move(clicks)}};
}

ModelInput decode_predict_request(const nlohmann::json& body) {
    try {
        ModelInput in;
        in.size = body.at("size").get<int>();
        const RgbImage rgb = decode_image(base64_decode(body.at("image").get<std::string>()));
        if (rgb.dims != Dims{in.size, in.size}) {
            throw Error(ErrorCode::ShapeMismatch, "image raster does not match size");
        }
        in.image.assign(3 * static_cast<std::size_t>(in.size) * in.size, 0.0f);
        for (int v = 0; v < in.size; ++v) {
            for (int u = 0; u < in.size; ++u) {
                for (int c = 0; c < 3; ++c) {
                    in.image[(static_cast<std::size_t>(c) * in.size + v) * in.size + u] = rgb.at(u, v, c) / 255.0f;
                }
            }
        }
        in.heatmap = grid_from_png(body.at("heatmap").get<std::string>(), "heatmap");
        if (in.heatmap.size != in.size) {
            throw Error(ErrorCode::ShapeMismatch, "heatmap raster does not match size");
        }
        for (const auto& c : body.at("clicks")) {
            in.clicks.push_back({c.at("x").get<double>(), c.at("y").get<double>()});
        }
        return in;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ProtocolError, std::string("predict request: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ShapeMismatch || e.code() == ErrorCode::ProtocolError) {
            throw;
        }
        throw Error(ErrorCode::ProtocolError, std::string("predict request: ") + e.what());
    }
}

nlohmann::json encode_predict_response(const ProbGrid& probs) {
    return {{"probs", grid_to_png(probs)}};
}

ProbGrid decode_predict_response(const nlohmann::json& body) {
    if (!body.is_object() || !body.contains("probs") || !body["probs"].is_string()) {
        throw Error(ErrorCode::ProtocolError, "response lacks a \"probs\" string");
    }
    return grid_from_png(body["probs"].get<std::string>(), "probs");
}

ProbGrid external_predict(const std::string& endpoint, const ModelInput& input,
                          std::chrono::milliseconds timeout) {
    const Endpoint ep = split_endpoint(endpoint);
    httplib::Client client(ep.scheme_host_port);
    if (!client.is_valid()) {
        throw Error(ErrorCode::ProtocolError, "invalid predictor endpoint " + endpoint);
    }
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const std::string body = encode_predict_request(input).dump();
    const auto res = client.Post(ep.base_path + "/predict", body, "application/json");
    if (!res) {
        throw Error(ErrorCode::PredictorTimeout,
                    "predictor " + endpoint + " unavailable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::ProtocolError, "predictor returned HTTP " + std::to_string(res->status));
    }
    const nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) {
        throw Error(ErrorCode::ProtocolError, "predictor response is not JSON");
    }
    ProbGrid probs = decode_predict_response(reply);
    if (probs.size != input.size) {
        throw Error(ErrorCode::ShapeMismatch, "predictor returned " + std::to_string(probs.size) +
                                                  " px raster, expected " + std::to_string(input.size));
    }
    return probs;
}

ProbGrid ExternalPredictor::predict(const ModelInput& input) const {
    return external_predict(endpoint_, input, timeout_);
}

std::unique_ptr<Predictor> make_predictor(const std::string& spec, std::chrono::milliseconds timeout) {
    if (spec == "baseline") {
        return std::make_unique<BaselinePredictor>(BaselineMode::PairDisk);
    }
    if (spec == "baseline-hull") {
        return std::make_unique<BaselinePredictor>(BaselineMode::Hull);
    }
    constexpr std::string_view kExternal = "external:";
    if (spec.rfind(kExternal, 0) == 0 && spec.size() > kExternal.size()) {
        return std::make_unique<ExternalPredictor>(spec.substr(kExternal.size()), timeout);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown predictor \"" + spec + "\"");
}

PixelMask binarize(const ProbGrid& probs, double threshold) {
    PixelMask out(Dims{probs.size, probs.size});
    kernels::active().threshold(probs.values.data(), out.bytes().data(), probs.values.size(),
                                static_cast<float>(threshold));
    return out;
}

Prediction full_pipeline(const RgbImage& image, const ClickSet& clicks, const Predictor& predictor,
                         const CropParams& crop_params, const EncodingParams& enc_params) {
    if (clicks.size() < 2) {
        throw Error(ErrorCode::TooFewClicks, "the pipeline needs at least two clicks");
    }
    const std::vector<Point> pts = clicks.points();
    const Circle circle = smallest_enclosing_circle(pts);
    const CropRect crop = expand_to_crop(circle, crop_params, image.dims);
    const ModelInput input = assemble_input(image, crop, clicks, crop_params.target_size, enc_params);
    ProbGrid probs = predictor.predict(input);
    if (probs.size != input.size || probs.values.size() != static_cast<std::size_t>(input.size) * input.size) {
        throw Error(ErrorCode::ShapeMismatch, "predictor output does not match the input size");
    }
    const PixelMask crop_mask = binarize(probs, enc_params.binarize_threshold);
    PixelMask full = paste_mask(crop_mask, crop, image.dims);
    return Prediction{std::move(probs), std::move(full), crop};
}

}  // namespace contourseg
