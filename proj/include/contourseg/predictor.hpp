#pragma once

#include "contourseg/click_sim.hpp"
#include "contourseg/geometry.hpp"
#include "contourseg/image_io.hpp"
#include "contourseg/mask.hpp"

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace contourseg {

struct EncodingParams {
    double sigma = 10.0;  // crop-space pixels
    double binarize_threshold = 0.5;

    void validate() const;
};

// Square single-channel raster with values in [0, 1].
struct Grid {
    int size = 0;
    std::vector<float> values;

    Grid() = default;
    explicit Grid(int s) : size(s), values(static_cast<std::size_t>(s) * s, 0.0f) {}

    float at(int u, int v) const { return values[static_cast<std::size_t>(v) * size + u]; }
    float& at(int u, int v) { return values[static_cast<std::size_t>(v) * size + u]; }
};

using Heatmap = Grid;
using ProbGrid = Grid;

struct ModelInput {
    int size = 0;
    std::vector<float> image;  // planar RGB, 3 * size * size, values in [0, 1]
    Heatmap heatmap;
    std::vector<Point> clicks;  // crop space

    float channel(int c, int u, int v) const {
        return image[(static_cast<std::size_t>(c) * size + v) * size + u];
    }
};

struct Prediction {
    ProbGrid probs;  // crop space
    PixelMask mask_full;
    CropRect crop;

    friend bool operator==(const Prediction& a, const Prediction& b) {
        return a.probs.size == b.probs.size && a.probs.values == b.probs.values &&
               a.mask_full == b.mask_full && a.crop == b.crop;
    }
};

/// Per pixel, max over clicks of exp(-d^2 / (2 sigma^2)). Clicks are clamped
/// into the raster first; no clicks gives an all-zero map.
Heatmap encode_clicks(std::span<const Point> crop_clicks, int size, const EncodingParams& params);

/// Bilinear resize of the crop to size x size (channels scaled to [0, 1]) plus
/// the encoded click heatmap.
ModelInput assemble_input(const RgbImage& image, const CropRect& crop, const ClickSet& clicks, int size,
                          const EncodingParams& params);

class Predictor {
public:
    virtual ~Predictor() = default;
    // Must be callable concurrently.
    virtual ProbGrid predict(const ModelInput& input) const = 0;
    virtual std::string name() const = 0;
};

enum class BaselineMode {
    PairDisk,  // two clicks: disk on the pair as diameter; more: convex hull
    Hull,      // convex hull for any click count (two clicks: a segment)
};

/// Deterministic geometric stand-in for a trained model. Throws TooFewClicks.
ProbGrid baseline_predict(const ModelInput& input, std::span<const Point> crop_clicks,
                          BaselineMode mode = BaselineMode::PairDisk);

class BaselinePredictor final : public Predictor {
public:
    explicit BaselinePredictor(BaselineMode mode = BaselineMode::PairDisk) : mode_(mode) {}
    ProbGrid predict(const ModelInput& input) const override;
    std::string name() const override;

private:
    BaselineMode mode_;
};

/// JSON body of POST {endpoint}/predict.
nlohmann::json encode_predict_request(const ModelInput& input);
/// Server side of the protocol; throws ProtocolError on malformed bodies.
ModelInput decode_predict_request(const nlohmann::json& body);
nlohmann::json encode_predict_response(const ProbGrid& probs);
/// Throws ProtocolError on malformed bodies; no size check.
ProbGrid decode_predict_response(const nlohmann::json& body);

/// One blocking round trip. Transport failures and deadline overruns raise
/// PredictorTimeout, bad payloads ProtocolError, wrong raster size ShapeMismatch.
ProbGrid external_predict(const std::string& endpoint, const ModelInput& input,
                          std::chrono::milliseconds timeout);

class ExternalPredictor final : public Predictor {
public:
    ExternalPredictor(std::string endpoint, std::chrono::milliseconds timeout)
        : endpoint_(std::move(endpoint)), timeout_(timeout) {}
    ProbGrid predict(const ModelInput& input) const override;
    std::string name() const override { return "external:" + endpoint_; }

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

/// "baseline", "baseline-hull" or "external:URL".
std::unique_ptr<Predictor> make_predictor(const std::string& spec,
                                          std::chrono::milliseconds timeout = std::chrono::seconds(30));

PixelMask binarize(const ProbGrid& probs, double threshold);

/// Clicks -> enclosing circle -> crop -> model input -> predictor ->
/// threshold -> paste back at full resolution.
Prediction full_pipeline(const RgbImage& image, const ClickSet& clicks, const Predictor& predictor,
                         const CropParams& crop_params, const EncodingParams& enc_params);

}  // namespace contourseg
