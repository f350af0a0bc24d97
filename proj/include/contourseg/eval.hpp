#pragma once

#include "contourseg/click_sim.hpp"
#include "contourseg/errors.hpp"
#include "contourseg/geometry.hpp"
#include "contourseg/image_io.hpp"
#include "contourseg/predictor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace contourseg {

struct DatasetInstance {
    std::string id;
    std::filesystem::path image;  // absolute
    std::filesystem::path mask;   // absolute
    std::optional<std::string> category;
};

struct Dataset {
    std::filesystem::path root;
    std::vector<DatasetInstance> instances;
};

/// Reads root/index.json and checks that every mask decodes, is non-empty and
/// matches its image. Throws DatasetNotFound or CorruptInstance (naming the id
/// and file).
Dataset load_dataset(const std::filesystem::path& root);

struct LoadedInstance {
    RgbImage image;
    PixelMask mask;
};

LoadedInstance load_instance(const DatasetInstance& instance);

struct EvalConfig {
    double iou_threshold = 0.85;
    int max_clicks = 20;
    std::uint64_t seed = 42;
    int workers = 0;  // 0: CONTOURSEG_WORKERS, else hardware concurrency
    PairSamplingParams pair;
    SimulationParams sim;
    CropParams crop;
    EncodingParams enc;

    void validate() const;
};

struct TracePoint {
    int n = 0;
    double iou = 0.0;
};

struct InstanceResult {
    std::string id;
    std::vector<TracePoint> trace;
    std::vector<Click> clicks;
    int noc = 0;
    bool reached = false;
    bool failed = false;
    std::optional<ErrorCode> error_code;
    std::string error;
};

struct CurvePoint {
    int n = 0;
    double miou = 0.0;
};

struct EvalReport {
    std::string predictor;
    EvalConfig config;
    std::vector<InstanceResult> per_instance;
    std::optional<double> noc_mean;
    std::vector<CurvePoint> miou_curve;
    double elapsed_seconds = 0.0;

    int failed_count() const;
    int reached_count() const;
};

/// Per-instance seed: a hash of (seed, instance id), independent of scheduling.
std::uint64_t instance_seed(std::uint64_t seed, std::string_view instance_id);

/// Effective worker count for a requested value (0 = environment / hardware).
int resolve_workers(int requested);

/// Click loop on one target: initial pair, then corrective batches. Runs while
/// fewer than `n_max` clicks are placed, or the threshold is unmet and fewer
/// than max_clicks are placed. n_max <= 2 stops at the first threshold crossing.
InstanceResult run_instance(const std::string& id, const RgbImage& image, const PixelMask& gt,
                            const Predictor& predictor, const EvalConfig& config, int n_max);

/// NoC@threshold over the dataset. noc_mean averages capped NoC values of
/// non-failed instances.
EvalReport evaluate_noc(const Dataset& dataset, const Predictor& predictor, const EvalConfig& config);

/// Mean IoU after n clicks for n in [2, n_max]. Shares each instance's trace
/// with the NoC computation, so the report carries both.
EvalReport evaluate_miou_curve(const Dataset& dataset, const Predictor& predictor, const EvalConfig& config,
                               int n_max);

/// Mean IoU at each n in [2, n_max] from finished traces (the last prediction
/// at or below n counts). Failed instances are skipped.
std::vector<CurvePoint> miou_curve_from(std::span<const InstanceResult> results, int n_max);

struct CropLossPoint {
    double ratio = 0.0;
    double mean_loss = 0.0;
};

/// Ground truth cropped by the pair-click circle expanded by each ratio and
/// pasted back: mean of 1 - IoU(gt, pasted).
std::vector<CropLossPoint> crop_loss_analysis(const Dataset& dataset, std::span<const double> ratios,
                                              const PairSamplingParams& pair, std::uint64_t seed,
                                              const CropParams& base = {}, int workers = 0);

/// "a:b:step" inclusive of b (within step/2).
std::vector<double> parse_ratio_range(const std::string& text);

enum class ReportFormat { Json, Csv };

std::string report_to_json(const EvalReport& report, bool include_timing = false);
std::string report_to_csv(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format,
                  bool include_timing = false);

}  // namespace contourseg
