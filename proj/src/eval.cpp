#include "contourseg/eval.hpp"

#include "contourseg/errors.hpp"
#include "contourseg/mask_ops.hpp"

#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace contourseg {

namespace fs = std::filesystem;

namespace {

// Runs body(i) for i in [0, n) on `workers` threads. Results must be written
// by index so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                body(i);
            }
        });
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

nlohmann::json config_to_json(const EvalConfig& c) {
    return {
        {"iou_threshold", c.iou_threshold},
        {"max_clicks", c.max_clicks},
        {"seed", c.seed},
        {"delta_n", c.sim.corrective_batch},
        {"pair", {{"ratio_mean", c.pair.ratio_mean}, {"ratio_std", c.pair.ratio_std},
                  {"ratio_low", c.pair.ratio_low}, {"ratio_high", c.pair.ratio_high},
                  {"contour_subsample", c.pair.contour_subsample}}},
        {"crop", {{"expansion_ratio", c.crop.expansion_ratio}, {"min_diameter", c.crop.min_diameter},
                  {"target_size", c.crop.target_size}}},
        {"encoding", {{"sigma", c.enc.sigma}, {"binarize_threshold", c.enc.binarize_threshold}}},
    };
}

EvalReport run_dataset(const Dataset& dataset, const Predictor& predictor, const EvalConfig& config, int n_max) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    EvalReport report;
    report.predictor = predictor.name();
    report.config = config;
    report.per_instance.resize(dataset.instances.size());

    parallel_for(dataset.instances.size(), resolve_workers(config.workers), [&](std::size_t i) {
        const DatasetInstance& inst = dataset.instances[i];
        LoadedInstance loaded;
        try {
            loaded = load_instance(inst);
        } catch (const Error& e) {
            InstanceResult r;
            r.id = inst.id;
            r.failed = true;
            r.noc = config.max_clicks;
            r.error_code = ErrorCode::CorruptInstance;
            r.error = e.what();
            report.per_instance[i] = std::move(r);
            return;
        }
        report.per_instance[i] = run_instance(inst.id, loaded.image, loaded.mask, predictor, config, n_max);
    });

    double sum = 0.0;
    int counted = 0;
    for (const InstanceResult& r : report.per_instance) {
        if (!r.failed) {
            sum += r.noc;
            ++counted;
        }
    }
    if (counted > 0) {
        report.noc_mean = sum / counted;
    }
    if (n_max >= 2) {
        report.miou_curve = miou_curve_from(report.per_instance, n_max);
    }
    report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace

Dataset load_dataset(const fs::path& root) {
    const fs::path index_path = root / "index.json";
    if (!fs::is_regular_file(index_path)) {
        throw Error(ErrorCode::DatasetNotFound, "no index.json under " + root.string());
    }
    nlohmann::json index;
    try {
        std::ifstream in(index_path);
        index = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::DatasetNotFound, index_path.string() + " is not valid JSON: " + e.what());
    }
    if (!index.is_object() || !index.contains("instances") || !index["instances"].is_array()) {
        throw Error(ErrorCode::DatasetNotFound, index_path.string() + " lacks an \"instances\" array");
    }

    Dataset ds;
    ds.root = root;
    for (const auto& entry : index["instances"]) {
        DatasetInstance inst;
        try {
            inst.id = entry.at("id").get<std::string>();
            inst.image = root / entry.at("image").get<std::string>();
            inst.mask = root / entry.at("mask").get<std::string>();
            if (entry.contains("category") && entry["category"].is_string()) {
                inst.category = entry["category"].get<std::string>();
            }
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::CorruptInstance, "malformed index entry: " + std::string(e.what()));
        }

        PixelMask mask;
        try {
            mask = decode_mask_png(read_file(inst.mask));
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptInstance, inst.id + ": cannot read mask " + inst.mask.string() + " (" + e.what() + ")");
        }
        if (mask.empty()) {
            throw Error(ErrorCode::CorruptInstance, inst.id + ": mask " + inst.mask.string() + " has no foreground");
        }
        Dims image_dims;
        try {
            image_dims = probe_image_dims(read_file(inst.image));
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptInstance, inst.id + ": cannot read image " + inst.image.string() + " (" + e.what() + ")");
        }
        if (image_dims != mask.dims()) {
            std::ostringstream msg;
            msg << inst.id << ": mask " << inst.mask.string() << " is " << mask.width() << "x" << mask.height()
                << " but image " << inst.image.string() << " is " << image_dims.width << "x" << image_dims.height;
            throw Error(ErrorCode::CorruptInstance, msg.str());
        }
        ds.instances.push_back(std::move(inst));
    }
    if (ds.instances.empty()) {
        spdlog::warn("dataset {} has no instances", root.string());
    }
    return ds;
}

LoadedInstance load_instance(const DatasetInstance& instance) {
    LoadedInstance out{decode_image(read_file(instance.image)), decode_mask_png(read_file(instance.mask))};
    if (out.image.dims != out.mask.dims()) {
        throw Error(ErrorCode::CorruptInstance, instance.id + ": image and mask sizes differ");
    }
    return out;
}

void EvalConfig::validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0) || max_clicks < 2) {
        throw Error(ErrorCode::InvalidArgument, "eval needs threshold in (0, 1) and max_clicks >= 2");
    }
    pair.validate();
    sim.validate();
    crop.validate();
    enc.validate();
}

int EvalReport::failed_count() const {
    return static_cast<int>(std::count_if(per_instance.begin(), per_instance.end(),
                                          [](const InstanceResult& r) { return r.failed; }));
}

int EvalReport::reached_count() const {
    return static_cast<int>(std::count_if(per_instance.begin(), per_instance.end(),
                                          [](const InstanceResult& r) { return r.reached; }));
}

std::uint64_t instance_seed(std::uint64_t seed, std::string_view instance_id) {
    std::string buf(8, '\0');
    for (int i = 0; i < 8; ++i) {
        buf[i] = static_cast<char>((seed >> (8 * i)) & 0xff);
    }
    buf.append(instance_id);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(buf.data(), buf.size(), digest, &len, EVP_sha256(), nullptr);
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) {
        out |= static_cast<std::uint64_t>(digest[i]) << (8 * i);
    }
    return out;
}

int resolve_workers(int requested) {
    if (requested > 0) {
        return requested;
    }
    if (const char* env = std::getenv("CONTOURSEG_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) {
            return v;
        }
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

InstanceResult run_instance(const std::string& id, const RgbImage& image, const PixelMask& gt,
                            const Predictor& predictor, const EvalConfig& config, int n_max) {
    InstanceResult r;
    r.id = id;
    r.noc = config.max_clicks;
    ClickSet clicks;
    try {
        clicks = sample_initial_pair(gt, config.pair, instance_seed(config.seed, id));
        while (true) {
            const Prediction pred = full_pipeline(image, clicks, predictor, config.crop, config.enc);
            const int n = static_cast<int>(clicks.size());
            const double score = iou(gt, pred.mask_full);
            r.trace.push_back({n, score});
            if (!r.reached && score >= config.iou_threshold) {
                r.reached = true;
                r.noc = n;
            }
            const int limit = r.reached ? n_max : std::max(n_max, config.max_clicks);
            if (n >= limit) {
                break;
            }
            const int batch = std::min(config.sim.corrective_batch, limit - n);
            const std::vector<Click> next = next_clicks_corrective(gt, pred.mask_full, batch, clicks);
            if (next.empty()) {
                break;
            }
            for (const Click& c : next) {
                clicks.append(c.point, ClickSource::Corrective);
            }
        }
    } catch (const Error& e) {
        r.failed = true;
        r.error_code = e.code();
        r.error = e.what();
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
    }
    if (!r.reached) {
        r.noc = config.max_clicks;
    }
    r.clicks.assign(clicks.begin(), clicks.end());
    return r;
}

EvalReport evaluate_noc(const Dataset& dataset, const Predictor& predictor, const EvalConfig& config) {
    return run_dataset(dataset, predictor, config, 0);
}

EvalReport evaluate_miou_curve(const Dataset& dataset, const Predictor& predictor, const EvalConfig& config,
                               int n_max) {
    if (n_max < 2) {
        throw Error(ErrorCode::InvalidArgument, "n_max must be at least 2");
    }
    return run_dataset(dataset, predictor, config, n_max);
}

std::vector<CurvePoint> miou_curve_from(std::span<const InstanceResult> results, int n_max) {
    std::vector<CurvePoint> curve;
    for (int n = 2; n <= n_max; ++n) {
        double sum = 0.0;
        int count = 0;
        for (const InstanceResult& r : results) {
            if (r.failed || r.trace.empty()) {
                continue;
            }
            double value = r.trace.front().iou;
            for (const TracePoint& t : r.trace) {
                if (t.n > n) {
                    break;
                }
                value = t.iou;
            }
            sum += value;
            ++count;
        }
        curve.push_back({n, count > 0 ? sum / count : 0.0});
    }
    return curve;
}

std::vector<CropLossPoint> crop_loss_analysis(const Dataset& dataset, std::span<const double> ratios,
                                              const PairSamplingParams& pair, std::uint64_t seed,
                                              const CropParams& base, int workers) {
    if (ratios.empty()) {
        throw Error(ErrorCode::InvalidArgument, "crop_loss_analysis needs at least one ratio");
    }
    for (double r : ratios) {
        CropParams p = base;
        p.expansion_ratio = r;
        p.validate();
    }
    const std::size_t n = dataset.instances.size();
    std::vector<std::vector<double>> losses(n, std::vector<double>(ratios.size(), 0.0));
    parallel_for(n, resolve_workers(workers), [&](std::size_t i) {
        const DatasetInstance& inst = dataset.instances[i];
        const PixelMask gt = decode_mask_png(read_file(inst.mask));
        const ClickSet clicks = sample_initial_pair(gt, pair, instance_seed(seed, inst.id));
        const std::vector<Point> pts = clicks.points();
        const Circle circle = smallest_enclosing_circle(pts);
        for (std::size_t k = 0; k < ratios.size(); ++k) {
            CropParams p = base;
            p.expansion_ratio = ratios[k];
            const CropRect crop = expand_to_crop(circle, p, gt.dims());
            const PixelMask cropped = crop_resize_mask(gt, crop, {crop.side_w, crop.side_h});
            losses[i][k] = 1.0 - iou(gt, paste_mask(cropped, crop, gt.dims()));
        }
    });

    std::vector<CropLossPoint> out;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += losses[i][k];
        }
        out.push_back({ratios[k], n > 0 ? sum / static_cast<double>(n) : 0.0});
    }
    return out;
}

std::vector<double> parse_ratio_range(const std::string& text) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || hi < lo) {
        throw Error(ErrorCode::InvalidArgument, "ratio range must look like 1.0:1.9:0.05");
    }
    std::vector<double> out;
    const long count = std::lround(std::floor((hi - lo) / step + 0.5));
    for (long i = 0; i <= count; ++i) {
        out.push_back(lo + static_cast<double>(i) * step);
    }
    return out;
}

std::string report_to_json(const EvalReport& report, bool include_timing) {
    nlohmann::json instances = nlohmann::json::array();
    for (const InstanceResult& r : report.per_instance) {
        nlohmann::json trace = nlohmann::json::array();
        for (const TracePoint& t : r.trace) {
            trace.push_back({{"n", t.n}, {"iou", t.iou}});
        }
        nlohmann::json clicks = nlohmann::json::array();
        for (const Click& c : r.clicks) {
            clicks.push_back({{"x", c.point.x}, {"y", c.point.y}, {"source", std::string(to_string(c.source))}});
        }
        nlohmann::json item{{"id", r.id}, {"noc", r.noc}, {"reached", r.reached}, {"failed", r.failed},
                            {"trace", std::move(trace)}, {"clicks", std::move(clicks)}};
        if (r.failed) {
            item["error"] = r.error;
            item["error_code"] = r.error_code ? std::string(to_string(*r.error_code)) : "Unknown";
        }
        instances.push_back(std::move(item));
    }
    nlohmann::json curve = nlohmann::json::array();
    for (const CurvePoint& p : report.miou_curve) {
        curve.push_back({{"n", p.n}, {"miou", p.miou}});
    }
    nlohmann::json doc{
        {"predictor", report.predictor},
        {"config", config_to_json(report.config)},
        {"summary",
         {{"instances", report.per_instance.size()},
          {"reached", report.reached_count()},
          {"failed", report.failed_count()},
          {"noc_mean", report.noc_mean ? nlohmann::json(*report.noc_mean) : nlohmann::json(nullptr)}}},
        {"miou_curve", std::move(curve)},
        {"instances", std::move(instances)},
    };
    if (include_timing) {
        doc["timing"] = {{"elapsed_s", report.elapsed_seconds}};
    }
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvalReport& report) {
    std::string out = "instance_id,n,iou\n";
    for (const InstanceResult& r : report.per_instance) {
        for (const TracePoint& t : r.trace) {
            out += r.id + "," + std::to_string(t.n) + "," + format_double(t.iou) + "\n";
        }
    }
    out += "# summary\n";
    out += "noc_mean," + (report.noc_mean ? format_double(*report.noc_mean) : std::string()) + "\n";
    out += "instances," + std::to_string(report.per_instance.size()) + "\n";
    out += "reached," + std::to_string(report.reached_count()) + "\n";
    out += "failed," + std::to_string(report.failed_count()) + "\n";
    for (const CurvePoint& p : report.miou_curve) {
        out += "miou_n" + std::to_string(p.n) + "," + format_double(p.miou) + "\n";
    }
    return out;
}

void write_report(const EvalReport& report, const fs::path& path, ReportFormat format, bool include_timing) {
    const std::string text = format == ReportFormat::Json ? report_to_json(report, include_timing) : report_to_csv(report);
    try {
        write_file(path, text);
    } catch (const Error& e) {
        throw Error(ErrorCode::Io, "cannot write report to " + path.string());
    }
}

}  // namespace contourseg
