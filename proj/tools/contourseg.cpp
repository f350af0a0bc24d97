#include "contourseg/errors.hpp"
#include "contourseg/eval.hpp"
#include "contourseg/fixtures.hpp"
#include "contourseg/session.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>
#include <thread>

using namespace contourseg;

namespace {

constexpr int kExitCorrupt = 2;
constexpr int kExitPredictor = 3;

struct CommonOptions {
    std::string dataset;
    std::string predictor = "baseline";
    double threshold = 0.85;
    int max_clicks = 20;
    int delta_n = 1;
    std::uint64_t seed = 42;
    std::string out;
    std::string format = "json";
    int workers = 0;
    bool timing = false;
    int timeout_ms = 30000;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--dataset", o.dataset, "dataset root containing index.json")->required();
    app->add_option("--predictor", o.predictor, "baseline, baseline-hull or external:URL");
    app->add_option("--threshold", o.threshold, "IoU threshold");
    app->add_option("--max-clicks", o.max_clicks, "click cap per instance");
    app->add_option("--delta-n", o.delta_n, "corrective clicks per round");
    app->add_option("--seed", o.seed);
    app->add_option("--out", o.out, "report path (stdout if omitted)");
    app->add_option("--format", o.format)->check(CLI::IsMember({"json", "csv"}));
    app->add_option("--workers", o.workers, "0 = CONTOURSEG_WORKERS or all cores");
    app->add_flag("--timing", o.timing, "include wall time in JSON reports");
    app->add_option("--predictor-timeout-ms", o.timeout_ms);
}

EvalConfig make_config(const CommonOptions& o) {
    EvalConfig c;
    c.iou_threshold = o.threshold;
    c.max_clicks = o.max_clicks;
    c.sim.corrective_batch = o.delta_n;
    c.seed = o.seed;
    c.workers = o.workers;
    return c;
}

bool is_predictor_error(ErrorCode code) {
    return code == ErrorCode::PredictorTimeout || code == ErrorCode::ProtocolError ||
           code == ErrorCode::ShapeMismatch;
}

int emit(const EvalReport& report, const CommonOptions& o) {
    const ReportFormat fmt = o.format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
    if (o.out.empty()) {
        std::cout << (fmt == ReportFormat::Json ? report_to_json(report, o.timing) : report_to_csv(report));
    } else {
        write_report(report, o.out, fmt, o.timing);
    }
    bool corrupt = false, predictor = false;
    for (const InstanceResult& r : report.per_instance) {
        if (!r.failed) {
            continue;
        }
        spdlog::warn("instance {} failed: {}", r.id, r.error);
        if (r.error_code == ErrorCode::CorruptInstance) {
            corrupt = true;
        } else if (r.error_code && is_predictor_error(*r.error_code)) {
            predictor = true;
        }
    }
    if (report.noc_mean) {
        spdlog::info("NoC@{:.0f}% = {:.3f} over {} instances", report.config.iou_threshold * 100.0,
                     *report.noc_mean, report.per_instance.size() - report.failed_count());
    }
    return corrupt ? kExitCorrupt : predictor ? kExitPredictor : 0;
}

int run_serve(int port, const std::string& host, const SessionConfig& cfg, const ServerOptions& opts,
              const std::string& snapshot_dir) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    SessionService service(cfg);
    SessionServer server(service, opts);
    std::jthread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        spdlog::info("signal {}, shutting down", sig);
        server.stop();
    });
    spdlog::info("listening on {}:{} with predictor {}", host, port, cfg.predictor);
    const bool ok = server.listen(host, port);
    if (!ok) {
        spdlog::error("cannot listen on {}:{}", host, port);
        pthread_kill(waiter.native_handle(), SIGTERM);
        return 1;
    }
    if (!snapshot_dir.empty()) {
        service.snapshot(snapshot_dir);
        spdlog::info("wrote {} sessions to {}", service.session_count(), snapshot_dir);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"contour-click interactive segmentation: evaluation, analysis and session server"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose);

    CommonOptions eval_opts;
    auto* eval = app.add_subcommand("eval", "NoC evaluation with the corrective protocol");
    add_common(eval, eval_opts);

    CommonOptions curve_opts;
    int n_max = 10;
    auto* curve = app.add_subcommand("curve", "mean IoU after n clicks");
    add_common(curve, curve_opts);
    curve->add_option("--n-max", n_max)->check(CLI::Range(2, 1000));

    std::string crop_dataset, ratios_text = "1.0:1.9:0.05", crop_out;
    double pair_ratio = 0.95;
    std::uint64_t crop_seed = 42;
    int crop_workers = 0;
    auto* crop = app.add_subcommand("crop-analysis", "mask loss from cropping at each expansion ratio");
    crop->add_option("--dataset", crop_dataset)->required();
    crop->add_option("--ratios", ratios_text, "lo:hi:step");
    crop->add_option("--pair-ratio", pair_ratio, "fixed initial-pair distance ratio")->check(CLI::Range(0.01, 1.0));
    crop->add_option("--seed", crop_seed);
    crop->add_option("--workers", crop_workers);
    crop->add_option("--out", crop_out, "CSV path (stdout if omitted)");

    int fx_count = 200;
    std::uint64_t fx_seed = 7;
    std::string fx_out, fx_suite = "mixed";
    auto* fixtures = app.add_subcommand("fixtures", "write a synthetic dataset");
    fixtures->add_option("--count", fx_count)->check(CLI::PositiveNumber);
    fixtures->add_option("--out", fx_out)->required();
    fixtures->add_option("--seed", fx_seed);
    fixtures->add_option("--suite", fx_suite)->check(CLI::IsMember({"mixed", "convex"}));

    SessionConfig scfg;
    ServerOptions sopts;
    int port = 8080, ttl = 1800;
    std::string host = "0.0.0.0", static_dir, snapshot_dir;
    auto* serve = app.add_subcommand("serve", "HTTP session service");
    serve->add_option("--port", port);
    serve->add_option("--host", host);
    serve->add_option("--predictor", scfg.predictor);
    serve->add_option("--session-ttl", ttl, "idle seconds before a session expires")->check(CLI::PositiveNumber);
    serve->add_option("--max-image-pixels", scfg.max_image_pixels);
    serve->add_option("--max-external-calls", scfg.max_external_calls);
    serve->add_option("--queue-limit", scfg.external_queue_limit);
    serve->add_option("--cors-origin", sopts.cors_origin);
    serve->add_option("--static", static_dir, "directory served at /");
    serve->add_option("--snapshot-dir", snapshot_dir, "dump sessions here on shutdown");

    CLI11_PARSE(app, argc, argv);
    spdlog::set_default_logger(spdlog::stderr_color_mt("contourseg"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_pattern("%^%l%$: %v");

    try {
        if (*fixtures) {
            const auto suite = fx_suite == "convex" ? FixtureSuite::Convex : FixtureSuite::Mixed;
            write_fixtures(generate_fixtures(fx_count, fx_seed, suite), fx_out);
            spdlog::info("wrote {} fixtures to {}", fx_count, fx_out);
            return 0;
        }
        if (*crop) {
            const Dataset ds = load_dataset(crop_dataset);
            PairSamplingParams pair;
            pair.ratio_mean = pair_ratio;
            pair.ratio_std = 0.0;
            pair.ratio_low = std::min(pair.ratio_low, pair_ratio);
            const std::vector<double> ratios = parse_ratio_range(ratios_text);
            const auto points = crop_loss_analysis(ds, ratios, pair, crop_seed, CropParams{}, crop_workers);
            std::string csv = "ratio,mean_loss\n";
            for (const CropLossPoint& p : points) {
                csv += fmt::format("{:.4f},{}\n", p.ratio, p.mean_loss);
            }
            if (crop_out.empty()) {
                std::cout << csv;
            } else {
                write_file(crop_out, csv);
            }
            return 0;
        }
        if (*eval || *curve) {
            const CommonOptions& o = *eval ? eval_opts : curve_opts;
            const Dataset ds = load_dataset(o.dataset);
            const auto predictor = make_predictor(o.predictor, std::chrono::milliseconds(o.timeout_ms));
            const EvalConfig cfg = make_config(o);
            const EvalReport report =
                *eval ? evaluate_noc(ds, *predictor, cfg) : evaluate_miou_curve(ds, *predictor, cfg, n_max);
            return emit(report, o);
        }
        if (*serve) {
            scfg.ttl = std::chrono::seconds(ttl);
            if (!static_dir.empty()) {
                sopts.static_dir = static_dir;
            }
            return run_serve(port, host, scfg, sopts, snapshot_dir);
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        if (e.code() == ErrorCode::CorruptInstance) {
            return kExitCorrupt;
        }
        return is_predictor_error(e.code()) ? kExitPredictor : 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
