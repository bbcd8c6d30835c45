#include "slicecast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/ingest.hpp"
#include "slicecast/pipeline.hpp"
#include "slicecast/policy.hpp"
#include "slicecast/preprocess.hpp"
#include "slicecast/replay.hpp"
#include "slicecast/routing.hpp"
#include "slicecast/series_frame.hpp"
#include "slicecast/slicing.hpp"
#include "slicecast/train.hpp"

namespace slicecast {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
}

std::string artifact(const RunConfig& c, const std::string& name) {
    return (fs::path(c.output_dir) / name).string();
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path)) {
        throw ValidationError("missing artifact '" + path + "'; run `slicecast " + producer +
                              "` first");
    }
}

nlohmann::ordered_json read_json_artifact(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read '" + path + "'");
    return nlohmann::ordered_json::parse(in);
}

void check_artifact_hash(const std::string& path, const std::string& found,
                         const std::string& expected, bool force) {
    if (found == expected) return;
    const std::string msg = "artifact '" + path + "' was produced by config " + found +
                            " but the current config hashes to " + expected;
    if (!force) throw ValidationError(msg + "; rerun upstream steps or pass --force");
    std::cout << "warning: " << msg << " (continuing under --force)\n";
}

// The frame CSV begins with "# config_hash=<hex>"; returns the hex.
std::string csv_hash(const std::string& text) {
    const std::string prefix = "# config_hash=";
    if (text.rfind(prefix, 0) != 0) return "";
    const auto end = text.find('\n');
    return text.substr(prefix.size(), end - prefix.size());
}

struct Prepared {
    SeriesFrame slice_frame;     // original units
    SplitFrames scaled;          // transformed splits
    SeriesFrame scaled_full;     // whole frame transformed
    ScalerParams scaler;         // fit on the training rows only
};

Prepared prepare(const RunConfig& config, const SeriesFrame& slice_frame) {
    Prepared p;
    p.slice_frame = slice_frame;
    const std::size_t min_rows = static_cast<std::size_t>(config.model.input_len) +
                                 static_cast<std::size_t>(config.model.horizon) + 3;
    if (slice_frame.rows() < min_rows) {
        throw ValidationError("slice frame has " + std::to_string(slice_frame.rows()) +
                              " rows; need at least " + std::to_string(min_rows) +
                              " for input_len + horizon + 3");
    }
    SplitFrames raw = split(slice_frame, config.split_spec);
    assert_no_leakage(raw.train, raw.test);
    p.scaler = fit_scaler(slice_frame, 0, raw.train.rows());
    p.scaled.train = transform(raw.train, p.scaler);
    p.scaled.val = transform(raw.val, p.scaler);
    p.scaled.test = transform(raw.test, p.scaler);
    p.scaled_full = transform(slice_frame, p.scaler);
    return p;
}

SeriesFrame load_slice_frame(const RunConfig& config, bool check_hash, bool force) {
    const std::string path = artifact(config, "slice_frame.csv");
    require_artifact(path, "slices");
    const std::string text = read_file(path);
    if (check_hash) {
        check_artifact_hash(path, csv_hash(text), config_hash_hex(config), force);
    }
    return frame_from_csv(text);
}

std::string checkpoint_base(const RunConfig& config, const std::string& tag) {
    return artifact(config, "checkpoint_" + tag);
}

}  // namespace

void cmd_ingest(const RunConfig& config) {
    const std::string hash = config_hash_hex(config);
    if (!fs::exists(config.topology_path)) {
        throw ValidationError("topology file '" + config.topology_path + "' does not exist");
    }
    if (!fs::is_directory(config.demand_dir)) {
        throw ValidationError("demand directory '" + config.demand_dir + "' does not exist");
    }

    ParseStats stats;
    Topology topo = parse_topology(read_file(config.topology_path), &stats);

    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(config.demand_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw ValidationError("demand directory '" + config.demand_dir + "' has no .txt files");
    }

    std::vector<std::string> documents;
    std::vector<std::int64_t> timestamps;
    for (const auto& f : files) {
        const auto ts = timestamp_from_filename(f);
        if (!ts) {
            ++stats.warnings;
            stats.messages.push_back("skipping '" + f + "': no YYYYMMDD-HHMM timestamp in name");
            continue;
        }
        documents.push_back(read_file(f));
        timestamps.push_back(*ts);
    }
    std::vector<DemandSeries> series = parse_demand_archive(documents, timestamps, &topo, &stats);

    nlohmann::ordered_json tj = topology_to_json(topo);
    tj["config_hash"] = hash;
    write_file(artifact(config, "topology.json"), tj.dump(2) + "\n");

    nlohmann::ordered_json dj = demands_to_json(series);
    dj["config_hash"] = hash;
    write_file(artifact(config, "demands.json"), dj.dump(2) + "\n");

    std::printf("ingest: %zu nodes, %zu links, %zu demand series over %zu snapshots, "
                "%d warnings -> %s\n",
                topo.nodes.size(), topo.links.size(), series.size(), documents.size(),
                stats.warnings, artifact(config, "topology.json").c_str());
}

void cmd_slices(const RunConfig& config) {
    const std::string hash = config_hash_hex(config);
    require_artifact(artifact(config, "topology.json"), "ingest");
    require_artifact(artifact(config, "demands.json"), "ingest");

    Topology topo = topology_from_json(read_json_artifact(artifact(config, "topology.json")));
    std::vector<DemandSeries> series =
        demands_from_json(read_json_artifact(artifact(config, "demands.json")));

    RoutingResult routing = route_all(topo, series);
    if (!routing.unreachable.empty()) {
        std::printf("slices: %zu demand pairs unreachable and skipped\n",
                    routing.unreachable.size());
    }
    std::vector<SliceDef> slices = form_slices(routing.routes, topo, config.merge_threshold);

    // Paper step order: per-demand daily maxima first, slice sums second.
    SeriesFrame demand_frame = clean(align(series), fill_policy_from_string(config.fill_policy));
    DailyMaxStats day_stats;
    if (config.daily_aggregate) demand_frame = daily_max(demand_frame, &day_stats);
    SeriesFrame frame = slice_series(slices, demand_frame);

    nlohmann::ordered_json sj = slices_to_json(slices);
    sj["config_hash"] = hash;
    write_file(artifact(config, "slices.json"), sj.dump(2) + "\n");
    write_file(artifact(config, "slice_frame.csv"),
               frame_to_csv(frame, {"config_hash=" + hash}));
    write_file(artifact(config, "topology.dot"),
               "// config_hash=" + hash + "\n" + topology_to_dot(topo, slices));

    std::printf("slices: %zu slices from %zu routes (threshold %g), %zu frame rows -> %s\n",
                slices.size(), routing.routes.size(), config.merge_threshold, frame.rows(),
                artifact(config, "slices.json").c_str());
}

void cmd_train(const RunConfig& config, const std::string& model_tag) {
    const std::string hash = config_hash_hex(config);
    if (model_tag == "persistence") {
        throw ValidationError("train: the persistence baseline has no trainable parameters");
    }
    SeriesFrame slice_frame = load_slice_frame(config, false, false);
    Prepared p = prepare(config, slice_frame);

    auto model = make_model(model_tag, config.model, static_cast<int>(slice_frame.cols()));
    auto train_windows =
        make_windows(p.scaled.train, config.model.input_len, config.model.horizon);
    auto val_windows = make_windows(p.scaled.val, config.model.input_len, config.model.horizon);
    if (train_windows.empty() || val_windows.empty()) {
        throw ValidationError("train: not enough rows to build train/val windows; "
                              "shrink input_len/horizon or add data");
    }

    TrainResult result = train(*model, train_windows, val_windows, config.train_opts);

    save_checkpoint(checkpoint_base(config, model_tag), *model, config_hash(config));
    nlohmann::ordered_json hj = train_result_to_json(result);
    hj["config_hash"] = hash;
    hj["model"] = model_tag;
    write_file(artifact(config, "train_history_" + model_tag + ".json"), hj.dump(2) + "\n");

    std::printf("train[%s]: %zu epochs (best %d, val MSE %.6g%s), %zu parameters -> %s.json\n",
                model_tag.c_str(), result.history.size(), result.best_epoch, result.best_val_mse,
                result.stopped_early ? ", early stop" : "", model->parameter_count(),
                checkpoint_base(config, model_tag).c_str());
}

void cmd_predict(const RunConfig& config, const std::string& model_tag) {
    const std::string hash = config_hash_hex(config);
    SeriesFrame slice_frame = load_slice_frame(config, false, false);
    Prepared p = prepare(config, slice_frame);

    std::unique_ptr<ForecastModel> model;
    if (model_tag == "persistence") {
        model = make_persistence(config.model, static_cast<int>(slice_frame.cols()));
    } else {
        const std::string base = checkpoint_base(config, model_tag);
        require_artifact(base + ".json", "train");
        model = load_checkpoint(base).model;
    }

    const int L = config.model.input_len;
    const std::size_t rows = p.scaled_full.rows();
    const Matrix context = p.scaled_full.values.row_slice(rows - L, rows);
    const Matrix scaled_pred = model->predict(context);

    const std::int64_t cadence =
        slice_frame.rows() > 1 ? slice_frame.timestamps[1] - slice_frame.timestamps[0] : 86400;
    const std::int64_t issued = slice_frame.timestamps.back() + cadence;

    nlohmann::ordered_json fj;
    fj["schema"] = "slicecast.forecasts/1";
    fj["config_hash"] = hash;
    fj["model"] = model->tag();
    fj["issued_at"] = format_utc(issued);
    fj["horizon"] = config.model.horizon;
    fj["forecasts"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < slice_frame.cols(); ++c) {
        const double denom = std::max(p.scaler.stddev[c], p.scaler.epsilon);
        std::vector<double> values;
        values.reserve(scaled_pred.rows);
        for (std::size_t r = 0; r < scaled_pred.rows; ++r) {
            values.push_back(scaled_pred.at(r, c) * denom + p.scaler.mean[c]);
        }
        fj["forecasts"].push_back({{"slice", slice_frame.columns[c]},
                                   {"issued_at", format_utc(issued)},
                                   {"values", values}});
    }
    write_file(artifact(config, "forecasts.json"), fj.dump(2) + "\n");

    std::printf("predict[%s]: %d-step forecast for %zu slices issued at %s -> %s\n",
                model->tag().c_str(), config.model.horizon, slice_frame.cols(),
                format_utc(issued).c_str(), artifact(config, "forecasts.json").c_str());
}

void cmd_evaluate(const RunConfig& config, bool force) {
    const std::string hash = config_hash_hex(config);
    SeriesFrame slice_frame = load_slice_frame(config, true, force);
    Prepared p = prepare(config, slice_frame);

    const int L = config.model.input_len;
    const int H = config.model.horizon;
    auto test_windows = make_windows(p.scaled.test, L, H);
    if (test_windows.empty()) {
        throw ValidationError("evaluate: the test split is too short for one window");
    }

    std::vector<std::pair<std::string, Metrics>> per_model;
    std::vector<std::pair<std::string, std::unique_ptr<ForecastModel>>> models;
    for (const std::string tag : {"autoformer", "pointwise"}) {
        const std::string base = checkpoint_base(config, tag);
        require_artifact(base + ".json", "train");
        LoadedCheckpoint loaded = load_checkpoint(base);
        char found[20];
        std::snprintf(found, sizeof(found), "%016llx",
                      static_cast<unsigned long long>(loaded.config_hash));
        check_artifact_hash(base + ".json", found, hash, force);
        models.emplace_back(tag, std::move(loaded.model));
    }
    models.emplace_back("persistence",
                        make_persistence(config.model, static_cast<int>(slice_frame.cols())));

    for (auto& [tag, model] : models) {
        per_model.emplace_back(tag, evaluate(*model, test_windows, p.scaler));
    }

    nlohmann::ordered_json mj;
    mj["schema"] = "slicecast.metrics/1";
    mj["config_hash"] = hash;
    mj["horizon"] = H;
    mj["test_windows"] = test_windows.size();
    mj["models"] = nlohmann::ordered_json::object();
    for (const auto& [tag, m] : per_model) mj["models"][tag] = metrics_to_json(m);
    write_file(artifact(config, "metrics.json"), mj.dump(2) + "\n");
    write_file(artifact(config, "metrics.csv"),
               "# config_hash=" + hash + "\n" + metrics_to_csv(per_model));

    // Plot-ready dump over non-overlapping test windows.
    auto plot_windows = make_windows(p.scaled.test, L, H, H);
    std::string csv = "# config_hash=" + hash + "\ntimestamp,slice,model,actual,predicted\n";
    char line[256];
    for (auto& [tag, model] : models) {
        for (const auto& w : plot_windows) {
            const Matrix pred = model->predict(w.context);
            for (std::size_t r = 0; r < pred.rows; ++r) {
                for (std::size_t c = 0; c < pred.cols; ++c) {
                    const double denom = std::max(p.scaler.stddev[c], p.scaler.epsilon);
                    const double actual = w.target.at(r, c) * denom + p.scaler.mean[c];
                    const double predicted = pred.at(r, c) * denom + p.scaler.mean[c];
                    std::snprintf(line, sizeof(line), "%s,%s,%s,%.17g,%.17g\n",
                                  format_utc(w.target_timestamps[r]).c_str(),
                                  slice_frame.columns[c].c_str(), tag.c_str(), actual, predicted);
                    csv += line;
                }
            }
        }
    }
    write_file(artifact(config, "predictions.csv"), csv);

    std::string summary = "evaluate:";
    for (const auto& [tag, m] : per_model) {
        char part[120];
        std::snprintf(part, sizeof(part), " %s MSE %.6g peak_ratio %.4f;", tag.c_str(),
                      m.mse_scaled, m.peak_ratio);
        summary += part;
    }
    std::printf("%s %zu test windows -> %s\n", summary.c_str(), test_windows.size(),
                artifact(config, "metrics.json").c_str());
}

void cmd_policy(const RunConfig& config, const std::string& format) {
    const std::string hash = config_hash_hex(config);
    require_artifact(artifact(config, "forecasts.json"), "predict");
    require_artifact(artifact(config, "slices.json"), "slices");

    nlohmann::ordered_json fj = read_json_artifact(artifact(config, "forecasts.json"));
    nlohmann::ordered_json sj = read_json_artifact(artifact(config, "slices.json"));
    std::vector<SliceDef> slices = slices_from_json(sj);

    std::vector<ForecastResult> forecasts;
    for (const auto& e : fj.at("forecasts")) {
        ForecastResult r;
        r.slice_id = e.at("slice").get<std::string>();
        r.issued_at = parse_utc(e.at("issued_at").get<std::string>());
        r.predicted = e.at("values").get<std::vector<double>>();
        r.model_tag = fj.value("model", "");
        forecasts.push_back(std::move(r));
    }

    // Hysteresis state survives across invocations through a state artifact;
    // a config change resets it.
    PolicyHistory history;
    const std::string history_path = artifact(config, "policy_history.json");
    if (fs::exists(history_path)) {
        nlohmann::ordered_json hj = read_json_artifact(history_path);
        if (hj.value("config_hash", "") == hash) {
            for (const auto& [k, v] : hj.at("consecutive_low").items()) {
                history.consecutive_low[k] = v.get<int>();
            }
        }
    }

    std::vector<PolicyAction> actions =
        generate_policies(forecasts, slices, config.policy_rules, history);

    nlohmann::ordered_json pj =
        nlohmann::ordered_json::parse(render_policy(actions, "json"));
    pj["config_hash"] = hash;
    write_file(artifact(config, "policy.json"), pj.dump(2) + "\n");

    nlohmann::ordered_json hj;
    hj["schema"] = "slicecast.policy_history/1";
    hj["config_hash"] = hash;
    hj["consecutive_low"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : history.consecutive_low) hj["consecutive_low"][k] = v;
    write_file(history_path, hj.dump(2) + "\n");

    if (format == "table") std::fputs(render_policy(actions, format).c_str(), stdout);

    std::size_t up = 0, down = 0, holds = 0;
    for (const auto& a : actions) {
        if (a.action == PolicyVerb::ScaleUp) ++up;
        else if (a.action == PolicyVerb::ScaleDown) ++down;
        else ++holds;
    }
    std::printf("policy: %zu actions (%zu scale-up, %zu scale-down, %zu hold) -> %s\n",
                actions.size(), up, down, holds, artifact(config, "policy.json").c_str());
}

void cmd_replay(const RunConfig& config, const std::atomic<bool>& stop) {
    SeriesFrame frame = load_slice_frame(config, false, false);
    ReplayServer server(std::move(frame), config.replay_speedup);
    server.start(config.bind_address, config.port);
    std::printf("replay: serving http://%s:%d/metrics at %gx speed (ctrl-c to stop)\n",
                config.bind_address.c_str(), server.port(), config.replay_speedup);
    std::fflush(stdout);
    while (!stop.load() && server.running()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    std::printf("replay: stopped\n");
}

void cmd_pipeline(const RunConfig& config) {
    cmd_ingest(config);
    cmd_slices(config);
    cmd_train(config, "autoformer");
    cmd_train(config, "pointwise");
    cmd_predict(config, "autoformer");
    cmd_evaluate(config, false);
    cmd_policy(config, "json");
    std::printf("pipeline: all stages complete (config %s)\n", config_hash_hex(config).c_str());
}

}  // namespace slicecast
