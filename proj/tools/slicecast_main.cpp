#include <atomic>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/pipeline.hpp"
#include "slicecast/run_config.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) {
    g_stop.store(true);
}

struct Overrides {
    std::optional<std::string> topology;
    std::optional<std::string> demand_dir;
    std::optional<std::string> output_dir;
    std::optional<std::string> fill_policy;
    std::optional<double> merge_threshold;
    std::optional<int> input_len;
    std::optional<int> label_len;
    std::optional<int> horizon;
    std::optional<int> epochs;
    std::optional<int> batch;
    std::optional<double> lr;
    std::optional<int> patience;
    std::optional<std::uint64_t> seed;
    std::optional<double> speedup;
    std::optional<std::string> bind_address;
    std::optional<int> port;
};

void add_common_flags(CLI::App* cmd, std::string& config_path, Overrides& o) {
    cmd->add_option("-c,--config", config_path, "Run config JSON file")->required();
    cmd->add_option("--topology", o.topology, "Topology file (overrides config)");
    cmd->add_option("--demand-dir", o.demand_dir, "Demand snapshot directory (overrides config)");
    cmd->add_option("--output-dir", o.output_dir, "Artifact directory (overrides config)");
    cmd->add_option("--fill-policy", o.fill_policy, "Gap fill policy: linear|previous|zero");
    cmd->add_option("--merge-threshold", o.merge_threshold, "Slice Jaccard merge threshold");
    cmd->add_option("--input-len", o.input_len, "Model context length");
    cmd->add_option("--label-len", o.label_len, "Decoder warm-up length");
    cmd->add_option("--horizon", o.horizon, "Forecast horizon");
    cmd->add_option("--epochs", o.epochs, "Training epochs");
    cmd->add_option("--batch", o.batch, "Training batch size");
    cmd->add_option("--lr", o.lr, "Learning rate");
    cmd->add_option("--patience", o.patience, "Early-stopping patience");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--speedup", o.speedup, "Replay speedup factor");
    cmd->add_option("--bind-address", o.bind_address, "Replay bind address");
    cmd->add_option("--port", o.port, "Replay port (0 picks a free one)");
}

slicecast::RunConfig resolve(const std::string& config_path, const Overrides& o) {
    slicecast::RunConfig c = slicecast::load_run_config(config_path);
    if (o.topology) c.topology_path = *o.topology;
    if (o.demand_dir) c.demand_dir = *o.demand_dir;
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.fill_policy) c.fill_policy = *o.fill_policy;
    if (o.merge_threshold) c.merge_threshold = *o.merge_threshold;
    if (o.input_len) c.model.input_len = *o.input_len;
    if (o.label_len) c.model.label_len = *o.label_len;
    if (o.horizon) c.model.horizon = *o.horizon;
    if (o.epochs) c.train_opts.epochs = *o.epochs;
    if (o.batch) c.train_opts.batch = *o.batch;
    if (o.lr) c.train_opts.lr = *o.lr;
    if (o.patience) c.train_opts.patience = *o.patience;
    if (o.seed) {
        c.seed = *o.seed;
        c.model.seed = *o.seed;
        c.train_opts.seed = *o.seed;
    }
    if (o.speedup) c.replay_speedup = *o.speedup;
    if (o.bind_address) c.bind_address = *o.bind_address;
    if (o.port) c.port = *o.port;
    if (const char* env = std::getenv("SLICECAST_OUTPUT_DIR")) {
        if (*env != '\0') c.output_dir = env;
    }
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slice-level traffic forecasting and policy toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides o;
    std::string train_model = "autoformer";
    std::string predict_model = "autoformer";
    std::string policy_format = "json";
    bool force = false;

    CLI::App* ingest = app.add_subcommand("ingest", "Parse topology and demand snapshots");
    add_common_flags(ingest, config_path, o);
    CLI::App* slices = app.add_subcommand("slices", "Route demands and form slices");
    add_common_flags(slices, config_path, o);
    CLI::App* train = app.add_subcommand("train", "Train a forecaster on the slice frame");
    add_common_flags(train, config_path, o);
    train->add_option("--model", train_model, "Model to train: autoformer|pointwise");
    CLI::App* predict = app.add_subcommand("predict", "Forecast beyond the end of the frame");
    add_common_flags(predict, config_path, o);
    predict->add_option("--model", predict_model,
                        "Model to load: autoformer|pointwise|persistence");
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score models on the test split");
    add_common_flags(evaluate, config_path, o);
    evaluate->add_flag("--force", force, "Ignore config-hash mismatches");
    CLI::App* policy = app.add_subcommand("policy", "Generate scaling actions from forecasts");
    add_common_flags(policy, config_path, o);
    policy->add_option("--format", policy_format, "Rendering: json|table");
    CLI::App* replay = app.add_subcommand("replay", "Serve the slice frame as a scrape target");
    add_common_flags(replay, config_path, o);
    CLI::App* pipeline = app.add_subcommand("pipeline", "Run every stage in order");
    add_common_flags(pipeline, config_path, o);

    CLI11_PARSE(app, argc, argv);

    try {
        const slicecast::RunConfig config = resolve(config_path, o);
        if (ingest->parsed()) slicecast::cmd_ingest(config);
        if (slices->parsed()) slicecast::cmd_slices(config);
        if (train->parsed()) slicecast::cmd_train(config, train_model);
        if (predict->parsed()) slicecast::cmd_predict(config, predict_model);
        if (evaluate->parsed()) slicecast::cmd_evaluate(config, force);
        if (policy->parsed()) slicecast::cmd_policy(config, policy_format);
        if (replay->parsed()) {
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            slicecast::cmd_replay(config, g_stop);
        }
        if (pipeline->parsed()) slicecast::cmd_pipeline(config);
    } catch (const slicecast::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const slicecast::ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
