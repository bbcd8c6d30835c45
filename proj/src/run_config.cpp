#include "slicecast/run_config.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/slicing.hpp"

namespace slicecast {

void RunConfig::validate() const {
    if (topology_path.empty()) throw ValidationError("config: paths.topology is required");
    if (demand_dir.empty()) throw ValidationError("config: paths.demand_dir is required");
    if (output_dir.empty()) throw ValidationError("config: paths.output_dir is required");
    fill_policy_from_string(fill_policy);  // throws with the field's vocabulary
    if (merge_threshold < 0.0 || merge_threshold > 1.0) {
        throw ValidationError("config: slicing.merge_threshold must lie in [0, 1]");
    }
    model.validate();
    split_spec.validate();
    policy_rules.validate();
    if (!(replay_speedup > 0.0)) throw ValidationError("config: replay.speedup must be positive");
    if (port < 0 || port > 65535) throw ValidationError("config: replay.port out of range");
    if (train_opts.epochs < 0) throw ValidationError("config: train.epochs must be >= 0");
    if (train_opts.batch < 1) throw ValidationError("config: train.batch must be >= 1");
    if (!(train_opts.lr > 0.0)) throw ValidationError("config: train.lr must be positive");
    if (train_opts.patience < 1) throw ValidationError("config: train.patience must be >= 1");
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["schema"] = "slicecast.config/1";
    j["paths"] = {{"topology", c.topology_path},
                  {"demand_dir", c.demand_dir},
                  {"output_dir", c.output_dir}};
    j["preprocess"] = {{"fill_policy", c.fill_policy}, {"daily_max", c.daily_aggregate}};
    j["slicing"] = {{"merge_threshold", c.merge_threshold}};
    j["model"] = model_config_to_json(c.model);
    j["split"] = {{"train", c.split_spec.train_fraction},
                  {"val", c.split_spec.val_fraction},
                  {"test", c.split_spec.test_fraction}};
    j["train"] = {{"epochs", c.train_opts.epochs},
                  {"batch", c.train_opts.batch},
                  {"lr", c.train_opts.lr},
                  {"patience", c.train_opts.patience}};
    j["policy"] = policy_rules_to_json(c.policy_rules);
    j["replay"] = {{"speedup", c.replay_speedup},
                   {"bind_address", c.bind_address},
                   {"port", c.port}};
    j["seed"] = c.seed;
    return j;
}

RunConfig run_config_from_json(const nlohmann::ordered_json& j) {
    RunConfig c;
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        c.topology_path = p.value("topology", c.topology_path);
        c.demand_dir = p.value("demand_dir", c.demand_dir);
        c.output_dir = p.value("output_dir", c.output_dir);
    }
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        c.fill_policy = p.value("fill_policy", c.fill_policy);
        c.daily_aggregate = p.value("daily_max", c.daily_aggregate);
    }
    if (j.contains("slicing")) {
        c.merge_threshold = j.at("slicing").value("merge_threshold", c.merge_threshold);
    }
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("split")) {
        const auto& s = j.at("split");
        c.split_spec.train_fraction = s.value("train", c.split_spec.train_fraction);
        c.split_spec.val_fraction = s.value("val", c.split_spec.val_fraction);
        c.split_spec.test_fraction = s.value("test", c.split_spec.test_fraction);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        c.train_opts.epochs = t.value("epochs", c.train_opts.epochs);
        c.train_opts.batch = t.value("batch", c.train_opts.batch);
        c.train_opts.lr = t.value("lr", c.train_opts.lr);
        c.train_opts.patience = t.value("patience", c.train_opts.patience);
    }
    if (j.contains("policy")) c.policy_rules = policy_rules_from_json(j.at("policy"));
    if (j.contains("replay")) {
        const auto& r = j.at("replay");
        c.replay_speedup = r.value("speedup", c.replay_speedup);
        c.bind_address = r.value("bind_address", c.bind_address);
        c.port = r.value("port", c.port);
    }
    c.seed = j.value("seed", c.seed);

    // The single master seed drives model init and the training shuffle.
    c.model.seed = c.seed;
    c.train_opts.seed = c.seed;
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file '" + path + "'");
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return run_config_from_json(j);
}

std::uint64_t config_hash(const RunConfig& c) {
    return fnv1a64(run_config_to_json(c).dump());
}

std::string config_hash_hex(const RunConfig& c) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(c)));
    return buf;
}

}  // namespace slicecast
