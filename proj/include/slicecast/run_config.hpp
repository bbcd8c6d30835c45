#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "slicecast/model.hpp"
#include "slicecast/policy.hpp"
#include "slicecast/train.hpp"

namespace slicecast {

// One document drives every subcommand; flags may override single fields and
// the SLICECAST_OUTPUT_DIR environment variable may override the output dir.
struct RunConfig {
    std::string topology_path;
    std::string demand_dir;
    std::string output_dir = "out";

    std::string fill_policy = "linear";
    bool daily_aggregate = true;

    double merge_threshold = 1.0;

    ModelConfig model;
    SplitSpec split_spec;
    TrainOptions train_opts;
    PolicyRules policy_rules;

    double replay_speedup = 86400.0;  // one day of frame time per wall second
    std::string bind_address = "127.0.0.1";
    int port = 9108;

    std::uint64_t seed = 42;  // master seed; model and trainer seeds follow it

    void validate() const;
};

nlohmann::ordered_json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::ordered_json& j);
RunConfig load_run_config(const std::string& path);

// FNV-1a over the canonical JSON form; embedded in every artifact.
std::uint64_t config_hash(const RunConfig& c);
std::string config_hash_hex(const RunConfig& c);

}  // namespace slicecast
