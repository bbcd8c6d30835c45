#pragma once

#include <atomic>
#include <string>

#include "slicecast/run_config.hpp"

namespace slicecast {

// Subcommand bodies. Each reads its upstream artifacts from the configured
// output dir, writes its own artifacts (every file embeds the config hash),
// and prints a one-line summary to stdout. Missing upstream artifacts raise
// ValidationError naming the subcommand that produces them.
void cmd_ingest(const RunConfig& config);
void cmd_slices(const RunConfig& config);
void cmd_train(const RunConfig& config, const std::string& model_tag);
void cmd_predict(const RunConfig& config, const std::string& model_tag);
void cmd_evaluate(const RunConfig& config, bool force);
void cmd_policy(const RunConfig& config, const std::string& format);
void cmd_replay(const RunConfig& config, const std::atomic<bool>& stop);
void cmd_pipeline(const RunConfig& config);

}  // namespace slicecast
