#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "slicecast/model.hpp"
#include "slicecast/preprocess.hpp"
#include "slicecast/series_frame.hpp"

namespace slicecast {

struct SplitSpec {
    double train_fraction = 0.6;
    double val_fraction = 0.2;
    double test_fraction = 0.2;

    void validate() const;  // fractions positive, sum to 1
};

struct SplitFrames {
    SeriesFrame train;
    SeriesFrame val;
    SeriesFrame test;
};

// Contiguous chronological split; val/test row counts are floor proportions
// and the remainder goes to train.
SplitFrames split(const SeriesFrame& frame, const SplitSpec& spec);

// Guard: every training timestamp must precede every test timestamp.
void assert_no_leakage(const SeriesFrame& train, const SeriesFrame& test);

struct WindowSample {
    Matrix context;                              // (L × C)
    Matrix target;                               // (H × C)
    std::vector<std::int64_t> context_timestamps;
    std::vector<std::int64_t> target_timestamps;
};

// Sliding windows: with stride 1 the count is rows − L − H + 1. The target
// begins one step after the context ends. Windows are built per split frame,
// so they never straddle a boundary.
std::vector<WindowSample> make_windows(const SeriesFrame& frame, int input_len, int horizon,
                                       int stride = 1);

struct TrainOptions {
    int epochs = 100;
    int batch = 16;
    double lr = 1e-3;
    int patience = 10;   // early stop after this many non-improving epochs
    std::uint64_t seed = 42;
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = -1;        // -1 when no epoch ran
    double best_val_mse = 0.0;
    bool stopped_early = false;
};

// Adam-driven minimization of scaled-space MSE with early stopping on the
// validation set; the parameters left on the model are those of the best
// validation epoch. Deterministic given (options.seed, model seed, data).
// Throws on divergence (non-finite loss).
TrainResult train(ForecastModel& model, const std::vector<WindowSample>& train_windows,
                  const std::vector<WindowSample>& val_windows, const TrainOptions& options);

struct Metrics {
    double mse_scaled = 0.0;
    double mae_scaled = 0.0;
    double mse_original = 0.0;
    double mae_original = 0.0;
    double peak_ratio = 0.0;  // mean over windows of max(pred)/max(target), original units
};

// Scores a model over test windows. The windows hold scaled values; original
// units are recovered with the scaler for the second metric set.
Metrics evaluate(ForecastModel& model, const std::vector<WindowSample>& windows,
                 const ScalerParams& scaler);

// FNV-1a over the raw parameter bytes in registry order.
std::uint64_t parameter_hash(const ForecastModel& model);

nlohmann::ordered_json train_result_to_json(const TrainResult& r);
nlohmann::ordered_json metrics_to_json(const Metrics& m);
std::string metrics_to_csv(const std::vector<std::pair<std::string, Metrics>>& per_model);

}  // namespace slicecast
