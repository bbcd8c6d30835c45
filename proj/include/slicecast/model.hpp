#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "slicecast/matrix.hpp"
#include "slicecast/rng.hpp"
#include "slicecast/tensor.hpp"

namespace slicecast {

struct ModelConfig {
    int input_len = 96;    // context steps fed to the encoder
    int label_len = 48;    // decoder warm-up overlap with the context
    int horizon = 96;      // forecast steps
    int d_model = 32;
    int n_heads = 2;
    int encoder_layers = 2;
    int decoder_layers = 1;
    int moving_avg_kernel = 25;
    double autocorr_factor = 1.0;  // top-k = floor(factor * ln(len)), min 1
    double dropout = 0.1;
    std::uint64_t seed = 42;

    void validate() const;  // throws ValidationError
    int top_k(int len) const;
};

nlohmann::ordered_json model_config_to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::ordered_json& j);

struct ForecastResult {
    std::string slice_id;
    std::int64_t issued_at = 0;
    std::vector<double> predicted;  // horizon values, original units
    std::string model_tag;
};

// Splits x into (seasonal, trend): trend = centered moving average with edge
// replication, seasonal = the remainder, constructed so seasonal + trend
// reproduces x bit-for-bit.
std::pair<nn::Tensor, nn::Tensor> series_decompose(const nn::Tensor& x, int kernel);

// The delay-selection half of the attention below: channel-averaged FFT
// cross-correlation scores for every circular delay of k against q, returning
// the top-k delay indices (k = floor(factor * ln(len)), min 1; ties resolve
// to the smaller delay).
std::vector<int> autocorr_top_delays(const nn::Tensor& q, const nn::Tensor& k, double factor);

// Delay-based attention for one head. Scores every circular delay of k
// against q via FFT cross-correlation (averaged over channels), keeps the
// top-k delays, softmax-weights them, and aggregates rolled copies of v.
// Gradients flow through the weights and the rolled values; the delay
// selection itself is treated as fixed.
nn::Tensor autocorr_attention(const nn::Tensor& q, const nn::Tensor& k, const nn::Tensor& v,
                              double factor);

// Sinusoidal position table, shape (len × d_model), no gradient.
nn::Tensor positional_encoding(int len, int d_model);

class ForecastModel {
public:
    virtual ~ForecastModel() = default;

    virtual std::string tag() const = 0;
    const ModelConfig& config() const { return config_; }
    int channels() const { return channels_; }

    // Builds a fresh computation graph over the current parameters.
    // `context` is (input_len × channels), scaled space; the result is
    // (horizon × channels).
    virtual nn::Tensor forward(const nn::Tensor& context, bool training, Rng& rng) = 0;

    // Inference wrapper: no dropout, plain matrices in and out.
    Matrix predict(const Matrix& context);

    const std::vector<std::pair<std::string, nn::Tensor>>& parameters() const {
        return params_;
    }
    std::size_t parameter_count() const;

protected:
    ForecastModel(ModelConfig config, int channels);

    // Registers a parameter under a unique name; order is part of the
    // checkpoint contract.
    nn::Tensor param(const std::string& name, int rows, int cols, double init_scale, Rng& rng);
    nn::Tensor param_const(const std::string& name, int rows, int cols, double fill);

    ModelConfig config_;
    int channels_;
    std::vector<std::pair<std::string, nn::Tensor>> params_;
};

// Decomposition forecaster: auto-correlation attention over seasonal
// components with per-layer trend accumulation.
std::unique_ptr<ForecastModel> make_autoformer(const ModelConfig& config, int channels);

// Point-wise scaled-dot-product transformer baseline (no decomposition).
std::unique_ptr<ForecastModel> make_pointwise(const ModelConfig& config, int channels);

// Repeats the last context row across the horizon; no parameters.
std::unique_ptr<ForecastModel> make_persistence(const ModelConfig& config, int channels);

// Factory keyed by tag: "autoformer" | "pointwise" | "persistence".
std::unique_ptr<ForecastModel> make_model(const std::string& tag, const ModelConfig& config,
                                          int channels);

// Checkpoint round-trip: `base` names a pair of files base.json (manifest)
// + base.bin (little-endian float64 parameter blob, manifest order).
void save_checkpoint(const std::string& base, const ForecastModel& model,
                     std::uint64_t config_hash);
struct LoadedCheckpoint {
    std::unique_ptr<ForecastModel> model;
    std::uint64_t config_hash = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& base);

}  // namespace slicecast
