#include "slicecast/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/fft.hpp"

namespace slicecast {

using nn::Tensor;

void ModelConfig::validate() const {
    if (input_len < 4) throw ValidationError("model config: input_len must be >= 4");
    if (horizon < 1) throw ValidationError("model config: horizon must be >= 1");
    if (label_len < 0 || label_len > input_len) {
        throw ValidationError("model config: label_len must lie in [0, input_len]");
    }
    if (d_model < 1) throw ValidationError("model config: d_model must be positive");
    if (n_heads < 1 || d_model % n_heads != 0) {
        throw ValidationError("model config: n_heads must divide d_model");
    }
    if (encoder_layers < 1) throw ValidationError("model config: encoder_layers must be >= 1");
    if (decoder_layers < 1) throw ValidationError("model config: decoder_layers must be >= 1");
    if (moving_avg_kernel < 3 || moving_avg_kernel % 2 == 0) {
        throw ValidationError("model config: moving_avg_kernel must be odd and >= 3");
    }
    if (!(autocorr_factor > 0.0)) {
        throw ValidationError("model config: autocorr_factor must be positive");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ValidationError("model config: dropout must lie in [0, 1)");
    }
}

int ModelConfig::top_k(int len) const {
    const int k = static_cast<int>(std::floor(autocorr_factor * std::log(static_cast<double>(len))));
    return std::max(1, std::min(k, len));
}

nlohmann::ordered_json model_config_to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["input_len"] = c.input_len;
    j["label_len"] = c.label_len;
    j["horizon"] = c.horizon;
    j["d_model"] = c.d_model;
    j["n_heads"] = c.n_heads;
    j["encoder_layers"] = c.encoder_layers;
    j["decoder_layers"] = c.decoder_layers;
    j["moving_avg_kernel"] = c.moving_avg_kernel;
    j["autocorr_factor"] = c.autocorr_factor;
    j["dropout"] = c.dropout;
    j["seed"] = c.seed;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j) {
    ModelConfig c;
    c.input_len = j.value("input_len", c.input_len);
    c.label_len = j.value("label_len", c.input_len / 2);
    c.horizon = j.value("horizon", c.horizon);
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.moving_avg_kernel = j.value("moving_avg_kernel", c.moving_avg_kernel);
    c.autocorr_factor = j.value("autocorr_factor", c.autocorr_factor);
    c.dropout = j.value("dropout", c.dropout);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

std::pair<Tensor, Tensor> series_decompose(const Tensor& x, int kernel) {
    if (kernel < 3 || kernel % 2 == 0) {
        throw ValidationError("series_decompose: kernel must be odd and >= 3");
    }
    // trend' = moving average; then seasonal = x - trend' and trend = x -
    // seasonal, so that seasonal + trend rounds back to x exactly.
    Tensor trend0 = nn::moving_average_rows(x, kernel);
    Tensor seasonal = nn::sub(x, trend0);
    Tensor trend = nn::sub(x, seasonal);
    return {seasonal, trend};
}

std::vector<int> autocorr_top_delays(const Tensor& q, const Tensor& k, double factor) {
    const int L = q.rows();
    const int d = q.cols();
    if (k.rows() != L || k.cols() != d) {
        throw nn::ShapeError("autocorr_top_delays: q and k must share one shape");
    }
    if (L < 4) throw ValidationError("autocorr_top_delays: sequence length must be >= 4");
    if (!(factor > 0.0)) throw ValidationError("autocorr_top_delays: factor must be positive");

    // Delay scoring (no gradient): channel-averaged circular cross-correlation.
    std::vector<double> score(static_cast<std::size_t>(L), 0.0);
    for (int c = 0; c < d; ++c) {
        std::vector<double> qc(static_cast<std::size_t>(L)), kc(static_cast<std::size_t>(L));
        for (int t = 0; t < L; ++t) {
            qc[t] = q.at(t, c);
            kc[t] = k.at(t, c);
        }
        const std::vector<double> r = fft::cross_correlation(qc, kc);
        for (int tau = 0; tau < L; ++tau) score[tau] += r[tau];
    }
    for (auto& s : score) s /= static_cast<double>(d);

    const int raw_k = static_cast<int>(std::floor(factor * std::log(static_cast<double>(L))));
    const int top_k = std::max(1, std::min(raw_k, L));

    std::vector<int> delays(static_cast<std::size_t>(L));
    std::iota(delays.begin(), delays.end(), 0);
    std::stable_sort(delays.begin(), delays.end(), [&](int a, int b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;
    });
    delays.resize(static_cast<std::size_t>(top_k));
    return delays;
}

Tensor autocorr_attention(const Tensor& q, const Tensor& k, const Tensor& v, double factor) {
    const int L = q.rows();
    const int d = q.cols();
    if (k.rows() != L || k.cols() != d || v.rows() != L || v.cols() != d) {
        throw nn::ShapeError("autocorr_attention: q, k, v must share one shape");
    }
    const std::vector<int> delays = autocorr_top_delays(q, k, factor);

    // Differentiable rescoring of the selected delays: R(tau) equals the mean
    // of q ⊙ roll(k, -tau) over all elements.
    std::vector<Tensor> scores;
    scores.reserve(delays.size());
    for (int tau : delays) {
        scores.push_back(nn::mean_all(nn::mul(q, nn::roll(k, -tau, 0))));
    }
    Tensor weights = nn::softmax(nn::concat(scores, 0), 0);  // (top_k × 1)

    Tensor out;
    for (std::size_t j = 0; j < delays.size(); ++j) {
        Tensor w = nn::slice(weights, 0, static_cast<int>(j), static_cast<int>(j) + 1);
        Tensor term = nn::mul(w, nn::roll(v, -delays[j], 0));
        out = j == 0 ? term : nn::add(out, term);
    }
    return out;
}

Tensor positional_encoding(int len, int d_model) {
    std::vector<double> table(static_cast<std::size_t>(len) * d_model);
    for (int t = 0; t < len; ++t) {
        for (int i = 0; i < d_model; ++i) {
            const double angle =
                t / std::pow(10000.0, 2.0 * (i / 2) / static_cast<double>(d_model));
            table[static_cast<std::size_t>(t) * d_model + i] =
                i % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return Tensor::from(len, d_model, std::move(table));
}

ForecastModel::ForecastModel(ModelConfig config, int channels)
    : config_(std::move(config)), channels_(channels) {
    config_.validate();
    if (channels_ < 1) throw ValidationError("model: channel count must be positive");
}

Matrix ForecastModel::predict(const Matrix& context) {
    Rng unused(config_.seed);
    Tensor in = Tensor::from_matrix(context);
    return forward(in, false, unused).to_matrix();
}

std::size_t ForecastModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
}

Tensor ForecastModel::param(const std::string& name, int rows, int cols, double init_scale,
                            Rng& rng) {
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    for (auto& x : w) x = rng.uniform(-init_scale, init_scale);
    Tensor t = Tensor::from(rows, cols, std::move(w), true);
    params_.emplace_back(name, t);
    return t;
}

Tensor ForecastModel::param_const(const std::string& name, int rows, int cols, double fill) {
    Tensor t = Tensor::from(rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, fill),
                            true);
    params_.emplace_back(name, t);
    return t;
}

namespace {

class PersistenceModel final : public ForecastModel {
public:
    PersistenceModel(const ModelConfig& config, int channels) : ForecastModel(config, channels) {}

    std::string tag() const override { return "persistence"; }

    Tensor forward(const Tensor& context, bool, Rng&) override {
        if (context.cols() != channels_) {
            throw nn::ShapeError("persistence: context has wrong channel count");
        }
        Tensor last = nn::slice(context, 0, context.rows() - 1, context.rows());
        std::vector<Tensor> rows(static_cast<std::size_t>(config_.horizon), last);
        return nn::concat(rows, 0);
    }
};

}  // namespace

std::unique_ptr<ForecastModel> make_persistence(const ModelConfig& config, int channels) {
    return std::make_unique<PersistenceModel>(config, channels);
}

std::unique_ptr<ForecastModel> make_model(const std::string& tag, const ModelConfig& config,
                                          int channels) {
    if (tag == "autoformer") return make_autoformer(config, channels);
    if (tag == "pointwise") return make_pointwise(config, channels);
    if (tag == "persistence") return make_persistence(config, channels);
    throw ValidationError("unknown model tag '" + tag + "' (autoformer|pointwise|persistence)");
}

}  // namespace slicecast
