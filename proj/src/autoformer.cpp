#include <cmath>
#include <string>
#include <vector>

#include "model_blocks.hpp"
#include "slicecast/errors.hpp"
#include "slicecast/model.hpp"

namespace slicecast {

using nn::Tensor;

namespace {

double xavier(int rows, int cols) {
    return std::sqrt(6.0 / static_cast<double>(rows + cols));
}

class AutoformerModel final : public ForecastModel {
public:
    AutoformerModel(const ModelConfig& config, int channels) : ForecastModel(config, channels) {
        Rng rng(config_.seed);
        const int d = config_.d_model;
        const int dff = 2 * d;
        const int c = channels_;

        enc_embed_w_ = param("enc.embed.w", c, d, xavier(c, d), rng);
        enc_embed_b_ = param_const("enc.embed.b", 1, d, 0.0);
        dec_embed_w_ = param("dec.embed.w", c, d, xavier(c, d), rng);
        dec_embed_b_ = param_const("dec.embed.b", 1, d, 0.0);

        for (int i = 0; i < config_.encoder_layers; ++i) {
            const std::string p = "enc." + std::to_string(i) + ".";
            EncLayer l;
            l.wq = param(p + "attn.wq", d, d, xavier(d, d), rng);
            l.wk = param(p + "attn.wk", d, d, xavier(d, d), rng);
            l.wv = param(p + "attn.wv", d, d, xavier(d, d), rng);
            l.wo = param(p + "attn.wo", d, d, xavier(d, d), rng);
            l.w1 = param(p + "ffn.w1", d, dff, xavier(d, dff), rng);
            l.b1 = param_const(p + "ffn.b1", 1, dff, 0.0);
            l.w2 = param(p + "ffn.w2", dff, d, xavier(dff, d), rng);
            l.b2 = param_const(p + "ffn.b2", 1, d, 0.0);
            enc_.push_back(std::move(l));
        }
        enc_norm_g_ = param_const("enc.norm.gamma", 1, d, 1.0);
        enc_norm_b_ = param_const("enc.norm.beta", 1, d, 0.0);

        for (int i = 0; i < config_.decoder_layers; ++i) {
            const std::string p = "dec." + std::to_string(i) + ".";
            DecLayer l;
            l.wq = param(p + "self.wq", d, d, xavier(d, d), rng);
            l.wk = param(p + "self.wk", d, d, xavier(d, d), rng);
            l.wv = param(p + "self.wv", d, d, xavier(d, d), rng);
            l.wo = param(p + "self.wo", d, d, xavier(d, d), rng);
            l.cwq = param(p + "cross.wq", d, d, xavier(d, d), rng);
            l.cwk = param(p + "cross.wk", d, d, xavier(d, d), rng);
            l.cwv = param(p + "cross.wv", d, d, xavier(d, d), rng);
            l.cwo = param(p + "cross.wo", d, d, xavier(d, d), rng);
            l.w1 = param(p + "ffn.w1", d, dff, xavier(d, dff), rng);
            l.b1 = param_const(p + "ffn.b1", 1, dff, 0.0);
            l.w2 = param(p + "ffn.w2", dff, d, xavier(dff, d), rng);
            l.b2 = param_const(p + "ffn.b2", 1, d, 0.0);
            l.wtrend = param(p + "trend.w", d, c, xavier(d, c), rng);
            dec_.push_back(std::move(l));
        }
        dec_norm_g_ = param_const("dec.norm.gamma", 1, d, 1.0);
        dec_norm_b_ = param_const("dec.norm.beta", 1, d, 0.0);

        out_w_ = param("out.w", d, c, xavier(d, c), rng);
        out_b_ = param_const("out.b", 1, c, 0.0);

        pe_enc_ = positional_encoding(config_.input_len, d);
        pe_dec_ = positional_encoding(config_.label_len + config_.horizon, d);
    }

    std::string tag() const override { return "autoformer"; }

    Tensor forward(const Tensor& context, bool training, Rng& rng) override {
        if (context.rows() != config_.input_len || context.cols() != channels_) {
            throw nn::ShapeError("autoformer: context must be (input_len x channels)");
        }
        const int kernel = config_.moving_avg_kernel;
        const double p = config_.dropout;
        const double factor = config_.autocorr_factor;
        const int heads = config_.n_heads;

        auto attn = [&](const Tensor& q, const Tensor& k, const Tensor& v) {
            return autocorr_attention(q, k, v, factor);
        };

        // Encoder: attention and feed-forward sublayers, each followed by a
        // decomposition that keeps the seasonal part.
        Tensor x = nn::add(nn::add(nn::matmul(context, enc_embed_w_), enc_embed_b_), pe_enc_);
        x = nn::dropout(x, p, rng, training);
        for (const auto& l : enc_) {
            Tensor a = blocks::multi_head(x, x, x, l.wq, l.wk, l.wv, l.wo, heads, attn);
            x = series_decompose(nn::add(x, nn::dropout(a, p, rng, training)), kernel).first;
            Tensor f = blocks::feed_forward(x, l.w1, l.b1, l.w2, l.b2);
            x = series_decompose(nn::add(x, nn::dropout(f, p, rng, training)), kernel).first;
        }
        Tensor memory = nn::layer_norm(x, enc_norm_g_, enc_norm_b_);

        // Decoder warm-up: last label_len decomposed context steps, then
        // zeros (seasonal) and the context mean (trend) over the horizon.
        auto [s_ctx, t_ctx] = series_decompose(context, kernel);
        const int L = config_.input_len;
        const int label = config_.label_len;
        const int horizon = config_.horizon;
        Tensor zeros_h = Tensor::zeros(horizon, channels_);
        Tensor mean_h = nn::add(Tensor::zeros(horizon, channels_), nn::mean_axis0(context));
        Tensor dec_seasonal =
            label > 0 ? nn::concat({nn::slice(s_ctx, 0, L - label, L), zeros_h}, 0) : zeros_h;
        Tensor trend =
            label > 0 ? nn::concat({nn::slice(t_ctx, 0, L - label, L), mean_h}, 0) : mean_h;

        Tensor y = nn::add(nn::add(nn::matmul(dec_seasonal, dec_embed_w_), dec_embed_b_), pe_dec_);
        y = nn::dropout(y, p, rng, training);
        const Tensor mem = blocks::resize_rows(memory, y.rows());
        for (const auto& l : dec_) {
            Tensor a = blocks::multi_head(y, y, y, l.wq, l.wk, l.wv, l.wo, heads, attn);
            auto [y1, t1] = series_decompose(nn::add(y, nn::dropout(a, p, rng, training)), kernel);
            Tensor a2 = blocks::multi_head(y1, mem, mem, l.cwq, l.cwk, l.cwv, l.cwo, heads, attn);
            auto [y2, t2] =
                series_decompose(nn::add(y1, nn::dropout(a2, p, rng, training)), kernel);
            Tensor f = blocks::feed_forward(y2, l.w1, l.b1, l.w2, l.b2);
            auto [y3, t3] =
                series_decompose(nn::add(y2, nn::dropout(f, p, rng, training)), kernel);
            y = y3;
            Tensor tsum = nn::add(nn::add(t1, t2), t3);
            trend = nn::add(trend, nn::matmul(tsum, l.wtrend));
        }
        y = nn::layer_norm(y, dec_norm_g_, dec_norm_b_);
        Tensor seasonal_out = nn::add(nn::matmul(y, out_w_), out_b_);
        Tensor out = nn::add(seasonal_out, trend);
        return nn::slice(out, 0, y.rows() - horizon, y.rows());
    }

private:
    struct EncLayer {
        Tensor wq, wk, wv, wo, w1, b1, w2, b2;
    };
    struct DecLayer {
        Tensor wq, wk, wv, wo, cwq, cwk, cwv, cwo, w1, b1, w2, b2, wtrend;
    };

    Tensor enc_embed_w_, enc_embed_b_, dec_embed_w_, dec_embed_b_;
    std::vector<EncLayer> enc_;
    std::vector<DecLayer> dec_;
    Tensor enc_norm_g_, enc_norm_b_, dec_norm_g_, dec_norm_b_;
    Tensor out_w_, out_b_;
    Tensor pe_enc_, pe_dec_;
};

}  // namespace

std::unique_ptr<ForecastModel> make_autoformer(const ModelConfig& config, int channels) {
    return std::make_unique<AutoformerModel>(config, channels);
}

}  // namespace slicecast
