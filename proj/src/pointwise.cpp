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

// Strictly-upper-triangular -1e9 mask; added to scores before the softmax so
// a query can only attend to itself and earlier steps.
Tensor causal_mask(int len) {
    std::vector<double> m(static_cast<std::size_t>(len) * len, 0.0);
    for (int r = 0; r < len; ++r) {
        for (int c = r + 1; c < len; ++c) m[static_cast<std::size_t>(r) * len + c] = -1e9;
    }
    return Tensor::from(len, len, std::move(m));
}

class PointwiseModel final : public ForecastModel {
public:
    PointwiseModel(const ModelConfig& config, int channels) : ForecastModel(config, channels) {
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
            l.ln1_g = param_const(p + "ln1.gamma", 1, d, 1.0);
            l.ln1_b = param_const(p + "ln1.beta", 1, d, 0.0);
            l.w1 = param(p + "ffn.w1", d, dff, xavier(d, dff), rng);
            l.b1 = param_const(p + "ffn.b1", 1, dff, 0.0);
            l.w2 = param(p + "ffn.w2", dff, d, xavier(dff, d), rng);
            l.b2 = param_const(p + "ffn.b2", 1, d, 0.0);
            l.ln2_g = param_const(p + "ln2.gamma", 1, d, 1.0);
            l.ln2_b = param_const(p + "ln2.beta", 1, d, 0.0);
            enc_.push_back(std::move(l));
        }

        for (int i = 0; i < config_.decoder_layers; ++i) {
            const std::string p = "dec." + std::to_string(i) + ".";
            DecLayer l;
            l.wq = param(p + "self.wq", d, d, xavier(d, d), rng);
            l.wk = param(p + "self.wk", d, d, xavier(d, d), rng);
            l.wv = param(p + "self.wv", d, d, xavier(d, d), rng);
            l.wo = param(p + "self.wo", d, d, xavier(d, d), rng);
            l.ln1_g = param_const(p + "ln1.gamma", 1, d, 1.0);
            l.ln1_b = param_const(p + "ln1.beta", 1, d, 0.0);
            l.cwq = param(p + "cross.wq", d, d, xavier(d, d), rng);
            l.cwk = param(p + "cross.wk", d, d, xavier(d, d), rng);
            l.cwv = param(p + "cross.wv", d, d, xavier(d, d), rng);
            l.cwo = param(p + "cross.wo", d, d, xavier(d, d), rng);
            l.ln2_g = param_const(p + "ln2.gamma", 1, d, 1.0);
            l.ln2_b = param_const(p + "ln2.beta", 1, d, 0.0);
            l.w1 = param(p + "ffn.w1", d, dff, xavier(d, dff), rng);
            l.b1 = param_const(p + "ffn.b1", 1, dff, 0.0);
            l.w2 = param(p + "ffn.w2", dff, d, xavier(dff, d), rng);
            l.b2 = param_const(p + "ffn.b2", 1, d, 0.0);
            l.ln3_g = param_const(p + "ln3.gamma", 1, d, 1.0);
            l.ln3_b = param_const(p + "ln3.beta", 1, d, 0.0);
            dec_.push_back(std::move(l));
        }

        out_w_ = param("out.w", d, c, xavier(d, c), rng);
        out_b_ = param_const("out.b", 1, c, 0.0);

        pe_enc_ = positional_encoding(config_.input_len, d);
        pe_dec_ = positional_encoding(config_.label_len + config_.horizon, d);
        mask_ = causal_mask(config_.label_len + config_.horizon);
    }

    std::string tag() const override { return "pointwise"; }

    Tensor forward(const Tensor& context, bool training, Rng& rng) override {
        if (context.rows() != config_.input_len || context.cols() != channels_) {
            throw nn::ShapeError("pointwise: context must be (input_len x channels)");
        }
        const double p = config_.dropout;
        const int heads = config_.n_heads;
        const int d_head = config_.d_model / heads;
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_head));

        auto plain = [&](const Tensor& q, const Tensor& k, const Tensor& v) {
            Tensor scores = nn::scale(nn::matmul(q, nn::transpose(k)), inv_sqrt);
            return nn::matmul(nn::softmax(scores, 1), v);
        };
        auto causal = [&](const Tensor& q, const Tensor& k, const Tensor& v) {
            Tensor scores = nn::scale(nn::matmul(q, nn::transpose(k)), inv_sqrt);
            return nn::matmul(nn::softmax(nn::add(scores, mask_), 1), v);
        };

        Tensor x = nn::add(nn::add(nn::matmul(context, enc_embed_w_), enc_embed_b_), pe_enc_);
        x = nn::dropout(x, p, rng, training);
        for (const auto& l : enc_) {
            Tensor a = blocks::multi_head(x, x, x, l.wq, l.wk, l.wv, l.wo, heads, plain);
            x = nn::layer_norm(nn::add(x, nn::dropout(a, p, rng, training)), l.ln1_g, l.ln1_b);
            Tensor f = blocks::feed_forward(x, l.w1, l.b1, l.w2, l.b2);
            x = nn::layer_norm(nn::add(x, nn::dropout(f, p, rng, training)), l.ln2_g, l.ln2_b);
        }
        const Tensor memory = x;

        const int L = config_.input_len;
        const int label = config_.label_len;
        const int horizon = config_.horizon;
        Tensor zeros_h = Tensor::zeros(horizon, channels_);
        Tensor dec_in =
            label > 0 ? nn::concat({nn::slice(context, 0, L - label, L), zeros_h}, 0) : zeros_h;

        Tensor y = nn::add(nn::add(nn::matmul(dec_in, dec_embed_w_), dec_embed_b_), pe_dec_);
        y = nn::dropout(y, p, rng, training);
        for (const auto& l : dec_) {
            Tensor a = blocks::multi_head(y, y, y, l.wq, l.wk, l.wv, l.wo, heads, causal);
            y = nn::layer_norm(nn::add(y, nn::dropout(a, p, rng, training)), l.ln1_g, l.ln1_b);
            Tensor a2 =
                blocks::multi_head(y, memory, memory, l.cwq, l.cwk, l.cwv, l.cwo, heads, plain);
            y = nn::layer_norm(nn::add(y, nn::dropout(a2, p, rng, training)), l.ln2_g, l.ln2_b);
            Tensor f = blocks::feed_forward(y, l.w1, l.b1, l.w2, l.b2);
            y = nn::layer_norm(nn::add(y, nn::dropout(f, p, rng, training)), l.ln3_g, l.ln3_b);
        }
        Tensor out = nn::add(nn::matmul(y, out_w_), out_b_);
        return nn::slice(out, 0, y.rows() - horizon, y.rows());
    }

private:
    struct EncLayer {
        Tensor wq, wk, wv, wo, ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
    };
    struct DecLayer {
        Tensor wq, wk, wv, wo, ln1_g, ln1_b, cwq, cwk, cwv, cwo, ln2_g, ln2_b, w1, b1, w2, b2,
            ln3_g, ln3_b;
    };

    Tensor enc_embed_w_, enc_embed_b_, dec_embed_w_, dec_embed_b_;
    std::vector<EncLayer> enc_;
    std::vector<DecLayer> dec_;
    Tensor out_w_, out_b_;
    Tensor pe_enc_, pe_dec_, mask_;
};

}  // namespace

std::unique_ptr<ForecastModel> make_pointwise(const ModelConfig& config, int channels) {
    return std::make_unique<PointwiseModel>(config, channels);
}

}  // namespace slicecast
