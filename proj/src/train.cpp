#include "slicecast/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/slicing.hpp"

namespace slicecast {

using nn::Tensor;

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0) || !(val_fraction > 0.0) || !(test_fraction > 0.0)) {
        throw ValidationError("split: all fractions must be positive");
    }
    const double sum = train_fraction + val_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split: fractions must sum to 1");
    }
}

namespace {

SeriesFrame take_rows(const SeriesFrame& frame, std::size_t begin, std::size_t end) {
    SeriesFrame out;
    out.columns = frame.columns;
    out.timestamps.assign(frame.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                          frame.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    out.values = frame.values.row_slice(begin, end);
    out.mask.assign(frame.mask.begin() + static_cast<std::ptrdiff_t>(begin * frame.cols()),
                    frame.mask.begin() + static_cast<std::ptrdiff_t>(end * frame.cols()));
    return out;
}

}  // namespace

SplitFrames split(const SeriesFrame& frame, const SplitSpec& spec) {
    spec.validate();
    const std::size_t rows = frame.rows();
    const auto val_rows = static_cast<std::size_t>(
        std::floor(static_cast<double>(rows) * spec.val_fraction));
    const auto test_rows = static_cast<std::size_t>(
        std::floor(static_cast<double>(rows) * spec.test_fraction));
    if (val_rows == 0 || test_rows == 0 || val_rows + test_rows >= rows) {
        const auto minimum = static_cast<std::size_t>(
            std::ceil(1.0 / std::min(spec.val_fraction, spec.test_fraction)));
        throw ValidationError("split: need at least " + std::to_string(minimum) +
                              " rows, got " + std::to_string(rows));
    }
    const std::size_t train_rows = rows - val_rows - test_rows;  // remainder goes to train
    SplitFrames out;
    out.train = take_rows(frame, 0, train_rows);
    out.val = take_rows(frame, train_rows, train_rows + val_rows);
    out.test = take_rows(frame, train_rows + val_rows, rows);
    return out;
}

void assert_no_leakage(const SeriesFrame& train, const SeriesFrame& test) {
    if (train.rows() == 0 || test.rows() == 0) return;
    if (train.timestamps.back() >= test.timestamps.front()) {
        throw ValidationError("data leakage: training rows reach into the test range");
    }
}

std::vector<WindowSample> make_windows(const SeriesFrame& frame, int input_len, int horizon,
                                       int stride) {
    if (input_len < 1 || horizon < 1 || stride < 1) {
        throw ValidationError("make_windows: input_len, horizon and stride must be positive");
    }
    std::vector<WindowSample> out;
    const std::size_t need = static_cast<std::size_t>(input_len) + horizon;
    for (std::size_t start = 0; start + need <= frame.rows();
         start += static_cast<std::size_t>(stride)) {
        WindowSample w;
        const std::size_t mid = start + input_len;
        w.context = frame.values.row_slice(start, mid);
        w.target = frame.values.row_slice(mid, mid + horizon);
        w.context_timestamps.assign(frame.timestamps.begin() + static_cast<std::ptrdiff_t>(start),
                                    frame.timestamps.begin() + static_cast<std::ptrdiff_t>(mid));
        w.target_timestamps.assign(
            frame.timestamps.begin() + static_cast<std::ptrdiff_t>(mid),
            frame.timestamps.begin() + static_cast<std::ptrdiff_t>(mid + horizon));
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

double mse_of(const Matrix& pred, const Matrix& target) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.a.size(); ++i) {
        const double d = pred.a[i] - target.a[i];
        sum += d * d;
    }
    return sum / static_cast<double>(pred.a.size());
}

double validation_mse(ForecastModel& model, const std::vector<WindowSample>& windows, Rng& rng) {
    double sum = 0.0;
    for (const auto& w : windows) {
        Tensor pred = model.forward(Tensor::from_matrix(w.context), false, rng);
        sum += mse_of(pred.to_matrix(), w.target);
    }
    return sum / static_cast<double>(windows.size());
}

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;
};

}  // namespace

TrainResult train(ForecastModel& model, const std::vector<WindowSample>& train_windows,
                  const std::vector<WindowSample>& val_windows, const TrainOptions& options) {
    if (options.batch < 1) throw ValidationError("train: batch must be positive");
    if (options.epochs < 0) throw ValidationError("train: epochs must be non-negative");
    if (!(options.lr > 0.0)) throw ValidationError("train: learning rate must be positive");
    if (train_windows.empty()) throw ValidationError("train: no training windows");
    if (val_windows.empty()) throw ValidationError("train: no validation windows");

    TrainResult result;
    if (options.epochs == 0) return result;

    Rng rng(options.seed);
    const auto& params = model.parameters();

    AdamState adam;
    adam.m.resize(params.size());
    adam.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam.m[i].assign(params[i].second.size(), 0.0);
        adam.v[i].assign(params[i].second.size(), 0.0);
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;

    std::vector<std::vector<double>> best_params;
    double best_val = 0.0;
    int best_epoch = -1;
    int since_best = 0;

    std::vector<std::size_t> order(train_windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t pos = 0; pos < order.size();
             pos += static_cast<std::size_t>(options.batch)) {
            const std::size_t batch_end =
                std::min(order.size(), pos + static_cast<std::size_t>(options.batch));
            const auto batch_size = static_cast<double>(batch_end - pos);
            for (const auto& [name, t] : params) {
                Tensor handle = t;
                handle.zero_grad();
            }
            for (std::size_t bi = pos; bi < batch_end; ++bi) {
                const auto& w = train_windows[order[bi]];
                Tensor pred;
                Tensor loss;
                try {
                    pred = model.forward(Tensor::from_matrix(w.context), true, rng);
                    loss = nn::mse_loss(pred, Tensor::from_matrix(w.target));
                } catch (const nn::NonFiniteError& e) {
                    throw Error(std::string("training diverged: ") + e.what());
                }
                const double value = loss.item();
                if (!std::isfinite(value)) {
                    throw Error("training diverged: loss is not finite at epoch " +
                                std::to_string(epoch));
                }
                epoch_loss += value;
                ++seen;
                nn::backward(loss);
            }
            // Gradients were accumulated over the batch; average + Adam step.
            ++adam.step;
            const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
            const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
            for (std::size_t i = 0; i < params.size(); ++i) {
                Tensor handle = params[i].second;
                const auto& grad = handle.grad();
                auto& value = handle.mutable_data();
                auto& m = adam.m[i];
                auto& v = adam.v[i];
                for (std::size_t j = 0; j < value.size(); ++j) {
                    const double g = grad[j] / batch_size;
                    m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g;
                    v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g * g;
                    const double mhat = m[j] / bc1;
                    const double vhat = v[j] / bc2;
                    value[j] -= options.lr * mhat / (std::sqrt(vhat) + kEps);
                }
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = epoch_loss / static_cast<double>(seen);
        stats.val_mse = validation_mse(model, val_windows, rng);
        if (!std::isfinite(stats.val_mse)) {
            throw Error("training diverged: validation loss is not finite at epoch " +
                        std::to_string(epoch));
        }
        result.history.push_back(stats);

        if (best_epoch < 0 || stats.val_mse < best_val) {
            best_val = stats.val_mse;
            best_epoch = epoch;
            since_best = 0;
            best_params.clear();
            best_params.reserve(params.size());
            for (const auto& [name, t] : params) best_params.push_back(t.data());
        } else {
            ++since_best;
            if (since_best >= options.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    // Restore the best-validation parameters.
    if (best_epoch >= 0) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor handle = params[i].second;
            handle.mutable_data() = best_params[i];
        }
    }
    result.best_epoch = best_epoch;
    result.best_val_mse = best_val;
    return result;
}

Metrics evaluate(ForecastModel& model, const std::vector<WindowSample>& windows,
                 const ScalerParams& scaler) {
    if (windows.empty()) throw ValidationError("evaluate: no test windows");
    Rng rng(0);
    Metrics m;
    double ratio_sum = 0.0;
    std::size_t ratio_count = 0;
    std::size_t cells = 0;
    for (const auto& w : windows) {
        const Matrix pred = model.forward(Tensor::from_matrix(w.context), false, rng).to_matrix();
        double window_pred_max = 0.0;
        double window_target_max = 0.0;
        bool first = true;
        for (std::size_t r = 0; r < pred.rows; ++r) {
            for (std::size_t c = 0; c < pred.cols; ++c) {
                const double ps = pred.at(r, c);
                const double ts = w.target.at(r, c);
                m.mse_scaled += (ps - ts) * (ps - ts);
                m.mae_scaled += std::abs(ps - ts);
                const double denom = std::max(scaler.stddev[c], scaler.epsilon);
                const double po = ps * denom + scaler.mean[c];
                const double to = ts * denom + scaler.mean[c];
                m.mse_original += (po - to) * (po - to);
                m.mae_original += std::abs(po - to);
                if (first || po > window_pred_max) window_pred_max = po;
                if (first || to > window_target_max) window_target_max = to;
                first = false;
                ++cells;
            }
        }
        if (std::abs(window_target_max) > 1e-12) {
            ratio_sum += window_pred_max / window_target_max;
            ++ratio_count;
        }
    }
    const auto n = static_cast<double>(cells);
    m.mse_scaled /= n;
    m.mae_scaled /= n;
    m.mse_original /= n;
    m.mae_original /= n;
    m.peak_ratio = ratio_count > 0 ? ratio_sum / static_cast<double>(ratio_count) : 0.0;
    return m;
}

std::uint64_t parameter_hash(const ForecastModel& model) {
    std::string bytes;
    for (const auto& [name, t] : model.parameters()) {
        bytes += name;
        bytes += ':';
        const auto& v = t.data();
        bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }
    return fnv1a64(bytes);
}

nlohmann::ordered_json train_result_to_json(const TrainResult& r) {
    nlohmann::ordered_json j;
    j["schema"] = "slicecast.train_history/1";
    j["best_epoch"] = r.best_epoch;
    j["best_val_mse"] = r.best_val_mse;
    j["stopped_early"] = r.stopped_early;
    j["history"] = nlohmann::ordered_json::array();
    for (const auto& e : r.history) {
        j["history"].push_back(
            {{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"val_mse", e.val_mse}});
    }
    return j;
}

nlohmann::ordered_json metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["mse_scaled"] = m.mse_scaled;
    j["mae_scaled"] = m.mae_scaled;
    j["mse_original"] = m.mse_original;
    j["mae_original"] = m.mae_original;
    j["peak_ratio"] = m.peak_ratio;
    return j;
}

std::string metrics_to_csv(const std::vector<std::pair<std::string, Metrics>>& per_model) {
    std::string out = "model,mse_scaled,mae_scaled,mse_original,mae_original,peak_ratio\n";
    char buf[200];
    for (const auto& [tag, m] : per_model) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", tag.c_str(),
                      m.mse_scaled, m.mae_scaled, m.mse_original, m.mae_original, m.peak_ratio);
        out += buf;
    }
    return out;
}

}  // namespace slicecast
