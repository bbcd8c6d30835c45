#include "slicecast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "slicecast/errors.hpp"

namespace slicecast {

FillPolicy fill_policy_from_string(const std::string& name) {
    if (name == "linear") return FillPolicy::Linear;
    if (name == "previous") return FillPolicy::Previous;
    if (name == "zero") return FillPolicy::Zero;
    throw ValidationError("unknown fill policy '" + name + "' (linear|previous|zero)");
}

std::string to_string(FillPolicy p) {
    switch (p) {
        case FillPolicy::Linear: return "linear";
        case FillPolicy::Previous: return "previous";
        case FillPolicy::Zero: return "zero";
    }
    return "?";
}

SeriesFrame align(const std::vector<DemandSeries>& series) {
    if (series.empty()) throw ValidationError("align: no series given");
    std::set<std::int64_t> axis;
    for (const auto& s : series) axis.insert(s.timestamps.begin(), s.timestamps.end());

    std::vector<std::string> columns;
    columns.reserve(series.size());
    for (const auto& s : series) columns.push_back(s.column_id());

    SeriesFrame frame =
        SeriesFrame::empty(std::move(columns), {axis.begin(), axis.end()});

    std::map<std::int64_t, std::size_t> row_of;
    for (std::size_t r = 0; r < frame.timestamps.size(); ++r) row_of[frame.timestamps[r]] = r;

    for (std::size_t c = 0; c < series.size(); ++c) {
        const auto& s = series[c];
        for (std::size_t i = 0; i < s.timestamps.size(); ++i) {
            if (i < s.gaps.size() && s.gaps[i]) continue;
            const std::size_t r = row_of.at(s.timestamps[i]);
            frame.values.at(r, c) = s.values[i];
            frame.set_observed(r, c, true);
        }
    }
    return frame;
}

SeriesFrame clean(const SeriesFrame& frame, FillPolicy policy) {
    SeriesFrame out = frame;
    const std::size_t n = frame.rows();
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        std::vector<std::size_t> valid;
        for (std::size_t r = 0; r < n; ++r) {
            if (frame.observed(r, c)) valid.push_back(r);
        }
        if (valid.empty()) {
            throw ValidationError("clean: column '" + frame.columns[c] + "' has no valid cells");
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (frame.observed(r, c)) continue;
            double v = 0.0;
            if (policy == FillPolicy::Zero) {
                v = 0.0;
            } else {
                auto it = std::lower_bound(valid.begin(), valid.end(), r);
                const bool has_next = it != valid.end();
                const bool has_prev = it != valid.begin();
                const std::size_t next = has_next ? *it : 0;
                const std::size_t prev = has_prev ? *(it - 1) : 0;
                if (policy == FillPolicy::Previous) {
                    v = has_prev ? frame.values.at(prev, c) : frame.values.at(next, c);
                } else if (!has_prev) {
                    v = frame.values.at(next, c);  // leading run: nearest valid
                } else if (!has_next) {
                    v = frame.values.at(prev, c);  // trailing run
                } else {
                    const double t = static_cast<double>(r - prev) /
                                     static_cast<double>(next - prev);
                    v = frame.values.at(prev, c) +
                        t * (frame.values.at(next, c) - frame.values.at(prev, c));
                }
            }
            out.values.at(r, c) = v;
            out.set_observed(r, c, true);
        }
    }
    return out;
}

SeriesFrame daily_max(const SeriesFrame& frame, DailyMaxStats* stats) {
    if (frame.rows() == 0) throw ValidationError("daily_max: empty frame");
    std::int64_t cadence = 0;
    for (std::size_t i = 1; i < frame.timestamps.size(); ++i) {
        const std::int64_t d = frame.timestamps[i] - frame.timestamps[i - 1];
        if (cadence == 0 || d < cadence) cadence = d;
    }
    if (frame.rows() > 1) {
        if (cadence <= 0 || 86400 % cadence != 0) {
            throw ValidationError("daily_max: cadence " + std::to_string(cadence) +
                                  "s does not divide one day");
        }
    }

    auto day_of = [](std::int64_t ts) {
        std::int64_t d = ts / 86400;
        if (ts % 86400 < 0) --d;
        return d;
    };

    std::vector<std::int64_t> days;
    std::vector<std::size_t> counts;
    std::vector<std::size_t> day_index(frame.rows());
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        const std::int64_t d = day_of(frame.timestamps[r]);
        if (days.empty() || days.back() != d) {
            days.push_back(d);
            counts.push_back(0);
        }
        day_index[r] = days.size() - 1;
        ++counts.back();
    }

    SeriesFrame out = SeriesFrame::empty(frame.columns, {});
    out.timestamps.resize(days.size());
    for (std::size_t i = 0; i < days.size(); ++i) out.timestamps[i] = days[i] * 86400;
    out.values = Matrix(days.size(), frame.cols());
    out.mask.assign(days.size() * frame.cols(), 1);

    std::vector<bool> started(days.size() * frame.cols(), false);
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        const std::size_t d = day_index[r];
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            if (!frame.observed(r, c)) continue;
            const double v = frame.values.at(r, c);
            const std::size_t k = d * frame.cols() + c;
            if (!started[k] || v > out.values.at(d, c)) {
                out.values.at(d, c) = v;
                started[k] = true;
            }
        }
    }
    for (std::size_t k = 0; k < started.size(); ++k) {
        if (!started[k]) out.mask[k] = 0;  // a whole day of masked cells stays masked
    }

    if (stats) {
        stats->days = days.size();
        const std::size_t per_day = cadence > 0 ? static_cast<std::size_t>(86400 / cadence) : 1;
        stats->rows_per_full_day = per_day;
        stats->partial_first_day = counts.front() < per_day;
        stats->partial_last_day = counts.size() > 1 && counts.back() < per_day;
    }
    return out;
}

ScalerParams fit_scaler(const SeriesFrame& frame, std::size_t row_begin, std::size_t row_end,
                        std::vector<std::string>* warnings) {
    if (row_begin >= row_end || row_end > frame.rows()) {
        throw ValidationError("fit_scaler: bad row range");
    }
    ScalerParams p;
    p.columns = frame.columns;
    p.mean.resize(frame.cols());
    p.stddev.resize(frame.cols());
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r = row_begin; r < row_end; ++r) {
            if (!frame.observed(r, c)) continue;
            sum += frame.values.at(r, c);
            ++n;
        }
        if (n == 0) throw ValidationError("fit_scaler: column '" + frame.columns[c] +
                                          "' has no valid cells in the fit range");
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (std::size_t r = row_begin; r < row_end; ++r) {
            if (!frame.observed(r, c)) continue;
            const double d = frame.values.at(r, c) - mean;
            sq += d * d;
        }
        const double stddev = std::sqrt(sq / static_cast<double>(n));
        p.mean[c] = mean;
        p.stddev[c] = stddev;
        if (stddev < p.epsilon && warnings) {
            warnings->push_back("column '" + frame.columns[c] +
                                "' has near-zero variance; epsilon guard applied");
        }
    }
    return p;
}

namespace {

void check_scaler(const SeriesFrame& frame, const ScalerParams& params) {
    if (params.columns != frame.columns) {
        throw ValidationError("scaler was fit on different columns than this frame");
    }
}

}  // namespace

SeriesFrame transform(const SeriesFrame& frame, const ScalerParams& params) {
    check_scaler(frame, params);
    SeriesFrame out = frame;
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        const double denom = std::max(params.stddev[c], params.epsilon);
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            out.values.at(r, c) = (frame.values.at(r, c) - params.mean[c]) / denom;
        }
    }
    return out;
}

SeriesFrame invert(const SeriesFrame& frame, const ScalerParams& params) {
    check_scaler(frame, params);
    SeriesFrame out = frame;
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        const double denom = std::max(params.stddev[c], params.epsilon);
        for (std::size_t r = 0; r < frame.rows(); ++r) {
            out.values.at(r, c) = frame.values.at(r, c) * denom + params.mean[c];
        }
    }
    return out;
}

}  // namespace slicecast
