#pragma once

#include <string>
#include <vector>

#include "slicecast/ingest.hpp"
#include "slicecast/series_frame.hpp"

namespace slicecast {

enum class FillPolicy { Linear, Previous, Zero };

FillPolicy fill_policy_from_string(const std::string& name);  // throws on unknown
std::string to_string(FillPolicy p);

// Puts every series on the union timestamp axis; cells a series never
// observed (absent instant or ingest gap flag) stay masked.
SeriesFrame align(const std::vector<DemandSeries>& series);

// Fills every masked cell. Linear interpolates between the nearest observed
// neighbours; leading/trailing runs take the nearest observed value. A column
// with no observed cell at all is unfillable.
SeriesFrame clean(const SeriesFrame& frame, FillPolicy policy = FillPolicy::Linear);

struct DailyMaxStats {
    std::size_t days = 0;
    bool partial_first_day = false;
    bool partial_last_day = false;
    std::size_t rows_per_full_day = 0;
};

// One row per UTC calendar day, each cell the maximum over that day's rows.
// Output timestamps are the day's UTC midnight. Requires a cadence that
// divides 24 h; partial first/last days aggregate what is present and are
// flagged in `stats`.
SeriesFrame daily_max(const SeriesFrame& frame, DailyMaxStats* stats = nullptr);

struct ScalerParams {
    std::vector<std::string> columns;
    std::vector<double> mean;
    std::vector<double> stddev;  // population
    double epsilon = 1e-8;
};

// Fits per-column mean and population stddev over rows [row_begin, row_end)
// only — the caller passes the training range so later rows never leak into
// the statistics. Zero-variance columns fall back to the epsilon guard and
// are reported via `warnings`.
ScalerParams fit_scaler(const SeriesFrame& frame, std::size_t row_begin, std::size_t row_end,
                        std::vector<std::string>* warnings = nullptr);

SeriesFrame transform(const SeriesFrame& frame, const ScalerParams& params);
SeriesFrame invert(const SeriesFrame& frame, const ScalerParams& params);

}  // namespace slicecast
