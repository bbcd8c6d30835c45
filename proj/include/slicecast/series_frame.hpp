#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicecast/matrix.hpp"

namespace slicecast {

// A time-indexed table: one row per timestamp, one column per series.
// `mask` mirrors `values`; a zero entry marks a cell with no observation.
struct SeriesFrame {
    std::vector<std::string> columns;
    std::vector<std::int64_t> timestamps;  // UTC seconds, strictly increasing
    Matrix values;
    std::vector<std::uint8_t> mask;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t cols() const { return columns.size(); }

    bool observed(std::size_t r, std::size_t c) const { return mask[r * cols() + c] != 0; }
    void set_observed(std::size_t r, std::size_t c, bool v) {
        mask[r * cols() + c] = v ? 1 : 0;
    }

    static SeriesFrame empty(std::vector<std::string> columns,
                             std::vector<std::int64_t> timestamps);

    std::size_t column_index(const std::string& name) const;  // throws if absent
};

// ISO-8601 UTC helpers ("2025-01-31T06:00:00Z").
std::string format_utc(std::int64_t epoch_seconds);
std::int64_t parse_utc(const std::string& text);  // throws ParseError

// CSV round-trip. The first column is the timestamp; cells for unobserved
// entries are left empty. Doubles are written with shortest round-trip
// precision. `header_comments` lines are emitted first, each prefixed with
// "# "; the reader skips any leading '#' lines.
std::string frame_to_csv(const SeriesFrame& frame,
                         const std::vector<std::string>& header_comments = {});
SeriesFrame frame_from_csv(const std::string& text);

}  // namespace slicecast
