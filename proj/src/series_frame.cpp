#include "slicecast/series_frame.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "slicecast/errors.hpp"

namespace slicecast {

namespace {

std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote_csv(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// Splits one CSV record (no trailing newline) into fields, honoring quotes.
std::vector<std::string> split_csv(const std::string& line, int line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", line_no);
    fields.push_back(std::move(cur));
    return fields;
}

}  // namespace

SeriesFrame SeriesFrame::empty(std::vector<std::string> columns,
                               std::vector<std::int64_t> timestamps) {
    SeriesFrame f;
    f.columns = std::move(columns);
    f.timestamps = std::move(timestamps);
    f.values = Matrix(f.timestamps.size(), f.columns.size());
    f.mask.assign(f.timestamps.size() * f.columns.size(), 0);
    return f;
}

std::size_t SeriesFrame::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw ValidationError("no column named '" + name + "'");
}

std::string format_utc(std::int64_t epoch_seconds) {
    std::int64_t days = epoch_seconds / 86400;
    std::int64_t rem = epoch_seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::int64_t parse_utc(const std::string& text) {
    int y, m, d, hh, mm, ss;
    char tz = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &m, &d, &hh, &mm, &ss, &tz) !=
            7 ||
        tz != 'Z') {
        throw ParseError("bad timestamp '" + text + "', expected YYYY-MM-DDTHH:MM:SSZ");
    }
    if (m < 1 || m > 12 || d < 1 || d > 31 || hh > 23 || mm > 59 || ss > 60) {
        throw ParseError("out-of-range timestamp '" + text + "'");
    }
    return days_from_civil(y, m, d) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string frame_to_csv(const SeriesFrame& frame, const std::vector<std::string>& header_comments) {
    std::string out;
    for (const auto& c : header_comments) {
        out += "# ";
        out += c;
        out += '\n';
    }
    out += "timestamp";
    for (const auto& col : frame.columns) {
        out += ',';
        out += quote_csv(col);
    }
    out += '\n';
    for (std::size_t r = 0; r < frame.rows(); ++r) {
        out += format_utc(frame.timestamps[r]);
        for (std::size_t c = 0; c < frame.cols(); ++c) {
            out += ',';
            if (frame.observed(r, c)) out += format_double(frame.values.at(r, c));
        }
        out += '\n';
    }
    return out;
}

SeriesFrame frame_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    // Header: skip leading comment lines.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) continue;
        header = split_csv(line, line_no);
        break;
    }
    if (header.empty()) throw ParseError("empty CSV document", line_no);
    if (header[0] != "timestamp") {
        throw ParseError("first column must be 'timestamp', found '" + header[0] + "'", line_no);
    }

    SeriesFrame f;
    f.columns.assign(header.begin() + 1, header.end());
    std::vector<double> cells;
    std::vector<std::uint8_t> mask;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv(line, line_no);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no);
        }
        f.timestamps.push_back(parse_utc(fields[0]));
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty()) {
                cells.push_back(0.0);
                mask.push_back(0);
            } else {
                const char* begin = fields[c].c_str();
                char* end = nullptr;
                const double v = std::strtod(begin, &end);
                if (end != begin + fields[c].size()) {
                    throw ParseError("bad numeric cell '" + fields[c] + "'", line_no);
                }
                cells.push_back(v);
                mask.push_back(1);
            }
        }
    }
    for (std::size_t i = 1; i < f.timestamps.size(); ++i) {
        if (f.timestamps[i] <= f.timestamps[i - 1]) {
            throw ValidationError("timestamps not strictly increasing at row " +
                                  std::to_string(i));
        }
    }
    f.values = Matrix(f.timestamps.size(), f.columns.size());
    f.values.a = std::move(cells);
    f.mask = std::move(mask);
    return f;
}

}  // namespace slicecast
