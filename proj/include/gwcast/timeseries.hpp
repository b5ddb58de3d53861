#pragma once

// Hourly well records: CSV ingest/emit in the canonical format
//   timestamp,rainfall_mm,tide_m,gwl_m
// with ISO-8601 hour timestamps, plus gap interpolation/segmentation.
// Timestamps are carried internally as hours since the Unix epoch.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gwcast {

// ---------------------------------------------------------------------------
// Civil date <-> epoch conversions (Gregorian, proleptic). Days are relative
// to 1970-01-01.

inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y = static_cast<int>(yy + (m <= 2));
}

inline std::string iso_from_hour(std::int64_t hour) {
    std::int64_t day = hour / 24;
    int h = static_cast<int>(hour % 24);
    if (h < 0) {
        h += 24;
        day -= 1;
    }
    int y;
    unsigned m, d;
    civil_from_days(day, y, m, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", y, m, d, h);
    return buf;
}

// Strict parse of "YYYY-MM-DDTHH:00:00Z". Returns false on any deviation.
inline bool hour_from_iso(std::string_view s, std::int64_t& out) {
    if (s.size() != 20) return false;
    static constexpr const char* pattern = "dddd-dd-ddTdd:00:00Z";
    int digits[10];
    int nd = 0;
    for (std::size_t i = 0; i < 20; ++i) {
        const char p = pattern[i];
        const char c = s[i];
        if (p == 'd') {
            if (c < '0' || c > '9') return false;
            digits[nd++] = c - '0';
        } else if (c != p) {
            return false;
        }
    }
    const int y = digits[0] * 1000 + digits[1] * 100 + digits[2] * 10 + digits[3];
    const unsigned m = static_cast<unsigned>(digits[4] * 10 + digits[5]);
    const unsigned d = static_cast<unsigned>(digits[6] * 10 + digits[7]);
    const int h = digits[8] * 10 + digits[9];
    if (m < 1 || m > 12 || d < 1 || h > 23) return false;
    static constexpr unsigned month_len[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    const unsigned dmax = (m == 2 && leap) ? 29 : month_len[m - 1];
    if (d > dmax) return false;
    out = days_from_civil(y, m, d) * 24 + h;
    return true;
}

// ---------------------------------------------------------------------------
// Shortest-round-trip decimal formatting; deterministic and lossless.

inline std::string format_double(double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

inline bool parse_double_strict(std::string_view s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

// ---------------------------------------------------------------------------

struct HourlyRecord {
    std::int64_t hour = 0;  // hours since epoch, UTC
    double rainfall_mm = 0.0;
    double tide_m = 0.0;
    double gwl_m = 0.0;
};

struct TimeSeriesFrame {
    std::string well_id;
    std::vector<HourlyRecord> rows;

    std::size_t size() const { return rows.size(); }
};

inline constexpr const char* kCsvHeader = "timestamp,rainfall_mm,tide_m,gwl_m";

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

}  // namespace detail

// Parses the canonical well CSV. Rows are sorted by timestamp; duplicate
// timestamps, malformed fields, and negative rainfall are rejected with the
// offending line number.
inline TimeSeriesFrame ingest_csv(std::istream& in, const std::string& well_id) {
    TimeSeriesFrame frame;
    frame.well_id = well_id;

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line))
        throw std::runtime_error("ingest_csv(" + well_id + "): empty input");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw std::runtime_error("ingest_csv(" + well_id + "): line 1: expected header \"" +
                                 std::string(kCsvHeader) + "\", got \"" + line + "\"");

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        const std::string where =
            "ingest_csv(" + well_id + "): line " + std::to_string(line_no) + ": ";
        if (fields.size() != 4)
            throw std::runtime_error(where + "expected 4 fields, got " +
                                     std::to_string(fields.size()));
        HourlyRecord rec;
        if (!hour_from_iso(fields[0], rec.hour))
            throw std::runtime_error(where + "bad timestamp \"" + std::string(fields[0]) + "\"");
        if (!parse_double_strict(fields[1], rec.rainfall_mm) || !std::isfinite(rec.rainfall_mm))
            throw std::runtime_error(where + "bad rainfall_mm \"" + std::string(fields[1]) + "\"");
        if (!parse_double_strict(fields[2], rec.tide_m) || !std::isfinite(rec.tide_m))
            throw std::runtime_error(where + "bad tide_m \"" + std::string(fields[2]) + "\"");
        if (!parse_double_strict(fields[3], rec.gwl_m) || !std::isfinite(rec.gwl_m))
            throw std::runtime_error(where + "bad gwl_m \"" + std::string(fields[3]) + "\"");
        if (rec.rainfall_mm < 0.0)
            throw std::runtime_error(where + "negative rainfall " + format_double(rec.rainfall_mm));
        frame.rows.push_back(rec);
    }

    std::stable_sort(frame.rows.begin(), frame.rows.end(),
                     [](const HourlyRecord& a, const HourlyRecord& b) { return a.hour < b.hour; });
    for (std::size_t i = 1; i < frame.rows.size(); ++i) {
        if (frame.rows[i].hour == frame.rows[i - 1].hour)
            throw std::runtime_error("ingest_csv(" + well_id + "): duplicate timestamp " +
                                     iso_from_hour(frame.rows[i].hour));
    }
    return frame;
}

inline TimeSeriesFrame ingest_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("ingest_csv_file: cannot open " + path.string());
    return ingest_csv(in, path.stem().string());
}

inline void write_csv(const TimeSeriesFrame& frame, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : frame.rows) {
        out << iso_from_hour(r.hour) << ',' << format_double(r.rainfall_mm) << ','
            << format_double(r.tide_m) << ',' << format_double(r.gwl_m) << '\n';
    }
}

inline void write_csv_file(const TimeSeriesFrame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("write_csv_file: cannot open " + path.string() + " for writing");
    write_csv(frame, out);
}

// Fills gaps of at most max_fill missing hours by per-channel linear
// interpolation; longer gaps split the frame. Every returned segment is
// strictly hourly.
inline std::vector<TimeSeriesFrame> segment_gaps(const TimeSeriesFrame& frame,
                                                 std::int64_t max_fill) {
    if (max_fill < 0)
        throw std::invalid_argument("segment_gaps: max_fill must be >= 0");
    std::vector<TimeSeriesFrame> segments;
    if (frame.rows.empty()) return segments;

    TimeSeriesFrame cur;
    cur.well_id = frame.well_id;
    cur.rows.push_back(frame.rows.front());
    for (std::size_t i = 1; i < frame.rows.size(); ++i) {
        const HourlyRecord& prev = cur.rows.back();
        const HourlyRecord& next = frame.rows[i];
        const std::int64_t missing = next.hour - prev.hour - 1;
        if (missing > max_fill) {
            segments.push_back(std::move(cur));
            cur = TimeSeriesFrame{frame.well_id, {}};
        } else if (missing > 0) {
            const HourlyRecord base = prev;  // prev reference dies on push_back
            for (std::int64_t k = 1; k <= missing; ++k) {
                const double w = static_cast<double>(k) / static_cast<double>(missing + 1);
                HourlyRecord r;
                r.hour = base.hour + k;
                r.rainfall_mm = base.rainfall_mm + w * (next.rainfall_mm - base.rainfall_mm);
                r.tide_m = base.tide_m + w * (next.tide_m - base.tide_m);
                r.gwl_m = base.gwl_m + w * (next.gwl_m - base.gwl_m);
                cur.rows.push_back(r);
            }
        }
        cur.rows.push_back(next);
    }
    segments.push_back(std::move(cur));
    return segments;
}

}  // namespace gwcast
