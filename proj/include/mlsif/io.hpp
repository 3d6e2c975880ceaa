#ifndef MLSIF_IO_HPP
#define MLSIF_IO_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mlsif/errors.hpp"
#include "mlsif/metrics.hpp"
#include "mlsif/series.hpp"
#include "mlsif/simulate.hpp"

namespace mlsif {

// Canonical number rendering: shortest text that parses back to the same
// double. All emitted files use this, which is what makes byte-stable round
// trips and byte-identical reruns possible.
inline std::string format_double(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view text, long line = -1) {
    double x = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, x);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError("bad number '" + std::string(text) + "'", line);
    return x;
}

inline long long parse_int(std::string_view text, long line = -1) {
    long long x = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ParseError("bad integer '" + std::string(text) + "'", line);
    return x;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    for (;;) {
        const std::size_t next = line.find(sep, pos);
        if (next == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, next - pos));
        pos = next + 1;
    }
}

inline std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

// Accepts an integer index, "YYYY-MM-DD", or "YYYY-MM-DD[T ]HH:MM:SS" and
// returns a value that orders rows in time.
inline std::int64_t parse_timestamp(std::string_view text, long line) {
    if (text.empty()) throw ParseError("empty timestamp", line);
    const bool has_date = text.size() >= 10 && text[4] == '-' && text[7] == '-';
    if (!has_date) {
        long long v = 0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
        if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
            throw ParseError("bad timestamp '" + std::string(text) + "'", line);
        return v;
    }
    const auto num = [&](std::size_t pos, std::size_t len) -> int {
        int v = 0;
        const auto res = std::from_chars(text.data() + pos, text.data() + pos + len, v);
        if (res.ec != std::errc{} || res.ptr != text.data() + pos + len)
            throw ParseError("bad timestamp '" + std::string(text) + "'", line);
        return v;
    };
    const int y = num(0, 4), mo = num(5, 2), da = num(8, 2);
    std::int64_t seconds = days_from_civil(y, static_cast<unsigned>(mo),
                                           static_cast<unsigned>(da)) * 86400;
    if (text.size() > 10) {
        if (text.size() != 19 || (text[10] != 'T' && text[10] != ' ') ||
            text[13] != ':' || text[16] != ':')
            throw ParseError("bad timestamp '" + std::string(text) + "'", line);
        seconds += num(11, 2) * 3600 + num(14, 2) * 60 + num(17, 2);
    }
    return seconds;
}

} // namespace detail

// A series plus the exact timestamp renderings it was read with, so writing
// it back is byte-stable.
struct SeriesDocument {
    TimeSeries series;
    std::vector<std::string> timestamp_text;
    std::string timestamp_header = "timestamp";
    std::string value_header = "value";

    static SeriesDocument from_series(TimeSeries s) {
        std::vector<std::string> ts;
        ts.reserve(s.size());
        if (s.has_time_index())
            for (std::int64_t v : s.time_index()) ts.push_back(std::to_string(v));
        else
            for (std::size_t i = 0; i < s.size(); ++i) ts.push_back(std::to_string(i));
        return {std::move(s), std::move(ts)};
    }
};

// CSV with a header and two columns: timestamp, value. An empty value cell or
// a value equal to na_value is a missing point.
inline SeriesDocument read_series_csv(std::istream& is,
                                      std::optional<double> na_value = std::nullopt) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty series file", 1);
    const auto header = detail::split_fields(detail::strip_cr(line), ',');
    if (header.size() != 2)
        throw ParseError("expected two columns (timestamp,value), got " +
                             std::to_string(header.size()),
                         1);
    SeriesDocument doc{TimeSeries::complete({0.0}), {}};
    doc.timestamp_header = std::string(header[0]);
    doc.value_header = std::string(header[1]);

    std::vector<double> values;
    std::vector<PointStatus> status;
    std::vector<std::int64_t> index;
    std::vector<std::string> ts_text;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        const auto fields = detail::split_fields(sv, ',');
        if (fields.size() != 2)
            throw ParseError("expected two fields, got " + std::to_string(fields.size()),
                             lineno);
        const std::int64_t ts = detail::parse_timestamp(fields[0], lineno);
        if (!index.empty() && ts <= index.back())
            throw ParseError("timestamps must be strictly increasing", lineno);
        index.push_back(ts);
        ts_text.emplace_back(fields[0]);
        if (fields[1].empty()) {
            values.push_back(TimeSeries::sentinel());
            status.push_back(PointStatus::missing());
        } else {
            const double v = parse_double(fields[1], lineno);
            if (na_value && v == *na_value) {
                values.push_back(TimeSeries::sentinel());
                status.push_back(PointStatus::missing());
            } else {
                values.push_back(v);
                status.push_back(PointStatus::observed());
            }
        }
    }
    if (values.empty()) throw ParseError("series file has no data rows", lineno);
    doc.series = TimeSeries(std::move(values), std::move(status), std::move(index));
    doc.timestamp_text = std::move(ts_text);
    return doc;
}

inline SeriesDocument read_series_csv_file(const std::string& path,
                                           std::optional<double> na_value = std::nullopt) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open series file: " + path);
    try {
        return read_series_csv(is, na_value);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void write_series_csv(std::ostream& os, const SeriesDocument& doc) {
    os << doc.timestamp_header << ',' << doc.value_header << '\n';
    for (std::size_t i = 0; i < doc.series.size(); ++i) {
        os << doc.timestamp_text[i] << ',';
        if (doc.series.status(i).is_known()) os << format_double(doc.series.value(i));
        os << '\n';
    }
}

inline void write_series_csv_file(const std::string& path, const SeriesDocument& doc) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open file for writing: " + path);
    write_series_csv(os, doc);
}

// Sidecar recording where each point came from: index,status,stage.
inline void write_provenance_csv(std::ostream& os, const TimeSeries& series) {
    os << "index,status,stage\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& st = series.status(i);
        os << i << ',';
        if (st.is_observed())
            os << "observed,";
        else if (st.is_missing())
            os << "missing,";
        else
            os << "imputed," << st.stage();
        os << '\n';
    }
}

inline void write_gap_plan_csv(std::ostream& os, const GapPlan& plan) {
    os << "start,length\n";
    for (const auto& iv : plan.intervals) os << iv.start << ',' << iv.length << '\n';
}

inline GapPlan read_gap_plan_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || detail::strip_cr(line) != "start,length")
        throw ParseError("gap plan file: expected 'start,length' header", 1);
    GapPlan plan;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        const auto fields = detail::split_fields(sv, ',');
        if (fields.size() != 2) throw ParseError("gap plan file: expected two fields", lineno);
        plan.intervals.push_back({static_cast<std::size_t>(parse_int(fields[0], lineno)),
                                  static_cast<std::size_t>(parse_int(fields[1], lineno))});
    }
    return plan;
}

// Flat key-value rendering; absent metrics name the reason.
inline std::string metric_report_text(const MetricReport& r) {
    std::ostringstream os;
    const auto row = [&os](const char* name, const std::optional<double>& v,
                           const char* reason) {
        os << name << ": " << (v ? format_double(*v) : std::string("n/a (") + reason + ")")
           << '\n';
    };
    row("mse", r.mse, "no paired truth");
    row("mae", r.mae, "no paired truth");
    row("rmse", r.rmse, "no paired truth");
    row("rmae", r.rmae, "no paired truth");
    row("r2", r.r2, "needs two non-constant sequences");
    row("d2", r.d2, "zero spread denominator");
    row("global_siv", r.global_siv, "no before/after series");
    row("local_siv", r.local_siv, "no before/after series");
    return os.str();
}

inline std::string metric_report_csv_row(const MetricReport& r) {
    std::ostringstream os;
    const std::optional<double>* fields[] = {&r.mse, &r.mae,        &r.rmse,
                                             &r.rmae, &r.r2,        &r.d2,
                                             &r.global_siv, &r.local_siv};
    bool first = true;
    for (const auto* f : fields) {
        if (!first) os << ',';
        first = false;
        if (*f) os << format_double(**f);
    }
    return os.str();
}

// Loader for the hourly air-quality export layout: semicolon separators,
// decimal commas, Date (DD/MM/YYYY) and Time (HH.MM.SS) columns, -200 as the
// missing sentinel.
inline SeriesDocument read_uci_air_quality(std::istream& is, const std::string& column,
                                           double sentinel = -200.0) {
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty file", 1);
    const auto header = detail::split_fields(detail::strip_cr(line), ';');
    std::size_t date_col = SIZE_MAX, time_col = SIZE_MAX, value_col = SIZE_MAX;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "Date") date_col = i;
        else if (header[i] == "Time") time_col = i;
        else if (header[i] == column) value_col = i;
    }
    if (date_col == SIZE_MAX || time_col == SIZE_MAX)
        throw ParseError("missing Date/Time columns", 1);
    if (value_col == SIZE_MAX) throw ParseError("column not found: " + column, 1);

    std::vector<double> values;
    std::vector<PointStatus> status;
    std::vector<std::int64_t> index;
    std::vector<std::string> ts_text;
    long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        const auto sv = detail::strip_cr(line);
        if (sv.empty()) continue;
        auto fields = detail::split_fields(sv, ';');
        if (fields.size() <= std::max({date_col, time_col, value_col})) continue;
        if (fields[date_col].empty()) continue; // trailing padding rows
        const auto date = fields[date_col];
        const auto time = fields[time_col];
        if (date.size() != 10 || time.size() != 8)
            throw ParseError("bad Date/Time fields", lineno);
        const int da = static_cast<int>(parse_int(date.substr(0, 2), lineno));
        const int mo = static_cast<int>(parse_int(date.substr(3, 2), lineno));
        const int yr = static_cast<int>(parse_int(date.substr(6, 4), lineno));
        const int hh = static_cast<int>(parse_int(time.substr(0, 2), lineno));
        const int mi = static_cast<int>(parse_int(time.substr(3, 2), lineno));
        const int ss = static_cast<int>(parse_int(time.substr(6, 2), lineno));
        const std::int64_t ts =
            detail::days_from_civil(yr, static_cast<unsigned>(mo), static_cast<unsigned>(da)) *
                86400 +
            hh * 3600 + mi * 60 + ss;
        if (!index.empty() && ts <= index.back())
            throw ParseError("timestamps must be strictly increasing", lineno);
        std::string cell(fields[value_col]);
        for (char& c : cell)
            if (c == ',') c = '.';
        char isobuf[20];
        std::snprintf(isobuf, sizeof isobuf, "%04d-%02d-%02dT%02d:%02d:%02d", yr, mo, da, hh,
                      mi, ss);
        index.push_back(ts);
        ts_text.emplace_back(isobuf);
        if (cell.empty()) {
            values.push_back(TimeSeries::sentinel());
            status.push_back(PointStatus::missing());
            continue;
        }
        const double v = parse_double(cell, lineno);
        if (v == sentinel) {
            values.push_back(TimeSeries::sentinel());
            status.push_back(PointStatus::missing());
        } else {
            values.push_back(v);
            status.push_back(PointStatus::observed());
        }
    }
    if (values.empty()) throw ParseError("no data rows", lineno);
    SeriesDocument doc{TimeSeries(std::move(values), std::move(status), std::move(index)),
                       std::move(ts_text)};
    doc.value_header = column;
    return doc;
}

inline SeriesDocument read_uci_air_quality_file(const std::string& path,
                                                const std::string& column,
                                                double sentinel = -200.0) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open file: " + path);
    try {
        return read_uci_air_quality(is, column, sentinel);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace mlsif

#endif
