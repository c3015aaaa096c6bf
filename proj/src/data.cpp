#include "stockcast/data.hpp"

#include "stockcast/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace stockcast {

namespace {

std::string lower_trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out(s.substr(b, e - b));
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

bool is_null_token(std::string_view s) {
    const std::string t = lower_trim(s);
    return t.empty() || t == "null";
}

double parse_number(std::string_view s, std::size_t line_no, const char* column) {
    const std::string t = lower_trim(s);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size()) {
        throw InputError("line " + std::to_string(line_no) + ": cannot parse " + column +
                         " value '" + t + "'");
    }
    return value;
}

int parse_int_field(std::string_view s, const char* what) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputError(std::string("invalid date ") + what + " '" + std::string(s) + "'");
    }
    return value;
}

} // namespace

Date Date::parse(std::string_view text) {
    const std::string t = lower_trim(text);
    std::string_view s(t);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw InputError("invalid date '" + t + "' (expected YYYY-MM-DD)");
    }
    Date d;
    d.year = parse_int_field(s.substr(0, 4), "year");
    d.month = parse_int_field(s.substr(5, 2), "month");
    d.day = parse_int_field(s.substr(8, 2), "day");
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
        throw InputError("invalid date '" + t + "'");
    }
    return d;
}

std::string Date::str() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

std::vector<double> PriceSeries::closes() const {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.close);
    return out;
}

std::vector<RawBar> parse_yahoo_csv(std::string_view text) {
    // Collect lines, tolerating CRLF and a trailing newline.
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string_view line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            lines.push_back(line);
            start = i + 1;
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw InputError("empty CSV document");

    // Resolve column positions from the header.
    const auto header_fields = split_csv_line(lines[0]);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header_fields.size(); ++i) {
        std::string name = lower_trim(header_fields[i]);
        std::replace(name.begin(), name.end(), '_', ' ');
        col.emplace(std::move(name), i);
    }
    const char* required[] = {"date", "open", "high", "low", "close", "adj close", "volume"};
    std::size_t idx[7];
    for (std::size_t k = 0; k < 7; ++k) {
        const auto it = col.find(required[k]);
        if (it == col.end()) {
            throw InputError(std::string("CSV header is missing required column '") +
                             required[k] + "'");
        }
        idx[k] = it->second;
    }

    std::vector<RawBar> bars;
    bars.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const std::size_t line_no = li + 1;
        const auto fields = split_csv_line(lines[li]);
        if (fields.size() < header_fields.size()) {
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header_fields.size()) + " fields, found " +
                             std::to_string(fields.size()));
        }
        RawBar bar;
        try {
            bar.date = Date::parse(fields[idx[0]]);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        const char* names[] = {"open", "high", "low", "close", "adj close", "volume"};
        std::optional<double>* slots[] = {&bar.open, &bar.high, &bar.low,
                                          &bar.close, &bar.adj_close, &bar.volume};
        for (std::size_t k = 0; k < 6; ++k) {
            const std::string_view cell = fields[idx[k + 1]];
            if (is_null_token(cell)) continue;
            *slots[k] = parse_number(cell, line_no, names[k]);
        }
        bars.push_back(bar);
    }
    if (bars.empty()) throw InputError("CSV contains a header but no data rows");
    return bars;
}

CleanResult drop_nulls(const std::vector<RawBar>& raw, std::string ticker) {
    CleanResult result;
    result.series.ticker = std::move(ticker);
    result.series.bars.reserve(raw.size());

    for (const auto& r : raw) {
        if (r.has_null()) {
            ++result.dropped;
            continue;
        }
        OhlcvBar bar;
        bar.date = r.date;
        bar.open = *r.open;
        bar.high = *r.high;
        bar.low = *r.low;
        bar.close = *r.close;
        bar.adj_close = *r.adj_close;

        const double prices[] = {bar.open, bar.high, bar.low, bar.close, bar.adj_close};
        for (double p : prices) {
            if (!std::isfinite(p) || p <= 0.0) {
                throw InputError("bar " + bar.date.str() + ": non-positive or non-finite price");
            }
        }
        if (!std::isfinite(*r.volume) || *r.volume < 0.0) {
            throw InputError("bar " + bar.date.str() + ": negative volume");
        }
        bar.volume = static_cast<std::int64_t>(std::llround(*r.volume));

        // Soft check: real feeds occasionally violate OHLC ordering.
        if (bar.low > std::min(bar.open, bar.close) ||
            bar.high < std::max(bar.open, bar.close)) {
            result.warnings.push_back("bar " + bar.date.str() +
                                      ": OHLC ordering violated (kept)");
        }
        result.series.bars.push_back(bar);
    }

    if (result.series.bars.empty()) {
        throw InputError("series is empty after removing null rows");
    }
    for (std::size_t i = 1; i < result.series.bars.size(); ++i) {
        if (!(result.series.bars[i - 1].date < result.series.bars[i].date)) {
            throw InputError("dates not strictly increasing at " +
                             result.series.bars[i].date.str());
        }
    }
    return result;
}

DataSplit split_chronological(const PriceSeries& series, Date boundary) {
    if (series.bars.empty()) throw InputError("cannot split an empty series");

    DataSplit split;
    split.boundary = boundary;
    split.train.ticker = series.ticker;
    split.test.ticker = series.ticker;
    for (const auto& bar : series.bars) {
        (bar.date < boundary ? split.train : split.test).bars.push_back(bar);
    }
    if (split.train.bars.empty()) {
        throw InputError("split boundary " + boundary.str() + " leaves an empty train segment");
    }
    if (split.test.bars.empty()) {
        throw InputError("split boundary " + boundary.str() + " leaves an empty test segment");
    }
    return split;
}

ScalerParams fit_minmax(const Matrix& train_rows) {
    if (train_rows.empty()) throw InputError("fit_minmax: empty input");
    const std::size_t n_features = train_rows[0].size();
    if (n_features == 0) throw InputError("fit_minmax: rows have no features");

    ScalerParams params;
    params.min.assign(n_features, 0.0);
    params.max.assign(n_features, 0.0);
    for (std::size_t f = 0; f < n_features; ++f) {
        params.min[f] = params.max[f] = train_rows[0][f];
    }
    for (const auto& row : train_rows) {
        if (row.size() != n_features) throw InputError("fit_minmax: ragged matrix");
        for (std::size_t f = 0; f < n_features; ++f) {
            params.min[f] = std::min(params.min[f], row[f]);
            params.max[f] = std::max(params.max[f], row[f]);
        }
    }
    return params;
}

Matrix apply_minmax(const ScalerParams& params, const Matrix& rows) {
    Matrix out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        if (row.size() != params.n_features()) {
            throw std::invalid_argument("apply_minmax: feature count mismatch");
        }
        std::vector<double> scaled(row.size());
        for (std::size_t f = 0; f < row.size(); ++f) {
            scaled[f] = params.degenerate(f)
                            ? 0.0
                            : (row[f] - params.min[f]) / (params.max[f] - params.min[f]);
        }
        out.push_back(std::move(scaled));
    }
    return out;
}

Matrix invert_minmax(const ScalerParams& params, const Matrix& scaled_rows) {
    Matrix out;
    out.reserve(scaled_rows.size());
    for (const auto& row : scaled_rows) {
        if (row.size() != params.n_features()) {
            throw std::invalid_argument("invert_minmax: feature count mismatch");
        }
        std::vector<double> values(row.size());
        for (std::size_t f = 0; f < row.size(); ++f) {
            values[f] = params.degenerate(f)
                            ? params.min[f]
                            : params.min[f] + row[f] * (params.max[f] - params.min[f]);
        }
        out.push_back(std::move(values));
    }
    return out;
}

ScalerParams fit_minmax(const std::vector<double>& train_column) {
    Matrix rows;
    rows.reserve(train_column.size());
    for (double v : train_column) rows.push_back({v});
    return fit_minmax(rows);
}

std::vector<double> apply_minmax(const ScalerParams& params, const std::vector<double>& column) {
    Matrix rows;
    rows.reserve(column.size());
    for (double v : column) rows.push_back({v});
    const Matrix scaled = apply_minmax(params, rows);
    std::vector<double> out;
    out.reserve(scaled.size());
    for (const auto& r : scaled) out.push_back(r[0]);
    return out;
}

std::vector<double> invert_minmax(const ScalerParams& params, const std::vector<double>& scaled) {
    Matrix rows;
    rows.reserve(scaled.size());
    for (double v : scaled) rows.push_back({v});
    const Matrix values = invert_minmax(params, rows);
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& r : values) out.push_back(r[0]);
    return out;
}

WindowedDataset build_windows(const std::vector<double>& values, std::size_t window_len) {
    if (window_len == 0) throw std::invalid_argument("build_windows: window_len must be positive");
    if (values.size() <= window_len) {
        throw InputError("build_windows: need more than " + std::to_string(window_len) +
                         " values, got " + std::to_string(values.size()));
    }
    WindowedDataset ds;
    ds.window_len = window_len;
    const std::size_t n_samples = values.size() - window_len;
    ds.inputs.reserve(n_samples);
    ds.targets.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        ds.inputs.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(i),
                               values.begin() + static_cast<std::ptrdiff_t>(i + window_len));
        ds.targets.push_back(values[i + window_len]);
    }
    return ds;
}

Matrix feature_matrix(const PriceSeries& series, bool include_close) {
    Matrix rows;
    rows.reserve(series.bars.size());
    for (const auto& b : series.bars) {
        std::vector<double> row{b.open, b.high, b.low};
        if (include_close) row.push_back(b.close);
        row.push_back(b.adj_close);
        row.push_back(static_cast<double>(b.volume));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_double(double v) {
    // Shortest representation that round-trips exactly.
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        double back = 0.0;
        std::from_chars(buf, buf + std::char_traits<char>::length(buf), back);
        if (back == v) break;
    }
    return buf;
}

std::string to_canonical_csv(const PriceSeries& series) {
    std::string out = "Date,Open,High,Low,Close,Adj Close,Volume\n";
    for (const auto& b : series.bars) {
        out += b.date.str();
        out += ',';
        out += format_double(b.open);
        out += ',';
        out += format_double(b.high);
        out += ',';
        out += format_double(b.low);
        out += ',';
        out += format_double(b.close);
        out += ',';
        out += format_double(b.adj_close);
        out += ',';
        out += std::to_string(b.volume);
        out += '\n';
    }
    return out;
}

} // namespace stockcast
