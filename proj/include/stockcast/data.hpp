#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stockcast {

/// Calendar day, treated as an opaque ordered label. No trading-calendar
/// logic: gaps between consecutive bars are expected and ignored.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static Date parse(std::string_view text); // "YYYY-MM-DD"
    std::string str() const;
};

/// One row as read from a Yahoo-format CSV. Any field may still be null
/// ("null" literal or empty cell) at this stage.
struct RawBar {
    Date date;
    std::optional<double> open, high, low, close, adj_close, volume;

    bool has_null() const {
        return !open || !high || !low || !close || !adj_close || !volume;
    }
};

struct OhlcvBar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0, adj_close = 0;
    std::int64_t volume = 0;
};

/// Cleaned, chronologically ordered daily bars for one ticker.
struct PriceSeries {
    std::string ticker;
    std::vector<OhlcvBar> bars;

    std::size_t size() const { return bars.size(); }
    std::vector<double> closes() const;
};

struct DataSplit {
    PriceSeries train;
    PriceSeries test;
    Date boundary; // every train date < boundary <= every test date
};

/// Per-feature min/max, fitted on the train segment only. A feature whose
/// train column is constant is degenerate and always scales to 0.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t n_features() const { return min.size(); }
    bool degenerate(std::size_t f) const { return max[f] == min[f]; }
};

/// Supervised rolling-window pairs in scaled space: input i covers source
/// indices [i, i+window_len) and target i is source index i+window_len.
struct WindowedDataset {
    std::size_t window_len = 7;
    std::vector<std::vector<double>> inputs;
    std::vector<double> targets;

    std::size_t size() const { return targets.size(); }
};

using Matrix = std::vector<std::vector<double>>; // row-major sample matrix

/// Parse a Yahoo CSV export. The header must name Date, Open, High, Low,
/// Close, Adj Close and Volume (any order, case-insensitive); extra columns
/// are ignored. "null" and empty cells become null markers.
/// Throws InputError on a missing column, an unparseable non-null field
/// (message carries the 1-based line number), or a file with no data rows.
std::vector<RawBar> parse_yahoo_csv(std::string_view text);

struct CleanResult {
    PriceSeries series;
    std::size_t dropped = 0;            // rows removed for null fields
    std::vector<std::string> warnings;  // soft OHLC-ordering violations
};

/// Drop every row with any null field, validate the survivors (finite
/// positive prices, non-negative volume, strictly increasing dates) and
/// warn -- never reject -- on OHLC ordering violations.
CleanResult drop_nulls(const std::vector<RawBar>& raw, std::string ticker);

/// Chronological split: train < boundary <= test. Throws InputError when
/// either side would be empty.
DataSplit split_chronological(const PriceSeries& series, Date boundary);

ScalerParams fit_minmax(const Matrix& train_rows);
Matrix apply_minmax(const ScalerParams& params, const Matrix& rows);
Matrix invert_minmax(const ScalerParams& params, const Matrix& scaled_rows);

// Single-column conveniences for univariate pipelines.
ScalerParams fit_minmax(const std::vector<double>& train_column);
std::vector<double> apply_minmax(const ScalerParams& params, const std::vector<double>& column);
std::vector<double> invert_minmax(const ScalerParams& params, const std::vector<double>& scaled);

/// Build len - window_len supervised samples. Throws InputError when the
/// sequence is not longer than the window.
WindowedDataset build_windows(const std::vector<double>& values, std::size_t window_len = 7);

/// Same-day feature rows for the multivariate models: open, high, low,
/// adj_close, volume -- plus close when include_close is set (literal
/// replication mode; close is otherwise excluded as target leakage).
Matrix feature_matrix(const PriceSeries& series, bool include_close = false);

/// Canonical CSV with the Yahoo schema, one row per cleaned bar.
std::string to_canonical_csv(const PriceSeries& series);

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double v);

} // namespace stockcast
