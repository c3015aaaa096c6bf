#pragma once

#include "stockcast/backtest.hpp"
#include "stockcast/data.hpp"

#include <string>
#include <vector>

namespace stockcast::cli {

// Exit code contract: 0 success, 1 model/numeric failure, 2 input error,
// 3 network error.

struct IngestSummary {
    std::string ticker;
    std::size_t rows_in = 0;
    std::size_t rows_out = 0;
    std::size_t dropped = 0;
    Date first_date, last_date;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

/// Read a raw Yahoo CSV, clean it, and write `<out_dir>/<ticker>.csv`
/// (canonical schema) plus `<out_dir>/<ticker>.ingest.json`.
IngestSummary ingest(const std::string& csv_path, const std::string& ticker,
                     const std::string& out_dir);

/// Load `config.csv_path`, run the model, and write `predictions.csv`,
/// `metrics.json`, and `fitted_train.csv` (when in-sample predictions exist)
/// under `config.out_dir`.
BacktestOutcome backtest(const RunConfig& config);

/// Collect every metrics.json below `report_dir` and write comparison.csv /
/// comparison.txt into `out_dir`; returns the rendered text table.
std::string compare(const std::string& report_dir, const std::string& out_dir);

/// Copy the predictions file to `<out_dir>/plot.csv` (byte-for-byte) and
/// render `<out_dir>/plot.svg` with actual and predicted polylines.
void plot(const std::string& predictions_csv, const std::string& out_dir);

/// Download one CSV. The template's {ticker}, {from} and {to} placeholders
/// are substituted literally; only plain http URLs are supported. The file
/// is saved even when the payload does not look like a Yahoo CSV (with a
/// warning); it is never auto-ingested.
void fetch(const std::string& ticker, const std::string& from, const std::string& to,
           const std::string& url_template, const std::string& out_path);

/// Render the two-series SVG line chart for (actual, predicted).
std::string render_svg(const PredictionRows& rows);

/// Full argv-level entry point used by the `stockcast` binary; maps
/// exceptions onto the exit-code contract.
int run_cli(const std::vector<std::string>& args);

} // namespace stockcast::cli
