#pragma once

#include "stockcast/data.hpp"
#include "stockcast/eval.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stockcast {

struct HwRunConfig {
    std::optional<double> alpha, beta, gamma; // all three set = fixed weights; else optimized
    int period = 5;
    std::string mode = "static"; // "static" or "rolling"
};

struct ArimaRunConfig {
    int p_max = 5;
    int d_max = 2;
    int q_max = 5;
    std::string mode = "rolling";
};

struct TreesRunConfig {
    int n_trees = 100;
    int max_depth = 0;
    int min_samples_leaf = 1;
    double max_features = 1.0;
    bool include_close = false;
    bool bootstrap = true;
};

struct MarsRunConfig {
    int max_terms = 21;
    int max_degree = 1;
    double penalty = 3.0;
    int max_knots = 100;
    bool include_close = false;
};

struct NnRunConfig {
    std::string kind;  // "" = follow the model name; "rnn"/"lstm" overrides
    std::vector<int> widths{256, 128};
    double dropout = 0.2;
    int epochs = 100;
    int batch = 64;
    double lr = 0.001;
    std::optional<std::uint64_t> seed; // overrides the run-level seed
};

struct RunConfig {
    std::string ticker = "TICKER";
    std::string csv_path;            // input data; resolved by the CLI layer
    Date boundary{2019, 1, 1};
    std::string model;               // hw | arima | rf | mars | rnn | lstm
    std::uint64_t seed = 42;
    std::string out_dir;
    bool save_model = false;

    HwRunConfig hw;
    ArimaRunConfig arima;
    TreesRunConfig trees;
    MarsRunConfig mars;
    NnRunConfig nn;
};

/// Everything one model run produces. Train-side vectors are empty for
/// models without usable in-sample predictions; dates stay aligned with the
/// prediction vectors (neural models start at window_len, ARIMA at d+p).
struct BacktestOutcome {
    MetricReport metrics;
    std::vector<Date> train_dates;
    std::vector<double> train_actual, train_pred;
    std::vector<Date> test_dates;
    std::vector<double> test_actual, test_pred;
    std::vector<std::string> notes; // human-readable model details (order, params, ...)
};

/// Fit the selected model on the train side of the split and predict the
/// test segment following that model's protocol. Deterministic per
/// (series, config).
BacktestOutcome run_backtest(const PriceSeries& series, const RunConfig& config);

/// predictions.csv payload: "date,actual,predicted" rows.
std::string predictions_to_csv(const std::vector<Date>& dates, const std::vector<double>& actual,
                               const std::vector<double>& predicted);

struct PredictionRows {
    std::vector<std::string> dates;
    std::vector<double> actual, predicted;
};
PredictionRows parse_predictions_csv(const std::string& text);

} // namespace stockcast
