#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stockcast {

/// The accuracy numbers reported for one (model, ticker) run. Ratios are the
/// scale-free RMSE / mean-of-actual-close metric; the train side is absent
/// for models that produce no in-sample predictions.
struct MetricReport {
    std::string model;
    std::string ticker;
    std::optional<double> rmse_train;
    std::optional<double> ratio_train;
    double rmse_test = 0.0;
    double ratio_test = 0.0;
};

struct ComparisonRow {
    std::string ticker;
    std::string model;
    double ratio_test = 0.0;
    bool best = false; // argmin ratio_test within the ticker
};

/// Per-ticker, per-model ratio matrix in fixed model order (hw, arima, rf,
/// mars, rnn, lstm), tickers in first-seen order.
struct ComparisonTable {
    std::vector<ComparisonRow> rows;

    std::string to_csv() const;  // full-precision, lossless
    std::string to_text() const; // aligned columns, ratios to 4 decimals
};

/// Canonical model ordering used by reports; unknown names sort last,
/// alphabetically.
int model_order(const std::string& model);

double rmse(const std::vector<double>& actual, const std::vector<double>& predicted);

/// rmse_value / segment_mean; the mean must be positive.
double ratio_metric(double rmse_value, double segment_mean);

double mean(const std::vector<double>& values);

/// Build a full report. Pass empty train vectors for test-only models.
/// Means are taken over the actual values of each segment.
MetricReport evaluate_model(const std::string& model, const std::string& ticker,
                            const std::vector<double>& y_train,
                            const std::vector<double>& yhat_train,
                            const std::vector<double>& y_test,
                            const std::vector<double>& yhat_test);

/// Assemble the cross-model table; throws InputError on duplicate
/// (ticker, model) pairs. Input order does not affect the output.
ComparisonTable comparison_table(const std::vector<MetricReport>& reports);

std::string metric_report_to_json(const MetricReport& report);
MetricReport metric_report_from_json(const std::string& text);

} // namespace stockcast
