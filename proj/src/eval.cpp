#include "stockcast/eval.hpp"

#include "stockcast/data.hpp"
#include "stockcast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include <json.hpp>

namespace stockcast {

namespace {

const char* kModelOrder[] = {"hw", "arima", "rf", "mars", "rnn", "lstm"};

} // namespace

int model_order(const std::string& model) {
    for (int i = 0; i < 6; ++i) {
        if (model == kModelOrder[i]) return i;
    }
    return 6;
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double rmse(const std::vector<double>& actual, const std::vector<double>& predicted) {
    if (actual.empty()) throw std::invalid_argument("rmse: empty input");
    if (actual.size() != predicted.size()) {
        throw std::invalid_argument("rmse: length mismatch (" + std::to_string(actual.size()) +
                                    " vs " + std::to_string(predicted.size()) + ")");
    }
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sum_sq += e * e;
    }
    return std::sqrt(sum_sq / static_cast<double>(actual.size()));
}

double ratio_metric(double rmse_value, double segment_mean) {
    if (!(segment_mean > 0.0)) {
        throw std::invalid_argument("ratio_metric: segment mean must be positive");
    }
    return rmse_value / segment_mean;
}

MetricReport evaluate_model(const std::string& model, const std::string& ticker,
                            const std::vector<double>& y_train,
                            const std::vector<double>& yhat_train,
                            const std::vector<double>& y_test,
                            const std::vector<double>& yhat_test) {
    MetricReport report;
    report.model = model;
    report.ticker = ticker;
    if (!y_train.empty()) {
        report.rmse_train = rmse(y_train, yhat_train);
        report.ratio_train = ratio_metric(*report.rmse_train, mean(y_train));
    }
    report.rmse_test = rmse(y_test, yhat_test);
    report.ratio_test = ratio_metric(report.rmse_test, mean(y_test));
    return report;
}

ComparisonTable comparison_table(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw InputError("comparison_table: no reports");

    std::set<std::pair<std::string, std::string>> seen;
    std::vector<std::string> ticker_order;
    for (const auto& r : reports) {
        if (!seen.insert({r.ticker, r.model}).second) {
            throw InputError("duplicate report for (" + r.ticker + ", " + r.model + ")");
        }
        if (std::find(ticker_order.begin(), ticker_order.end(), r.ticker) == ticker_order.end()) {
            ticker_order.push_back(r.ticker);
        }
    }

    ComparisonTable table;
    for (const auto& ticker : ticker_order) {
        std::vector<const MetricReport*> group;
        for (const auto& r : reports) {
            if (r.ticker == ticker) group.push_back(&r);
        }
        std::stable_sort(group.begin(), group.end(),
                         [](const MetricReport* a, const MetricReport* b) {
                             const int oa = model_order(a->model), ob = model_order(b->model);
                             if (oa != ob) return oa < ob;
                             return a->model < b->model;
                         });
        std::size_t best = 0;
        for (std::size_t i = 1; i < group.size(); ++i) {
            if (group[i]->ratio_test < group[best]->ratio_test) best = i;
        }
        for (std::size_t i = 0; i < group.size(); ++i) {
            table.rows.push_back({ticker, group[i]->model, group[i]->ratio_test, i == best});
        }
    }
    return table;
}

std::string ComparisonTable::to_csv() const {
    std::string out = "ticker,model,ratio_test,best\n";
    for (const auto& row : rows) {
        out += row.ticker + "," + row.model + "," + format_double(row.ratio_test) + "," +
               (row.best ? "1" : "0") + "\n";
    }
    return out;
}

std::string ComparisonTable::to_text() const {
    std::size_t ticker_w = 6, model_w = 5;
    for (const auto& row : rows) {
        ticker_w = std::max(ticker_w, row.ticker.size());
        model_w = std::max(model_w, row.model.size());
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %10s  %s\n", static_cast<int>(ticker_w),
                  "ticker", static_cast<int>(model_w), "model", "ratio", "best");
    std::string out = buf;
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %-*s  %10.4f  %s\n", static_cast<int>(ticker_w),
                      row.ticker.c_str(), static_cast<int>(model_w), row.model.c_str(),
                      row.ratio_test, row.best ? "*" : "");
        out += buf;
    }
    return out;
}

std::string metric_report_to_json(const MetricReport& report) {
    nlohmann::ordered_json j;
    j["model"] = report.model;
    j["ticker"] = report.ticker;
    if (report.rmse_train) {
        j["rmse_train"] = *report.rmse_train;
        j["ratio_train"] = *report.ratio_train;
    } else {
        j["rmse_train"] = nullptr;
        j["ratio_train"] = nullptr;
    }
    j["rmse_test"] = report.rmse_test;
    j["ratio_test"] = report.ratio_test;
    return j.dump(2) + "\n";
}

MetricReport metric_report_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        MetricReport report;
        report.model = j.at("model").get<std::string>();
        report.ticker = j.at("ticker").get<std::string>();
        if (!j.at("rmse_train").is_null()) {
            report.rmse_train = j.at("rmse_train").get<double>();
            report.ratio_train = j.at("ratio_train").get<double>();
        }
        report.rmse_test = j.at("rmse_test").get<double>();
        report.ratio_test = j.at("ratio_test").get<double>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed metrics JSON: ") + e.what());
    }
}

} // namespace stockcast
