#include "stockcast/backtest.hpp"

#include "stockcast/arima.hpp"
#include "stockcast/errors.hpp"
#include "stockcast/mars.hpp"
#include "stockcast/neural.hpp"
#include "stockcast/smoothing.hpp"
#include "stockcast/trees.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

namespace stockcast {

namespace {

std::vector<Date> dates_of(const PriceSeries& s, std::size_t from = 0) {
    std::vector<Date> out;
    out.reserve(s.bars.size() - from);
    for (std::size_t i = from; i < s.bars.size(); ++i) out.push_back(s.bars[i].date);
    return out;
}

void run_hw(const DataSplit& split, const RunConfig& config, BacktestOutcome& out) {
    const std::vector<double> train = split.train.closes();
    const std::vector<double> test = split.test.closes();

    HwParams params;
    if (config.hw.alpha && config.hw.beta && config.hw.gamma) {
        params = {*config.hw.alpha, *config.hw.beta, *config.hw.gamma, config.hw.period};
    } else {
        params = hw_optimize(train, config.hw.period);
    }
    const HwModel model = hw_fit(train, params);

    out.train_dates = dates_of(split.train);
    out.train_actual = train;
    out.train_pred = model.fitted;
    out.test_dates = dates_of(split.test);
    out.test_actual = test;
    out.test_pred = config.hw.mode == "rolling" ? hw_roll(model, test)
                                                : hw_forecast(model, test.size());
    char note[160];
    std::snprintf(note, sizeof(note),
                  "holt-winters additive: alpha=%.4f beta=%.4f gamma=%.4f period=%d mode=%s",
                  params.alpha, params.beta, params.gamma, params.period,
                  config.hw.mode.c_str());
    out.notes.push_back(note);
}

void run_arima(const DataSplit& split, const RunConfig& config, BacktestOutcome& out) {
    const std::vector<double> train = split.train.closes();
    const std::vector<double> test = split.test.closes();

    AutoArimaOptions opts{config.arima.p_max, config.arima.d_max, config.arima.q_max};
    const AutoArimaResult selected = auto_arima(train, opts);
    const ArimaFit& fit = selected.fit;

    const FittedValues fitted = arima_fitted(fit, train);
    out.train_dates = dates_of(split.train, fitted.first_index);
    out.train_actual.assign(train.begin() + static_cast<std::ptrdiff_t>(fitted.first_index),
                            train.end());
    out.train_pred = fitted.values;

    out.test_dates = dates_of(split.test);
    out.test_actual = test;
    if (config.arima.mode == "static") {
        out.test_pred = arima_forecast(fit, train, test.size(), ForecastMode::Static);
    } else {
        std::vector<double> full = train;
        full.insert(full.end(), test.begin(), test.end());
        out.test_pred = arima_forecast(fit, full, test.size(), ForecastMode::Rolling);
    }

    std::string note = "arima order " + fit.order.str() + ": aic=" + format_double(fit.aic) +
                       " mode=" + config.arima.mode;
    out.notes.push_back(note);
    out.notes.push_back("adf stat " + format_double(selected.stationarity.adf.statistic) +
                        ", kpss stat " + format_double(selected.stationarity.kpss.statistic));
    for (const auto& w : fit.warnings) out.notes.push_back("warning: " + w);
}

struct ScaledFeatures {
    Matrix x_train, x_test;
    std::vector<double> y_train; // scaled
    ScalerParams x_params, y_params;
};

ScaledFeatures prepare_features(const DataSplit& split, bool include_close) {
    ScaledFeatures f;
    const Matrix x_train_raw = feature_matrix(split.train, include_close);
    const Matrix x_test_raw = feature_matrix(split.test, include_close);
    f.x_params = fit_minmax(x_train_raw);
    f.x_train = apply_minmax(f.x_params, x_train_raw);
    f.x_test = apply_minmax(f.x_params, x_test_raw);
    f.y_params = fit_minmax(split.train.closes());
    f.y_train = apply_minmax(f.y_params, split.train.closes());
    return f;
}

void run_forest(const DataSplit& split, const RunConfig& config, BacktestOutcome& out,
                const std::string& model_dir) {
    const ScaledFeatures f = prepare_features(split, config.trees.include_close);

    ForestParams params;
    params.n_trees = config.trees.n_trees;
    params.max_depth = config.trees.max_depth;
    params.min_samples_leaf = config.trees.min_samples_leaf;
    params.max_features = config.trees.max_features;
    params.bootstrap = config.trees.bootstrap;
    params.seed = config.seed;
    const RandomForest forest = fit_forest(f.x_train, f.y_train, params);

    std::vector<double> train_scaled, test_scaled;
    for (const auto& row : f.x_train) train_scaled.push_back(predict_forest(forest, row));
    for (const auto& row : f.x_test) test_scaled.push_back(predict_forest(forest, row));

    out.train_dates = dates_of(split.train);
    out.train_actual = split.train.closes();
    out.train_pred = invert_minmax(f.y_params, train_scaled);
    out.test_dates = dates_of(split.test);
    out.test_actual = split.test.closes();
    out.test_pred = invert_minmax(f.y_params, test_scaled);
    out.notes.push_back("random forest: " + std::to_string(params.n_trees) + " trees, seed " +
                        std::to_string(params.seed) +
                        (config.trees.include_close ? ", close included as feature" : ""));

    if (!model_dir.empty()) {
        std::ofstream file(std::filesystem::path(model_dir) / "forest.json");
        file << forest_to_json(forest);
    }
}

void run_mars(const DataSplit& split, const RunConfig& config, BacktestOutcome& out,
              const std::string& model_dir) {
    const ScaledFeatures f = prepare_features(split, config.mars.include_close);

    MarsConfig mc;
    mc.max_terms = config.mars.max_terms;
    mc.max_degree = config.mars.max_degree;
    mc.penalty = config.mars.penalty;
    mc.max_knots = config.mars.max_knots;
    const MarsModel model = backward_pass(forward_pass(f.x_train, f.y_train, mc), f.x_train,
                                          f.y_train);

    std::vector<double> train_scaled, test_scaled;
    for (const auto& row : f.x_train) train_scaled.push_back(mars_predict(model, row));
    for (const auto& row : f.x_test) test_scaled.push_back(mars_predict(model, row));

    out.train_dates = dates_of(split.train);
    out.train_actual = split.train.closes();
    out.train_pred = invert_minmax(f.y_params, train_scaled);
    out.test_dates = dates_of(split.test);
    out.test_actual = split.test.closes();
    out.test_pred = invert_minmax(f.y_params, test_scaled);
    out.notes.push_back("mars: " + std::to_string(model.terms.size()) + " terms after pruning, gcv " +
                        format_double(model.gcv));

    if (!model_dir.empty()) {
        std::ofstream file(std::filesystem::path(model_dir) / "mars.json");
        file << mars_to_json(model);
    }
}

void run_neural(const DataSplit& split, const RunConfig& config, BacktestOutcome& out,
                const std::string& model_dir) {
    const std::vector<double> train_closes = split.train.closes();
    const std::vector<double> test_closes = split.test.closes();

    const ScalerParams scaler = fit_minmax(train_closes);
    const std::vector<double> train_scaled = apply_minmax(scaler, train_closes);
    const std::vector<double> test_scaled = apply_minmax(scaler, test_closes);

    NetSpec spec;
    const std::string kind = config.nn.kind.empty() ? config.model : config.nn.kind;
    spec.kind = kind == "rnn" ? CellKind::Rnn : CellKind::Lstm;
    spec.widths = config.nn.widths;
    spec.dropout = config.nn.dropout;
    spec.window_len = 7;
    spec.n_features = 1;

    const WindowedDataset train_windows = build_windows(train_scaled, 7);
    const WindowedDataset test_windows = build_windows(test_scaled, 7);

    TrainConfig tc;
    tc.epochs = config.nn.epochs;
    tc.batch_size = config.nn.batch;
    tc.lr = config.nn.lr;
    tc.seed = config.nn.seed.value_or(config.seed);
    const TrainResult trained = train(spec, train_windows, tc);

    const std::size_t w = train_windows.window_len;
    out.train_dates = dates_of(split.train, w);
    out.train_actual.assign(train_closes.begin() + static_cast<std::ptrdiff_t>(w),
                            train_closes.end());
    out.train_pred = invert_minmax(scaler, predict_series(trained.net, train_windows.inputs));
    out.test_dates = dates_of(split.test, w);
    out.test_actual.assign(test_closes.begin() + static_cast<std::ptrdiff_t>(w),
                           test_closes.end());
    out.test_pred = invert_minmax(scaler, predict_series(trained.net, test_windows.inputs));

    char note[200];
    std::snprintf(note, sizeof(note),
                  "%s: widths %s, dropout %.2f, %d epochs, batch %d, lr %g, seed %llu, "
                  "final train rmse (scaled) %.6f",
                  config.model.c_str(),
                  [&] {
                      std::string s;
                      for (int width : spec.widths) s += (s.empty() ? "" : "/") + std::to_string(width);
                      return s;
                  }()
                      .c_str(),
                  spec.dropout, tc.epochs, tc.batch_size, tc.lr,
                  static_cast<unsigned long long>(tc.seed), trained.epoch_rmse.back());
    out.notes.push_back(note);

    if (!model_dir.empty()) save_network(trained.net, model_dir);
}

} // namespace

BacktestOutcome run_backtest(const PriceSeries& series, const RunConfig& config) {
    const DataSplit split = split_chronological(series, config.boundary);

    BacktestOutcome out;
    const std::string model_dir =
        config.save_model && !config.out_dir.empty() ? config.out_dir : "";
    if (!model_dir.empty()) std::filesystem::create_directories(model_dir);

    if (config.model == "hw") {
        run_hw(split, config, out);
    } else if (config.model == "arima") {
        run_arima(split, config, out);
    } else if (config.model == "rf") {
        run_forest(split, config, out, model_dir);
    } else if (config.model == "mars") {
        run_mars(split, config, out, model_dir);
    } else if (config.model == "rnn" || config.model == "lstm") {
        run_neural(split, config, out, model_dir);
    } else {
        throw InputError("unknown model '" + config.model +
                         "' (expected hw|arima|rf|mars|rnn|lstm)");
    }

    out.metrics = evaluate_model(config.model, config.ticker, out.train_actual, out.train_pred,
                                 out.test_actual, out.test_pred);
    return out;
}

std::string predictions_to_csv(const std::vector<Date>& dates, const std::vector<double>& actual,
                               const std::vector<double>& predicted) {
    if (dates.size() != actual.size() || dates.size() != predicted.size()) {
        throw std::invalid_argument("predictions_to_csv: length mismatch");
    }
    std::string out = "date,actual,predicted\n";
    for (std::size_t i = 0; i < dates.size(); ++i) {
        out += dates[i].str() + "," + format_double(actual[i]) + "," +
               format_double(predicted[i]) + "\n";
    }
    return out;
}

PredictionRows parse_predictions_csv(const std::string& text) {
    PredictionRows rows;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = end + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "date,actual,predicted") {
                throw InputError("predictions CSV must start with 'date,actual,predicted'");
            }
            header = false;
            continue;
        }
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw InputError("malformed predictions row: " + line);
        }
        rows.dates.push_back(line.substr(0, c1));
        double a = 0, p = 0;
        const char* s1 = line.data() + c1 + 1;
        const char* s2 = line.data() + c2 + 1;
        if (std::from_chars(s1, line.data() + c2, a).ec != std::errc{} ||
            std::from_chars(s2, line.data() + line.size(), p).ec != std::errc{}) {
            throw InputError("malformed predictions row: " + line);
        }
        rows.actual.push_back(a);
        rows.predicted.push_back(p);
    }
    if (header) throw InputError("empty predictions CSV");
    return rows;
}

} // namespace stockcast
