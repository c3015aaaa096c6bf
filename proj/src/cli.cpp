#include "stockcast/cli.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/eval.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace stockcast::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream file(path, std::ios::binary);
    if (!file) throw InputError("cannot write file: " + path.string());
    file << content;
}

std::string workspace_root() {
    const char* env = std::getenv("STOCKCAST_WORKSPACE");
    return env && *env ? env : "workspace";
}

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&now));
    return buf;
}

} // namespace

std::string IngestSummary::to_json() const {
    nlohmann::ordered_json j;
    j["ticker"] = ticker;
    j["rows_in"] = rows_in;
    j["rows_out"] = rows_out;
    j["dropped"] = dropped;
    j["first_date"] = first_date.str();
    j["last_date"] = last_date.str();
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

IngestSummary ingest(const std::string& csv_path, const std::string& ticker,
                     const std::string& out_dir) {
    const std::string text = read_file(csv_path);
    const auto raw = parse_yahoo_csv(text);
    const CleanResult clean = drop_nulls(raw, ticker);

    IngestSummary summary;
    summary.ticker = ticker;
    summary.rows_in = raw.size();
    summary.rows_out = clean.series.size();
    summary.dropped = clean.dropped;
    summary.first_date = clean.series.bars.front().date;
    summary.last_date = clean.series.bars.back().date;
    summary.warnings = clean.warnings;

    write_file(fs::path(out_dir) / (ticker + ".csv"), to_canonical_csv(clean.series));
    write_file(fs::path(out_dir) / (ticker + ".ingest.json"), summary.to_json());
    return summary;
}

BacktestOutcome backtest(const RunConfig& config) {
    const std::string text = read_file(config.csv_path);
    const CleanResult clean = drop_nulls(parse_yahoo_csv(text), config.ticker);
    const BacktestOutcome outcome = run_backtest(clean.series, config);

    const fs::path out_dir(config.out_dir);
    write_file(out_dir / "predictions.csv",
               predictions_to_csv(outcome.test_dates, outcome.test_actual, outcome.test_pred));
    if (!outcome.train_pred.empty()) {
        write_file(out_dir / "fitted_train.csv",
                   predictions_to_csv(outcome.train_dates, outcome.train_actual,
                                      outcome.train_pred));
    }
    write_file(out_dir / "metrics.json", metric_report_to_json(outcome.metrics));
    return outcome;
}

std::string compare(const std::string& report_dir, const std::string& out_dir) {
    if (!fs::exists(report_dir)) throw InputError("report directory not found: " + report_dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(report_dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "metrics.json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no metrics.json files below " + report_dir);

    std::vector<MetricReport> reports;
    reports.reserve(files.size());
    for (const auto& file : files) reports.push_back(metric_report_from_json(read_file(file)));

    const ComparisonTable table = comparison_table(reports);
    write_file(fs::path(out_dir) / "comparison.csv", table.to_csv());
    const std::string text = table.to_text();
    write_file(fs::path(out_dir) / "comparison.txt", text);
    return text;
}

std::string render_svg(const PredictionRows& rows) {
    const int width = 900, height = 420;
    const int ml = 70, mr = 20, mt = 20, mb = 45;
    const double plot_w = width - ml - mr, plot_h = height - mt - mb;

    double lo = rows.actual[0], hi = rows.actual[0];
    for (double v : rows.actual) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : rows.predicted) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1.0;

    const std::size_t n = rows.actual.size();
    auto x_at = [&](std::size_t i) {
        return ml + (n == 1 ? plot_w / 2 : plot_w * static_cast<double>(i) /
                                               static_cast<double>(n - 1));
    };
    auto y_at = [&](double v) { return mt + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    auto polyline = [&](const std::vector<double>& series, const char* color) {
        std::string points;
        char buf[48];
        for (std::size_t i = 0; i < n; ++i) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x_at(i), y_at(series[i]));
            points += buf;
        }
        if (!points.empty()) points.pop_back();
        return "  <polyline fill=\"none\" stroke=\"" + std::string(color) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    };

    char buf[256];
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", ml,
                  mt, ml, height - mb);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"black\"/>\n", ml,
                  height - mb, width - mr, height - mb);
    svg += buf;
    svg += polyline(rows.actual, "#1f77b4");
    svg += polyline(rows.predicted, "#ff7f0e");

    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%d\" y=\"%d\" font-size=\"12\">%s</text>\n", ml,
                  height - mb + 28, rows.dates.front().c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%d\" y=\"%d\" font-size=\"12\" text-anchor=\"end\">%s</text>\n",
                  width - mr, height - mb + 28, rows.dates.back().c_str());
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%d\" y=\"%d\" font-size=\"12\" text-anchor=\"end\">%.2f</text>\n",
                  ml - 6, height - mb, lo);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%d\" y=\"%d\" font-size=\"12\" text-anchor=\"end\">%.2f</text>\n",
                  ml - 6, mt + 10, hi);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%d\" y=\"14\" font-size=\"12\" fill=\"#1f77b4\">actual</text>\n",
                  ml);
    svg += buf;
    std::snprintf(
        buf, sizeof(buf),
        "  <text x=\"%d\" y=\"14\" font-size=\"12\" fill=\"#ff7f0e\">predicted</text>\n",
        ml + 60);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%d\" y=\"%d\" font-size=\"12\">date</text>\n",
                  ml + static_cast<int>(plot_w / 2), height - 8);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"14\" y=\"%d\" font-size=\"12\" transform=\"rotate(-90 14 %d)\">"
                  "price</text>\n",
                  mt + static_cast<int>(plot_h / 2), mt + static_cast<int>(plot_h / 2));
    svg += buf;
    svg += "</svg>\n";
    return svg;
}

void plot(const std::string& predictions_csv, const std::string& out_dir) {
    const std::string text = read_file(predictions_csv);
    const PredictionRows rows = parse_predictions_csv(text); // validates the payload
    write_file(fs::path(out_dir) / "plot.csv", text);
    write_file(fs::path(out_dir) / "plot.svg", render_svg(rows));
}

void fetch(const std::string& ticker, const std::string& from, const std::string& to,
           const std::string& url_template, const std::string& out_path) {
    std::string url = url_template;
    auto substitute = [&](const std::string& key, const std::string& value) {
        for (std::size_t pos; (pos = url.find(key)) != std::string::npos;) {
            url.replace(pos, key.size(), value);
        }
    };
    substitute("{ticker}", ticker);
    substitute("{from}", from);
    substitute("{to}", to);

    if (url.rfind("http://", 0) != 0) {
        throw NetworkError("only plain http:// URLs are supported, got: " + url);
    }
    const std::size_t host_start = 7;
    const std::size_t path_start = url.find('/', host_start);
    const std::string host_port =
        url.substr(host_start, (path_start == std::string::npos ? url.size() : path_start) -
                                   host_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(("http://" + host_port).c_str());
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    const httplib::Result response = client.Get(path.c_str());
    if (!response) {
        throw NetworkError("request to " + host_port + " failed: " +
                           httplib::to_string(response.error()));
    }
    if (response->status != 200) {
        throw NetworkError("HTTP " + std::to_string(response->status) + " from " + url);
    }

    write_file(out_path, response->body);
    try {
        parse_yahoo_csv(response->body);
    } catch (const InputError& e) {
        std::cerr << "warning: saved payload does not parse as a Yahoo CSV: " << e.what()
                  << "\n";
    }
}

namespace {

void load_config_file(const std::string& path, RunConfig& config) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config file " + path + ": " + e.what());
    }
    try {
        if (j.contains("ticker")) config.ticker = j["ticker"].get<std::string>();
        if (j.contains("csv")) config.csv_path = j["csv"].get<std::string>();
        if (j.contains("boundary")) config.boundary = Date::parse(j["boundary"].get<std::string>());
        if (j.contains("model")) config.model = j["model"].get<std::string>();
        if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("out")) config.out_dir = j["out"].get<std::string>();
        if (j.contains("hw")) {
            const auto& h = j["hw"];
            if (h.contains("alpha")) config.hw.alpha = h["alpha"].get<double>();
            if (h.contains("beta")) config.hw.beta = h["beta"].get<double>();
            if (h.contains("gamma")) config.hw.gamma = h["gamma"].get<double>();
            if (h.contains("period")) config.hw.period = h["period"].get<int>();
            if (h.contains("mode")) config.hw.mode = h["mode"].get<std::string>();
        }
        if (j.contains("arima")) {
            const auto& a = j["arima"];
            if (a.contains("p_max")) config.arima.p_max = a["p_max"].get<int>();
            if (a.contains("d_max")) config.arima.d_max = a["d_max"].get<int>();
            if (a.contains("q_max")) config.arima.q_max = a["q_max"].get<int>();
            if (a.contains("mode")) config.arima.mode = a["mode"].get<std::string>();
        }
        if (j.contains("trees")) {
            const auto& t = j["trees"];
            if (t.contains("n_trees")) config.trees.n_trees = t["n_trees"].get<int>();
            if (t.contains("max_depth")) config.trees.max_depth = t["max_depth"].get<int>();
            if (t.contains("min_samples_leaf")) {
                config.trees.min_samples_leaf = t["min_samples_leaf"].get<int>();
            }
            if (t.contains("max_features")) config.trees.max_features = t["max_features"].get<double>();
            if (t.contains("include_close")) config.trees.include_close = t["include_close"].get<bool>();
            if (t.contains("bootstrap")) config.trees.bootstrap = t["bootstrap"].get<bool>();
        }
        if (j.contains("mars")) {
            const auto& m = j["mars"];
            if (m.contains("max_terms")) config.mars.max_terms = m["max_terms"].get<int>();
            if (m.contains("max_degree")) config.mars.max_degree = m["max_degree"].get<int>();
            if (m.contains("penalty")) config.mars.penalty = m["penalty"].get<double>();
            if (m.contains("max_knots")) config.mars.max_knots = m["max_knots"].get<int>();
            if (m.contains("include_close")) config.mars.include_close = m["include_close"].get<bool>();
        }
        if (j.contains("nn")) {
            const auto& n = j["nn"];
            if (n.contains("kind")) config.nn.kind = n["kind"].get<std::string>();
            if (n.contains("widths")) config.nn.widths = n["widths"].get<std::vector<int>>();
            if (n.contains("dropout")) config.nn.dropout = n["dropout"].get<double>();
            if (n.contains("epochs")) config.nn.epochs = n["epochs"].get<int>();
            if (n.contains("batch")) config.nn.batch = n["batch"].get<int>();
            if (n.contains("lr")) config.nn.lr = n["lr"].get<double>();
            if (n.contains("seed")) config.nn.seed = n["seed"].get<std::uint64_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config file " + path + ": " + e.what());
    }
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"stockcast: OHLCV forecasting models and backtests"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "clean a raw Yahoo CSV into the workspace");
    std::string in_csv, in_ticker = "TICKER";
    std::string in_out = workspace_root();
    ingest_cmd->add_option("--csv", in_csv, "raw Yahoo-format CSV")->required();
    ingest_cmd->add_option("--ticker", in_ticker, "ticker label");
    ingest_cmd->add_option("--out", in_out, "output directory (default: workspace)");

    // backtest
    auto* bt_cmd = app.add_subcommand("backtest", "fit one model and predict the test segment");
    std::string bt_config, bt_model, bt_csv, bt_ticker, bt_boundary, bt_out;
    std::optional<std::uint64_t> bt_seed;
    std::vector<int> bt_widths;
    std::optional<int> bt_epochs;
    bool bt_save_model = false;
    bt_cmd->add_option("--config", bt_config, "JSON config file");
    bt_cmd->add_option("--model", bt_model, "hw|arima|rf|mars|rnn|lstm");
    bt_cmd->add_option("--csv", bt_csv, "input CSV (raw or canonical)");
    bt_cmd->add_option("--ticker", bt_ticker, "ticker label / workspace key");
    bt_cmd->add_option("--boundary", bt_boundary, "train/test boundary date (YYYY-MM-DD)");
    bt_cmd->add_option("--seed", bt_seed, "random seed");
    bt_cmd->add_option("--out", bt_out, "output directory");
    bt_cmd->add_option("--nn-widths", bt_widths, "recurrent layer widths override");
    bt_cmd->add_option("--nn-epochs", bt_epochs, "training epochs override");
    bt_cmd->add_flag("--save-model", bt_save_model, "serialize the fitted model artifact");

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "tabulate metrics.json reports");
    std::string cmp_dir, cmp_out;
    cmp_cmd->add_option("--dir", cmp_dir, "directory scanned recursively")->required();
    cmp_cmd->add_option("--out", cmp_out, "output directory (default: --dir)");

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "emit plot data and an SVG chart");
    std::string plot_in, plot_out = ".";
    plot_cmd->add_option("--predictions", plot_in, "predictions.csv")->required();
    plot_cmd->add_option("--out", plot_out, "output directory");

    // fetch
    auto* fetch_cmd = app.add_subcommand("fetch", "download a raw CSV (never auto-ingested)");
    std::string f_ticker, f_from = "2004-01-01", f_to = "2019-12-31", f_url, f_out;
    fetch_cmd->add_option("--ticker", f_ticker, "ticker symbol")->required();
    fetch_cmd->add_option("--from", f_from, "range start");
    fetch_cmd->add_option("--to", f_to, "range end");
    fetch_cmd->add_option("--url-template", f_url,
                          "http URL with {ticker}/{from}/{to} placeholders")
        ->required();
    fetch_cmd->add_option("--out", f_out, "destination file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (ingest_cmd->parsed()) {
        const IngestSummary summary = ingest(in_csv, in_ticker, in_out);
        for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << summary.to_json();
        return 0;
    }

    if (bt_cmd->parsed()) {
        RunConfig config;
        if (!bt_config.empty()) load_config_file(bt_config, config);
        if (!bt_model.empty()) config.model = bt_model;
        if (!bt_csv.empty()) config.csv_path = bt_csv;
        if (!bt_ticker.empty()) config.ticker = bt_ticker;
        if (!bt_boundary.empty()) config.boundary = Date::parse(bt_boundary);
        if (bt_seed) config.seed = *bt_seed;
        if (!bt_out.empty()) config.out_dir = bt_out;
        if (!bt_widths.empty()) config.nn.widths = bt_widths;
        if (bt_epochs) config.nn.epochs = *bt_epochs;
        config.save_model = config.save_model || bt_save_model;

        if (config.model.empty()) throw InputError("backtest: --model is required");
        if (config.csv_path.empty()) {
            config.csv_path =
                (fs::path(workspace_root()) / (config.ticker + ".csv")).string();
        }
        if (config.out_dir.empty()) {
            config.out_dir = (fs::path(workspace_root()) / config.ticker / config.model /
                              timestamp_now())
                                 .string();
        }

        const BacktestOutcome outcome = backtest(config);
        for (const auto& note : outcome.notes) std::cerr << note << "\n";
        std::cout << metric_report_to_json(outcome.metrics);
        std::cerr << "wrote " << config.out_dir << "/predictions.csv and metrics.json\n";
        return 0;
    }

    if (cmp_cmd->parsed()) {
        std::cout << compare(cmp_dir, cmp_out.empty() ? cmp_dir : cmp_out);
        return 0;
    }

    if (plot_cmd->parsed()) {
        plot(plot_in, plot_out);
        return 0;
    }

    if (fetch_cmd->parsed()) {
        fetch(f_ticker, f_from, f_to, f_url, f_out);
        std::cout << "saved " << f_out << "\n";
        return 0;
    }
    return 2;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        return dispatch(args);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NetworkError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace stockcast::cli
