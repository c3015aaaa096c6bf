#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stockcast/errors.hpp"
#include "stockcast/eval.hpp"
#include "stockcast/smoothing.hpp"

#include <array>
#include <cmath>
#include <vector>

using namespace stockcast;

namespace {

// Independent oracle: the textbook additive recursions written out directly,
// kept deliberately separate from the library implementation.
struct OracleResult {
    std::vector<double> predictions; // one-step predictions for t >= m
    double sse = 0.0;
    double level = 0.0, trend = 0.0;
    std::vector<double> seasonal;
};

OracleResult oracle_fit(const std::vector<double>& x, double a, double b, double g, int m) {
    OracleResult r;
    const std::size_t mm = static_cast<std::size_t>(m);
    double level = 0.0;
    for (std::size_t i = 0; i < mm; ++i) level += x[i];
    level /= static_cast<double>(m);
    double trend = 0.0;
    for (std::size_t i = 0; i < mm; ++i) trend += (x[mm + i] - x[i]) / static_cast<double>(m);
    trend /= static_cast<double>(m);
    std::vector<double> seasonal(mm);
    for (std::size_t i = 0; i < mm; ++i) seasonal[i] = x[i] - level;

    for (std::size_t t = mm; t < x.size(); ++t) {
        const double s = seasonal[t % mm];
        const double pred = level + trend + s;
        r.predictions.push_back(pred);
        r.sse += (x[t] - pred) * (x[t] - pred);
        const double prev = level;
        level = a * (x[t] - s) + (1 - a) * (level + trend);
        trend = b * (level - prev) + (1 - b) * trend;
        seasonal[t % mm] = g * (x[t] - level) + (1 - g) * s;
    }
    r.level = level;
    r.trend = trend;
    r.seasonal = seasonal;
    return r;
}

std::vector<double> trend_seasonal_series(std::size_t n) {
    const double season[5] = {2.0, -1.0, 0.5, -2.5, 1.0};
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) {
        x[t] = 10.0 + 0.5 * static_cast<double>(t) + season[t % 5];
    }
    return x;
}

} // namespace

TEST_CASE("hw_init closed forms") {
    SUBCASE("constant series") {
        const std::vector<double> x(12, 4.2);
        const HwInitState init = hw_init(x, 5);
        CHECK(init.level == doctest::Approx(4.2));
        CHECK(init.trend == doctest::Approx(0.0));
        for (double s : init.seasonal) CHECK(s == doctest::Approx(0.0));
    }
    SUBCASE("pure ramp with m=2") {
        const std::vector<double> x = {0, 1, 2, 3};
        const HwInitState init = hw_init(x, 2);
        CHECK(init.level == doctest::Approx(0.5));
        CHECK(init.trend == doctest::Approx(1.0));
        REQUIRE(init.seasonal.size() == 2);
        CHECK(init.seasonal[0] == doctest::Approx(-0.5));
        CHECK(init.seasonal[1] == doctest::Approx(0.5));
    }
    SUBCASE("needs two full cycles") {
        CHECK_THROWS_AS(hw_init(std::vector<double>(9, 1.0), 5), InputError);
    }
}

TEST_CASE("hw_fit constant series is a fixed point with sse 0") {
    const std::vector<double> x(40, 7.0);
    for (double a : {0.0, 0.3, 1.0}) {
        const HwModel model = hw_fit(x, HwParams{a, 0.5, 0.2, 5});
        CHECK(model.sse == doctest::Approx(0.0));
        REQUIRE(model.fitted.size() == x.size());
        for (double f : model.fitted) CHECK(f == doctest::Approx(7.0));
    }
}

TEST_CASE("hw_fit with zero weights freezes the initial state") {
    const auto x = trend_seasonal_series(60);
    const HwModel model = hw_fit(x, HwParams{0, 0, 0, 5});
    const HwInitState init = hw_init(x, 5);
    // Prediction at t >= m is L0 + (t - m + 1) B0 + S0[t mod m].
    for (std::size_t t = 5; t < x.size(); ++t) {
        const double expected =
            init.level + static_cast<double>(t - 5 + 1) * init.trend + init.seasonal[t % 5];
        CHECK(model.fitted[t] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("hw_fit matches the independent recursion oracle") {
    const auto x = trend_seasonal_series(200);
    for (const auto& [a, b, g] :
         std::vector<std::array<double, 3>>{{0.3, 0.1, 0.2}, {0.9, 0.05, 0.7}, {1, 0, 1}}) {
        const HwModel model = hw_fit(x, HwParams{a, b, g, 5});
        const OracleResult oracle = oracle_fit(x, a, b, g, 5);
        REQUIRE(model.fitted.size() == x.size());
        for (std::size_t i = 0; i < oracle.predictions.size(); ++i) {
            CHECK(std::abs(model.fitted[i + 5] - oracle.predictions[i]) <= 1e-12);
        }
        CHECK(model.sse == doctest::Approx(oracle.sse).epsilon(1e-12));
        CHECK(model.level == doctest::Approx(oracle.level).epsilon(1e-12));
        CHECK(model.trend == doctest::Approx(oracle.trend).epsilon(1e-12));
    }
}

TEST_CASE("hw_fit predictions are reproducible bit for bit") {
    const auto x = trend_seasonal_series(120);
    const HwModel a = hw_fit(x, HwParams{0.42, 0.17, 0.33, 5});
    const HwModel b = hw_fit(x, HwParams{0.42, 0.17, 0.33, 5});
    CHECK(a.fitted == b.fitted);
    CHECK(a.sse == b.sse);
}

TEST_CASE("hw_optimize beats every coarse grid point and is deterministic") {
    const auto x = trend_seasonal_series(100);
    const HwParams best = hw_optimize(x, 5);
    const double best_sse = hw_fit(x, best).sse;

    // Exhaustive grid oracle.
    for (int ia = 0; ia <= 10; ++ia) {
        for (int ib = 0; ib <= 10; ++ib) {
            for (int ig = 0; ig <= 10; ++ig) {
                const double sse = hw_fit(x, {ia * 0.1, ib * 0.1, ig * 0.1, 5}).sse;
                CHECK(best_sse <= sse + 1e-9);
            }
        }
    }

    const HwParams again = hw_optimize(x, 5);
    CHECK(best.alpha == again.alpha);
    CHECK(best.beta == again.beta);
    CHECK(best.gamma == again.gamma);
}

TEST_CASE("hw_optimize on a constant series takes the smallest grid point") {
    const std::vector<double> x(30, 3.0);
    const HwParams params = hw_optimize(x, 5);
    CHECK(params.alpha == 0.0);
    CHECK(params.beta == 0.0);
    CHECK(params.gamma == 0.0);
}

TEST_CASE("hw_forecast closed forms") {
    HwModel model;
    model.params = {0.5, 0.5, 0.5, 5};
    model.n_train = 100; // multiple of 5 keeps the cycle aligned below
    SUBCASE("pure trend") {
        model.level = 10;
        model.trend = 1;
        model.seasonal = {0, 0, 0, 0, 0};
        const auto f = hw_forecast(model, 3);
        REQUIRE(f.size() == 3);
        CHECK(f[0] == doctest::Approx(11));
        CHECK(f[1] == doctest::Approx(12));
        CHECK(f[2] == doctest::Approx(13));
    }
    SUBCASE("pure season replays the cycle in alignment order") {
        model.level = 0;
        model.trend = 0;
        model.seasonal = {1, 2, 3, 4, 5};
        const auto f = hw_forecast(model, 5);
        CHECK(f == std::vector<double>{1, 2, 3, 4, 5});
    }
    SUBCASE("forecast linear in state") {
        model.level = 4;
        model.trend = 0.5;
        model.seasonal = {0, 0, 0, 0, 0};
        const auto f1 = hw_forecast(model, 10);
        model.level *= 2;
        model.trend *= 2;
        const auto f2 = hw_forecast(model, 10);
        for (std::size_t i = 0; i < f1.size(); ++i) {
            CHECK(f2[i] == doctest::Approx(2 * f1[i]).epsilon(1e-12));
        }
    }
    SUBCASE("horizon must be positive") {
        model.seasonal = {0, 0, 0, 0, 0};
        CHECK_THROWS_AS(hw_forecast(model, 0), std::invalid_argument);
    }
}

TEST_CASE("static 50-step forecast on trend+seasonal data is accurate") {
    const auto x = trend_seasonal_series(250);
    const std::vector<double> train(x.begin(), x.begin() + 200);
    const std::vector<double> test(x.begin() + 200, x.begin() + 250);

    const HwParams params = hw_optimize(train, 5);
    const HwModel model = hw_fit(train, params);
    const auto forecast = hw_forecast(model, 50);

    const double ratio = ratio_metric(rmse(test, forecast), mean(test));
    CHECK(ratio < 0.01);
}

TEST_CASE("rolling predictions track a continuation one step at a time") {
    const auto x = trend_seasonal_series(260);
    const std::vector<double> train(x.begin(), x.begin() + 200);
    const std::vector<double> test(x.begin() + 200, x.end());

    const HwModel model = hw_fit(train, hw_optimize(train, 5));
    const auto rolled = hw_roll(model, test);
    REQUIRE(rolled.size() == test.size());
    // One-step predictions with state updates stay accurate throughout.
    CHECK(rmse(test, rolled) / mean(test) < 0.01);

    // First rolled value equals the first static forecast (same state).
    CHECK(rolled[0] == doctest::Approx(hw_forecast(model, 1)[0]).epsilon(1e-12));
}

TEST_CASE("hw_fit rejects bad inputs") {
    CHECK_THROWS_AS(hw_fit({1, 2, 3}, HwParams{0.5, 0.5, 0.5, 5}), InputError);
    CHECK_THROWS_AS(hw_fit(std::vector<double>(20, 1.0), HwParams{1.5, 0, 0, 5}),
                    std::invalid_argument);
    std::vector<double> with_nan(20, 1.0);
    with_nan[10] = std::nan("");
    CHECK_THROWS_AS(hw_fit(with_nan, HwParams{0.5, 0.5, 0.5, 5}), ModelError);
}
