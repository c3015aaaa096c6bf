#include "stockcast/smoothing.hpp"

#include "stockcast/errors.hpp"
#include "stockcast/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stockcast {

namespace {

void check_params(const HwParams& p) {
    if (p.period < 2) throw std::invalid_argument("Holt-Winters period must be >= 2");
    for (double w : {p.alpha, p.beta, p.gamma}) {
        if (!(w >= 0.0 && w <= 1.0)) {
            throw std::invalid_argument("Holt-Winters weights must lie in [0, 1]");
        }
    }
}

} // namespace

HwInitState hw_init(const std::vector<double>& train, int period) {
    if (period < 2) throw std::invalid_argument("Holt-Winters period must be >= 2");
    const std::size_t m = static_cast<std::size_t>(period);
    if (train.size() < 2 * m) {
        throw InputError("Holt-Winters needs at least two full cycles (" +
                         std::to_string(2 * m) + " values), got " +
                         std::to_string(train.size()));
    }

    HwInitState init;
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += train[i];
    init.level = sum / static_cast<double>(m);

    double slope = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        slope += (train[m + i] - train[i]) / static_cast<double>(m);
    }
    init.trend = slope / static_cast<double>(m);

    init.seasonal.resize(m);
    for (std::size_t i = 0; i < m; ++i) init.seasonal[i] = train[i] - init.level;
    return init;
}

HwModel hw_fit(const std::vector<double>& train, const HwParams& params) {
    check_params(params);
    const HwInitState init = hw_init(train, params.period);
    const std::size_t m = static_cast<std::size_t>(params.period);
    const std::size_t n = train.size();

    HwModel model;
    model.params = params;
    model.level = init.level;
    model.trend = init.trend;
    model.seasonal = init.seasonal;
    model.n_train = n;
    model.fitted.resize(n);
    model.sse = 0.0;

    // The initial state describes the first cycle; back-project it there.
    for (std::size_t t = 0; t < m; ++t) {
        model.fitted[t] = init.level + init.seasonal[t];
    }

    const double a = params.alpha, b = params.beta, g = params.gamma;
    for (std::size_t t = m; t < n; ++t) {
        const double x = train[t];
        if (!std::isfinite(x)) {
            throw ModelError("Holt-Winters: non-finite input at index " + std::to_string(t));
        }
        const double season = model.seasonal[t % m];
        const double prediction = model.level + model.trend + season;
        model.fitted[t] = prediction;
        const double err = x - prediction;
        model.sse += err * err;

        const double prev_level = model.level;
        model.level = a * (x - season) + (1.0 - a) * (model.level + model.trend);
        model.trend = b * (model.level - prev_level) + (1.0 - b) * model.trend;
        model.seasonal[t % m] = g * (x - model.level) + (1.0 - g) * season;
    }
    return model;
}

HwParams hw_optimize(const std::vector<double>& train, int period) {
    HwParams best;
    best.period = period;
    double best_sse = std::numeric_limits<double>::infinity();

    // Coarse grid, ascending order so ties keep the lexicographically
    // smallest point.
    for (int ia = 0; ia <= 10; ++ia) {
        for (int ib = 0; ib <= 10; ++ib) {
            for (int ig = 0; ig <= 10; ++ig) {
                HwParams p{ia * 0.1, ib * 0.1, ig * 0.1, period};
                const double sse = hw_fit(train, p).sse;
                if (sse < best_sse) {
                    best_sse = sse;
                    best = p;
                }
            }
        }
    }

    NelderMeadOptions opts;
    opts.lower = {0.0, 0.0, 0.0};
    opts.upper = {1.0, 1.0, 1.0};
    opts.init_step = 0.05;
    const auto refined = nelder_mead(
        [&](const std::vector<double>& w) {
            return hw_fit(train, HwParams{w[0], w[1], w[2], period}).sse;
        },
        {best.alpha, best.beta, best.gamma}, opts);

    if (refined.fx < best_sse) {
        best.alpha = refined.x[0];
        best.beta = refined.x[1];
        best.gamma = refined.x[2];
    }
    return best;
}

std::vector<double> hw_forecast(const HwModel& model, std::size_t horizon) {
    if (horizon < 1) throw std::invalid_argument("hw_forecast: horizon must be >= 1");
    const std::size_t m = model.seasonal.size();
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t k = 1; k <= horizon; ++k) {
        const double season = model.seasonal[(model.n_train + k - 1) % m];
        out.push_back(model.level + static_cast<double>(k) * model.trend + season);
    }
    return out;
}

std::vector<double> hw_roll(const HwModel& model, const std::vector<double>& observed) {
    const std::size_t m = model.seasonal.size();
    const double a = model.params.alpha, b = model.params.beta, g = model.params.gamma;

    double level = model.level;
    double trend = model.trend;
    std::vector<double> seasonal = model.seasonal;

    std::vector<double> out;
    out.reserve(observed.size());
    for (std::size_t k = 0; k < observed.size(); ++k) {
        const std::size_t pos = (model.n_train + k) % m;
        const double season = seasonal[pos];
        out.push_back(level + trend + season);

        const double x = observed[k];
        const double prev_level = level;
        level = a * (x - season) + (1.0 - a) * (level + trend);
        trend = b * (level - prev_level) + (1.0 - b) * trend;
        seasonal[pos] = g * (x - level) + (1.0 - g) * season;
    }
    return out;
}

} // namespace stockcast
