#pragma once

#include <cstddef>
#include <vector>

namespace stockcast {

struct HwParams {
    double alpha = 0.0; // level weight
    double beta = 0.0;  // trend weight
    double gamma = 0.0; // seasonal weight
    int period = 5;     // trading week
};

struct HwInitState {
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> seasonal; // one offset per cycle position
};

/// Fitted additive Holt-Winters state. `fitted` holds one value per training
/// observation: genuine one-step predictions from t = m on, and the initial
/// state back-projected over the first cycle. `sse` accumulates over the
/// genuine predictions only (the init does not depend on the weights, so the
/// optimizer is unaffected either way).
struct HwModel {
    HwParams params;
    double level = 0.0;               // end-of-train state
    double trend = 0.0;
    std::vector<double> seasonal;     // indexed by t mod m
    std::size_t n_train = 0;
    std::vector<double> fitted;
    double sse = 0.0;
};

/// Textbook initialization: level = mean of the first cycle, trend = average
/// cross-cycle slope, seasonal = first-cycle deviations from the level.
/// Requires at least two full cycles.
HwInitState hw_init(const std::vector<double>& train, int period);

HwModel hw_fit(const std::vector<double>& train, const HwParams& params);

/// Minimize in-sample sse over (alpha, beta, gamma): coarse 0.1-step grid
/// over the unit cube, then Nelder-Mead refinement clipped to the cube.
/// Deterministic; grid ties resolve to the lexicographically smallest point,
/// and refinement is only accepted when strictly better.
HwParams hw_optimize(const std::vector<double>& train, int period);

/// Static k-step-ahead forecasts from the end-of-train state:
/// level + k*trend + seasonal[(n_train + k - 1) mod m].
std::vector<double> hw_forecast(const HwModel& model, std::size_t horizon);

/// Rolling one-step predictions over an observed continuation: each step
/// forecasts, then updates the state with the observed value. Does not
/// modify the input model.
std::vector<double> hw_roll(const HwModel& model, const std::vector<double>& observed);

} // namespace stockcast
