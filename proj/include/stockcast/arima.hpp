#pragma once

#include "stockcast/errors.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace stockcast {

struct ArimaOrder {
    int p = 0; // AR lags
    int d = 0; // differencing order
    int q = 0; // MA lags

    bool operator==(const ArimaOrder&) const = default;
    std::string str() const;
};

/// Conditional-sum-of-squares ARMA fit on the differenced scale.
struct ArimaFit {
    ArimaOrder order;
    std::vector<double> phi;   // p AR coefficients
    std::vector<double> theta; // q MA coefficients
    double intercept = 0.0;
    double sigma2 = 0.0;       // sse / n_obs
    double sse = 0.0;
    std::size_t n_obs = 0;     // effective sample size (n - p)
    double aic = 0.0;
    bool converged = true;
    std::vector<std::string> warnings; // e.g. near-unit AR/MA roots
};

/// Non-convergence after the iteration cap: carries the best fit seen.
class ConvergenceError : public ModelError {
public:
    ConvergenceError(const std::string& msg, ArimaFit best)
        : ModelError(msg), best_fit(std::move(best)) {}
    ArimaFit best_fit;
};

struct StationarityTest {
    std::string name;       // "adf" or "kpss"
    double statistic = 0.0;
    int lags = 0;           // ADF lag order / KPSS bandwidth
    // Critical values and reject decisions at the 1/5/10 percent levels.
    double crit_1 = 0.0, crit_5 = 0.0, crit_10 = 0.0;
    bool reject_1 = false, reject_5 = false, reject_10 = false;
};

struct StationarityReport {
    StationarityTest adf;  // H0: unit root; reject => stationary
    StationarityTest kpss; // H0: stationary; reject => unit root
};

/// Apply the first-difference operator d times; output length len - d.
std::vector<double> difference(const std::vector<double>& x, int d);

/// Exact inverse of `difference`: `head` supplies d consecutive original
/// values and the output starts with them. With head = the first d values of
/// x, integrate(head, difference(x, d), d) == x. With head = the last d
/// observed values, the tail of the output is the level continuation of the
/// given differences.
std::vector<double> integrate(const std::vector<double>& head,
                              const std::vector<double>& diffs, int d);

/// Augmented Dickey-Fuller regression with constant. Default lag order is
/// the Schwert rule floor(12 * (n/100)^0.25). Reject the unit root when the
/// statistic falls below the MacKinnon critical value.
StationarityTest adf_test(const std::vector<double>& x, std::optional<int> max_lag = {});

/// KPSS level-stationarity test with Bartlett long-run variance, default
/// bandwidth floor(4 * (n/100)^0.25). Reject stationarity when the statistic
/// exceeds the 0.347 / 0.463 / 0.739 critical values.
StationarityTest kpss_test(const std::vector<double>& x, std::optional<int> bandwidth = {});

StationarityReport stationarity_report(const std::vector<double>& x);

struct CssOptions {
    int max_iter = 0; // optimizer iteration cap; 0 picks 500 * n_params
};

/// Minimize the conditional sum of squared innovations
///   e_t = w_t - c - sum phi_i w_{t-i} - sum theta_j e_{t-j},  e_{t<=p} = 0,
/// over t = p+1..n, via Nelder-Mead from Hannan-Rissanen starting values.
/// Throws ConvergenceError (carrying best-so-far) if the cap is reached.
ArimaFit fit_arma_css(const std::vector<double>& w, int p, int q, const CssOptions& opts = {});

/// n_obs * ln(sse / n_obs) + 2 (p + q + 1). sse of zero yields -infinity.
double aic(const ArimaFit& fit);

struct AutoArimaOptions {
    int p_max = 5;
    int d_max = 2;
    int q_max = 5;
};

struct AutoArimaResult {
    ArimaFit fit;
    StationarityReport stationarity; // on the undifferenced series
    std::vector<std::string> skipped; // candidates that failed to fit
};

/// KPSS-driven differencing (smallest d in 0..d_max that passes at 5%, or
/// d_max if none), then an exhaustive (p, q) grid minimized on AIC. Failed
/// candidates are skipped; throws ModelError only if every candidate fails.
AutoArimaResult auto_arima(const std::vector<double>& x, const AutoArimaOptions& opts = {});

enum class ForecastMode { Static, Rolling };

/// Static mode: h-step forecasts beyond the end of x (future innovations
/// zero, then integrated back to levels). Rolling mode: one-step-ahead
/// forecasts for the LAST h positions of x, conditioning on the observed
/// values before each position without re-fitting.
std::vector<double> arima_forecast(const ArimaFit& fit, const std::vector<double>& x,
                                   std::size_t h, ForecastMode mode);

/// In-sample one-step predictions in level scale, aligned with x: entry t
/// predicts x[t] from x[0..t-1]. The first d + p positions have no
/// prediction and are skipped; `first_index` reports the alignment.
struct FittedValues {
    std::size_t first_index = 0;
    std::vector<double> values;
};
FittedValues arima_fitted(const ArimaFit& fit, const std::vector<double>& x);

} // namespace stockcast
