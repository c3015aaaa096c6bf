#include "stockcast/arima.hpp"

#include "stockcast/optim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stockcast {

std::string ArimaOrder::str() const {
    return "(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")";
}

std::vector<double> difference(const std::vector<double>& x, int d) {
    if (d < 0) throw std::invalid_argument("difference: d must be >= 0");
    if (x.size() <= static_cast<std::size_t>(d)) {
        throw InputError("difference: series of length " + std::to_string(x.size()) +
                         " cannot be differenced " + std::to_string(d) + " times");
    }
    std::vector<double> w = x;
    for (int k = 0; k < d; ++k) {
        for (std::size_t i = w.size() - 1; i > 0; --i) w[i] -= w[i - 1];
        w.erase(w.begin());
    }
    return w;
}

std::vector<double> integrate(const std::vector<double>& head,
                              const std::vector<double>& diffs, int d) {
    if (d < 0) throw std::invalid_argument("integrate: d must be >= 0");
    if (head.size() != static_cast<std::size_t>(d)) {
        throw std::invalid_argument("integrate: need exactly d seed values");
    }
    if (d == 0) return diffs;
    if (d == 1) {
        // Kahan-compensated running sum; plain accumulation drifts past the
        // 1e-12 round-trip contract for d=2 at price-like scales.
        std::vector<double> out;
        out.reserve(1 + diffs.size());
        out.push_back(head[0]);
        double sum = head[0], comp = 0.0;
        for (double dv : diffs) {
            const double y = dv - comp;
            const double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            out.push_back(sum);
        }
        return out;
    }
    const std::vector<double> inner = integrate(difference(head, 1), diffs, d - 1);
    return integrate({head[0]}, inner, 1);
}

namespace {

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    double sigma2 = 0.0;
};

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const auto rows = X.rows();
    const auto cols = X.cols();
    if (rows <= cols) throw ModelError("regression: too few observations");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < cols) throw ModelError("regression: singular design matrix");

    OlsFit fit;
    fit.beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * fit.beta;
    fit.sigma2 = resid.squaredNorm() / static_cast<double>(rows - cols);
    const Eigen::MatrixXd xtx_inv =
        (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(cols, cols));
    fit.se = (fit.sigma2 * xtx_inv.diagonal()).cwiseSqrt();
    return fit;
}

// MacKinnon (2010) response-surface constants, constant-only case.
// cv = b0 + b1/T + b2/T^2 + b3/T^3.
constexpr double kAdfSurface[3][4] = {
    {-3.43035, -6.5393, -16.786, -79.433}, // 1%
    {-2.86154, -2.8903, -4.234, -40.040},  // 5%
    {-2.56677, -1.5384, -2.809, 0.0},      // 10%
};

double adf_critical(int level_index, double t_eff) {
    const double* b = kAdfSurface[level_index];
    return b[0] + b[1] / t_eff + b[2] / (t_eff * t_eff) + b[3] / (t_eff * t_eff * t_eff);
}

// KPSS (1992) level-stationarity critical values at 1 / 5 / 10 percent.
constexpr double kKpssCrit[3] = {0.739, 0.463, 0.347};

void require_length(const std::vector<double>& x, const char* test) {
    if (x.size() < 20) {
        throw InputError(std::string(test) + ": need at least 20 observations, got " +
                         std::to_string(x.size()));
    }
}

} // namespace

StationarityTest adf_test(const std::vector<double>& x, std::optional<int> max_lag) {
    require_length(x, "adf_test");
    const std::size_t n = x.size();

    int k = max_lag ? *max_lag
                    : static_cast<int>(std::floor(
                          12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
    k = std::max(0, std::min<int>(k, static_cast<int>(n) / 2 - 2));

    // Regression: dx_t = a + rho * x_{t-1} + sum_i b_i dx_{t-i} + e_t
    const std::size_t t0 = static_cast<std::size_t>(k) + 1;
    const std::size_t rows = n - t0;
    const std::size_t cols = static_cast<std::size_t>(k) + 2;
    if (rows <= cols) throw InputError("adf_test: series too short for lag order");

    Eigen::MatrixXd X(rows, cols);
    Eigen::VectorXd y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = t0 + r;
        y(static_cast<Eigen::Index>(r)) = x[t] - x[t - 1];
        X(static_cast<Eigen::Index>(r), 0) = 1.0;
        X(static_cast<Eigen::Index>(r), 1) = x[t - 1];
        for (int i = 1; i <= k; ++i) {
            X(static_cast<Eigen::Index>(r), 1 + i) = x[t - i] - x[t - i - 1];
        }
    }

    const OlsFit fit = ols(X, y);
    StationarityTest result;
    result.name = "adf";
    result.lags = k;
    result.statistic = fit.beta(1) / fit.se(1);

    const double t_eff = static_cast<double>(rows);
    result.crit_1 = adf_critical(0, t_eff);
    result.crit_5 = adf_critical(1, t_eff);
    result.crit_10 = adf_critical(2, t_eff);
    result.reject_1 = result.statistic < result.crit_1;
    result.reject_5 = result.statistic < result.crit_5;
    result.reject_10 = result.statistic < result.crit_10;
    return result;
}

StationarityTest kpss_test(const std::vector<double>& x, std::optional<int> bandwidth) {
    require_length(x, "kpss_test");
    const std::size_t n = x.size();
    const double nd = static_cast<double>(n);

    const double mu = std::accumulate(x.begin(), x.end(), 0.0) / nd;
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = x[i] - mu;

    double partial = 0.0, sum_s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        partial += e[i];
        sum_s2 += partial * partial;
    }

    const int l = bandwidth ? *bandwidth
                            : static_cast<int>(std::floor(4.0 * std::pow(nd / 100.0, 0.25)));

    auto autocov = [&](int j) {
        double s = 0.0;
        for (std::size_t t = static_cast<std::size_t>(j); t < n; ++t) s += e[t] * e[t - j];
        return s / nd;
    };
    double lrv = autocov(0);
    for (int j = 1; j <= l; ++j) {
        lrv += 2.0 * (1.0 - static_cast<double>(j) / (l + 1.0)) * autocov(j);
    }
    if (!(lrv > 0.0)) throw ModelError("kpss_test: zero long-run variance");

    StationarityTest result;
    result.name = "kpss";
    result.lags = l;
    result.statistic = sum_s2 / (nd * nd) / lrv;
    result.crit_1 = kKpssCrit[0];
    result.crit_5 = kKpssCrit[1];
    result.crit_10 = kKpssCrit[2];
    result.reject_1 = result.statistic > result.crit_1;
    result.reject_5 = result.statistic > result.crit_5;
    result.reject_10 = result.statistic > result.crit_10;
    return result;
}

StationarityReport stationarity_report(const std::vector<double>& x) {
    return {adf_test(x), kpss_test(x)};
}

namespace {

// params layout: [c, phi_1..phi_p, theta_1..theta_q]
double css_sse(const std::vector<double>& w, int p, int q, const std::vector<double>& params,
               std::vector<double>* innovations = nullptr) {
    const std::size_t n = w.size();
    const double c = params[0];
    std::vector<double> e(n, 0.0);
    double sse = 0.0;
    for (std::size_t t = static_cast<std::size_t>(p); t < n; ++t) {
        double pred = c;
        for (int i = 1; i <= p; ++i) pred += params[static_cast<std::size_t>(i)] * w[t - i];
        for (int j = 1; j <= q; ++j) {
            if (t >= static_cast<std::size_t>(j)) {
                pred += params[static_cast<std::size_t>(p + j)] * e[t - j];
            }
        }
        e[t] = w[t] - pred;
        if (!std::isfinite(e[t])) return 1e300;
        sse += e[t] * e[t];
    }
    if (innovations) *innovations = std::move(e);
    return std::isfinite(sse) ? sse : 1e300;
}

// Two-stage Hannan-Rissanen starting values: a long-AR fit supplies residual
// estimates, then one OLS pass regresses w on its own lags and lagged
// residuals. Falls back to (mean, 0, ..., 0) on singular designs.
std::vector<double> hannan_rissanen_init(const std::vector<double>& w, int p, int q) {
    const std::size_t n = w.size();
    const double w_mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
    std::vector<double> fallback(static_cast<std::size_t>(1 + p + q), 0.0);
    fallback[0] = w_mean;
    if (p == 0 && q == 0) return fallback;

    try {
        const int k = std::min<int>(std::max(p + q + 3, 8), static_cast<int>(n) / 4);
        if (static_cast<int>(n) <= 2 * k + 4) return fallback;

        // Stage 1: AR(k) residuals.
        const std::size_t rows1 = n - static_cast<std::size_t>(k);
        Eigen::MatrixXd X1(rows1, k + 1);
        Eigen::VectorXd y1(rows1);
        for (std::size_t r = 0; r < rows1; ++r) {
            const std::size_t t = static_cast<std::size_t>(k) + r;
            y1(static_cast<Eigen::Index>(r)) = w[t];
            X1(static_cast<Eigen::Index>(r), 0) = 1.0;
            for (int i = 1; i <= k; ++i) X1(static_cast<Eigen::Index>(r), i) = w[t - i];
        }
        const OlsFit ar = ols(X1, y1);
        std::vector<double> resid(n, 0.0);
        for (std::size_t r = 0; r < rows1; ++r) {
            const std::size_t t = static_cast<std::size_t>(k) + r;
            double pred = ar.beta(0);
            for (int i = 1; i <= k; ++i) pred += ar.beta(i) * w[t - i];
            resid[t] = w[t] - pred;
        }

        // Stage 2: regress on own lags and lagged residuals.
        const std::size_t t0 = static_cast<std::size_t>(k + q);
        const std::size_t rows2 = n - t0;
        const std::size_t cols2 = static_cast<std::size_t>(1 + p + q);
        if (rows2 <= cols2) return fallback;
        Eigen::MatrixXd X2(rows2, static_cast<Eigen::Index>(cols2));
        Eigen::VectorXd y2(rows2);
        for (std::size_t r = 0; r < rows2; ++r) {
            const std::size_t t = t0 + r;
            y2(static_cast<Eigen::Index>(r)) = w[t];
            X2(static_cast<Eigen::Index>(r), 0) = 1.0;
            for (int i = 1; i <= p; ++i) X2(static_cast<Eigen::Index>(r), i) = w[t - i];
            for (int j = 1; j <= q; ++j) {
                X2(static_cast<Eigen::Index>(r), p + j) = resid[t - j];
            }
        }
        const OlsFit hr = ols(X2, y2);
        std::vector<double> init(cols2);
        for (std::size_t i = 0; i < cols2; ++i) init[i] = hr.beta(static_cast<Eigen::Index>(i));
        // Clamp wild starting values; the optimizer explores from here.
        for (std::size_t i = 1; i < cols2; ++i) init[i] = std::clamp(init[i], -0.98, 0.98);
        return init;
    } catch (const ModelError&) {
        return fallback;
    }
}

// Largest modulus among the inverse roots of 1 - c_1 z - ... - c_k z^k.
// Values >= 1 mean a non-stationary (AR) or non-invertible (MA) polynomial.
double max_inverse_root(const std::vector<double>& coeffs) {
    const int k = static_cast<int>(coeffs.size());
    if (k == 0) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) companion(0, i) = coeffs[static_cast<std::size_t>(i)];
    for (int i = 1; i < k; ++i) companion(i, i - 1) = 1.0;
    const Eigen::VectorXcd eig = companion.eigenvalues();
    double max_mod = 0.0;
    for (Eigen::Index i = 0; i < eig.size(); ++i) max_mod = std::max(max_mod, std::abs(eig(i)));
    return max_mod;
}

ArimaFit assemble_fit(const std::vector<double>& w, int p, int q,
                      const std::vector<double>& params, bool converged) {
    ArimaFit fit;
    fit.order = {p, 0, q};
    fit.intercept = params[0];
    fit.phi.assign(params.begin() + 1, params.begin() + 1 + p);
    fit.theta.assign(params.begin() + 1 + p, params.end());
    fit.sse = css_sse(w, p, q, params);
    fit.n_obs = w.size() - static_cast<std::size_t>(p);
    fit.sigma2 = fit.sse / static_cast<double>(fit.n_obs);
    fit.converged = converged;
    fit.aic = aic(fit);
    if (p > 0 && max_inverse_root(fit.phi) >= 1.0 - 1e-8) {
        fit.warnings.push_back("AR polynomial at or outside the stationarity boundary");
    }
    if (q > 0 && max_inverse_root(fit.theta) >= 1.0 - 1e-8) {
        fit.warnings.push_back("MA polynomial at or outside the invertibility boundary");
    }
    return fit;
}

} // namespace

ArimaFit fit_arma_css(const std::vector<double>& w, int p, int q, const CssOptions& css_opts) {
    if (p < 0 || q < 0) throw std::invalid_argument("fit_arma_css: negative order");
    const std::size_t n = w.size();
    if (n <= static_cast<std::size_t>(p + q + 1)) {
        throw InputError("fit_arma_css: need more than p+q+1 observations");
    }
    for (double v : w) {
        if (!std::isfinite(v)) throw ModelError("fit_arma_css: non-finite input");
    }

    if (p == 0 && q == 0) {
        // Closed form: intercept-only model.
        const double c = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(n);
        return assemble_fit(w, 0, 0, {c}, true);
    }

    const std::vector<double> init = hannan_rissanen_init(w, p, q);

    NelderMeadOptions opts;
    opts.max_iter =
        css_opts.max_iter > 0 ? css_opts.max_iter : 500 * static_cast<int>(init.size());
    opts.f_tol = 1e-10;
    opts.x_tol = 1e-9;
    opts.init_step = 0.05;
    const auto result = nelder_mead(
        [&](const std::vector<double>& params) { return css_sse(w, p, q, params); }, init, opts);

    ArimaFit fit = assemble_fit(w, p, q, result.x, result.converged);
    if (!result.converged) {
        throw ConvergenceError("fit_arma_css: no convergence for order (p=" + std::to_string(p) +
                                   ", q=" + std::to_string(q) + ") after " +
                                   std::to_string(result.iterations) + " iterations",
                               fit);
    }
    return fit;
}

double aic(const ArimaFit& fit) {
    if (fit.sse <= 0.0) return -std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(fit.n_obs);
    return n * std::log(fit.sse / n) + 2.0 * (fit.order.p + fit.order.q + 1);
}

AutoArimaResult auto_arima(const std::vector<double>& x, const AutoArimaOptions& opts) {
    if (opts.p_max < 0 || opts.d_max < 0 || opts.q_max < 0) {
        throw std::invalid_argument("auto_arima: negative search bound");
    }

    AutoArimaResult result;
    result.stationarity = stationarity_report(x);

    // Smallest d whose differenced series passes KPSS; d_max if none. The
    // decision runs at the 1% level: a differenced ARMA series carries
    // short-run autocorrelation that makes the 5% test over-difference.
    int d = opts.d_max;
    std::vector<double> w = x;
    for (int cand = 0; cand <= opts.d_max; ++cand) {
        const std::vector<double> wd = difference(x, cand);
        if (!kpss_test(wd).reject_1) {
            d = cand;
            w = wd;
            break;
        }
        if (cand == opts.d_max) w = wd;
    }

    // Candidates whose fitted polynomials sit at the stationarity or
    // invertibility boundary are spurious CSS minima (near-canceling AR/MA
    // factors chasing noise); they lose their place in the AIC race and are
    // recorded as skipped. If every candidate is degenerate, fall back to
    // the plain minimum.
    bool have_best = false, have_clean_best = false;
    ArimaFit best, clean_best;
    for (int p = 0; p <= opts.p_max; ++p) {
        for (int q = 0; q <= opts.q_max; ++q) {
            try {
                ArimaFit fit = fit_arma_css(w, p, q);
                fit.order.d = d;
                if (!have_best || fit.aic < best.aic) {
                    best = fit;
                    have_best = true;
                }
                if (fit.warnings.empty()) {
                    if (!have_clean_best || fit.aic < clean_best.aic) {
                        clean_best = std::move(fit);
                        have_clean_best = true;
                    }
                } else {
                    result.skipped.push_back("(" + std::to_string(p) + "," + std::to_string(d) +
                                             "," + std::to_string(q) + "): " + fit.warnings[0]);
                }
            } catch (const std::exception& e) {
                result.skipped.push_back("(" + std::to_string(p) + "," + std::to_string(d) + "," +
                                         std::to_string(q) + "): " + e.what());
            }
        }
    }
    if (!have_best) throw ModelError("auto_arima: every candidate order failed to fit");
    result.fit = have_clean_best ? std::move(clean_best) : std::move(best);
    return result;
}

namespace {

// Reconstruct a level value from its d-th difference and the d preceding
// level values (most recent last): x_t = diff + sum_{k=1..d} -(-1)^k C(d,k) x_{t-k}.
double level_from_diff(double diff, const std::vector<double>& prev, int d) {
    double value = diff;
    double binom = 1.0;
    for (int k = 1; k <= d; ++k) {
        binom = binom * (d - k + 1) / k; // C(d, k)
        const double sign = (k % 2 == 0) ? -1.0 : 1.0;
        value += sign * binom * prev[prev.size() - static_cast<std::size_t>(k)];
    }
    return value;
}

} // namespace

FittedValues arima_fitted(const ArimaFit& fit, const std::vector<double>& x) {
    const int p = fit.order.p, d = fit.order.d, q = fit.order.q;
    const std::vector<double> w = difference(x, d);

    std::vector<double> params;
    params.reserve(static_cast<std::size_t>(1 + p + q));
    params.push_back(fit.intercept);
    params.insert(params.end(), fit.phi.begin(), fit.phi.end());
    params.insert(params.end(), fit.theta.begin(), fit.theta.end());

    std::vector<double> e;
    css_sse(w, p, q, params, &e);

    FittedValues out;
    out.first_index = static_cast<std::size_t>(d + p);
    out.values.reserve(x.size() - out.first_index);
    for (std::size_t j = static_cast<std::size_t>(p); j < w.size(); ++j) {
        const double w_hat = w[j] - e[j];
        const std::size_t idx = j + static_cast<std::size_t>(d); // position in x
        std::vector<double> prev(x.begin() + static_cast<std::ptrdiff_t>(idx - d),
                                 x.begin() + static_cast<std::ptrdiff_t>(idx));
        out.values.push_back(level_from_diff(w_hat, prev, d));
    }
    return out;
}

std::vector<double> arima_forecast(const ArimaFit& fit, const std::vector<double>& x,
                                   std::size_t h, ForecastMode mode) {
    if (h < 1) throw std::invalid_argument("arima_forecast: horizon must be >= 1");
    const int p = fit.order.p, d = fit.order.d, q = fit.order.q;

    if (mode == ForecastMode::Rolling) {
        const FittedValues fitted = arima_fitted(fit, x);
        if (fitted.values.size() < h) {
            throw std::invalid_argument("arima_forecast: series too short for rolling horizon");
        }
        return {fitted.values.end() - static_cast<std::ptrdiff_t>(h), fitted.values.end()};
    }

    std::vector<double> w = difference(x, d);
    std::vector<double> params;
    params.push_back(fit.intercept);
    params.insert(params.end(), fit.phi.begin(), fit.phi.end());
    params.insert(params.end(), fit.theta.begin(), fit.theta.end());

    std::vector<double> e;
    css_sse(w, p, q, params, &e);

    // Iterate the recursion forward with future innovations at zero.
    for (std::size_t k = 0; k < h; ++k) {
        const std::size_t t = w.size();
        double pred = fit.intercept;
        for (int i = 1; i <= p; ++i) pred += fit.phi[static_cast<std::size_t>(i - 1)] * w[t - i];
        for (int j = 1; j <= q; ++j) pred += fit.theta[static_cast<std::size_t>(j - 1)] * e[t - j];
        w.push_back(pred);
        e.push_back(0.0);
    }

    if (d == 0) {
        return {w.end() - static_cast<std::ptrdiff_t>(h), w.end()};
    }

    const std::vector<double> tail(x.end() - d, x.end());
    const std::vector<double> diffs(w.end() - static_cast<std::ptrdiff_t>(h), w.end());
    std::vector<double> levels = integrate(tail, diffs, d);
    return {levels.begin() + d, levels.end()};
}

} // namespace stockcast
