#include "stockcast/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace stockcast {

namespace {

void clip_into_box(std::vector<double>& x, const NelderMeadOptions& opts) {
    if (!opts.lower.empty()) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(x[i], opts.lower[i]);
    }
    if (!opts.upper.empty()) {
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::min(x[i], opts.upper[i]);
    }
}

} // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const NelderMeadOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");
    if (!opts.lower.empty() && opts.lower.size() != n)
        throw std::invalid_argument("nelder_mead: lower bound size mismatch");
    if (!opts.upper.empty() && opts.upper.size() != n)
        throw std::invalid_argument("nelder_mead: upper bound size mismatch");

    auto eval = [&](std::vector<double> x) {
        clip_into_box(x, opts);
        return std::make_pair(f(x), std::move(x));
    };

    // Initial simplex: x0 plus one perturbed vertex per coordinate.
    clip_into_box(x0, opts);
    std::vector<std::vector<double>> simplex;
    std::vector<double> fvals;
    simplex.reserve(n + 1);
    fvals.reserve(n + 1);
    simplex.push_back(x0);
    fvals.push_back(f(x0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v = x0;
        double step = opts.init_step;
        if (!opts.upper.empty() && v[i] + step > opts.upper[i]) step = -step;
        v[i] += (step != 0.0 ? step : 0.05);
        auto [fv, xv] = eval(std::move(v));
        simplex.push_back(std::move(xv));
        fvals.push_back(fv);
    }

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    std::vector<std::size_t> order(n + 1);

    NelderMeadResult result;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fvals[a] < fvals[b]; });

        const std::size_t best = order[0], worst = order[n], second_worst = order[n - 1];

        // Convergence: function spread and simplex diameter.
        const double f_spread = std::abs(fvals[worst] - fvals[best]);
        double x_spread = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x_spread = std::max(x_spread, std::abs(simplex[worst][i] - simplex[best][i]));
        }
        const double f_scale = 0.5 * (std::abs(fvals[worst]) + std::abs(fvals[best])) + 1e-30;
        if (f_spread <= opts.f_tol * f_scale || x_spread <= opts.x_tol) {
            result.converged = true;
            break;
        }

        // Centroid of all vertices except the worst.
        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto affine = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = centroid[i] + t * (centroid[i] - simplex[worst][i]);
            return x;
        };

        auto [fr, xr] = eval(affine(alpha));
        if (fr < fvals[best]) {
            auto [fe, xe] = eval(affine(gamma));
            if (fe < fr) {
                simplex[worst] = std::move(xe);
                fvals[worst] = fe;
            } else {
                simplex[worst] = std::move(xr);
                fvals[worst] = fr;
            }
        } else if (fr < fvals[second_worst]) {
            simplex[worst] = std::move(xr);
            fvals[worst] = fr;
        } else {
            const bool outside = fr < fvals[worst];
            auto [fc, xc] = eval(affine(outside ? rho : -rho));
            if (fc < (outside ? fr : fvals[worst])) {
                simplex[worst] = std::move(xc);
                fvals[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                for (std::size_t k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[k][i] = simplex[best][i] + sigma * (simplex[k][i] - simplex[best][i]);
                    clip_into_box(simplex[k], opts);
                    fvals[k] = f(simplex[k]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (fvals[k] < fvals[best]) best = k;
    }
    result.x = simplex[best];
    result.fx = fvals[best];
    result.iterations = iter;
    return result;
}

} // namespace stockcast
