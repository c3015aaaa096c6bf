#pragma once

#include <functional>
#include <vector>

namespace stockcast {

struct NelderMeadOptions {
    int max_iter = 2000;
    double f_tol = 1e-10;       // stop when the simplex f-spread falls below this
    double x_tol = 1e-10;       // ... or the simplex collapses geometrically
    double init_step = 0.1;     // initial simplex edge length per coordinate
    std::vector<double> lower;  // optional box; empty = unconstrained
    std::vector<double> upper;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimizer. Deterministic: no random restarts.
/// When a box is given, every evaluated point is clipped into it first.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0,
                             const NelderMeadOptions& opts = {});

} // namespace stockcast
