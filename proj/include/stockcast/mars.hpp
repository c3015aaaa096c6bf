#pragma once

#include "stockcast/data.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace stockcast {

/// One hinge: max(0, x[feature] - knot) or max(0, knot - x[feature]).
/// Knots are always observed training values of that feature.
struct Hinge {
    int feature = 0;
    double knot = 0.0;
    bool positive = true; // true: max(0, x - knot); false: max(0, knot - x)
};

/// Product of hinges; the empty product is the intercept.
struct BasisTerm {
    std::vector<Hinge> hinges;

    std::size_t degree() const { return hinges.size(); }
    bool uses_feature(int f) const;
};

struct MarsModel {
    std::vector<BasisTerm> terms; // intercept first
    std::vector<double> coeffs;
    double rss = 0.0;
    double gcv = 0.0;
    double penalty = 3.0;
    std::size_t n_train = 0;
};

struct MarsConfig {
    int max_terms = 21;   // model size cap, intercept included
    int max_degree = 1;   // 1 = additive
    double penalty = 3.0; // GCV cost per knot pair
    int max_knots = 100;  // candidate knots per feature after thinning
};

double eval_basis(const BasisTerm& term, const std::vector<double>& x);

/// Least squares min ||B c - y||. Columns that are linearly dependent on
/// earlier ones get a zero coefficient; the fit is unchanged.
std::vector<double> lsq_solve(const Matrix& basis, const std::vector<double>& y);

/// Generalized cross-validation: C = n_terms + penalty*(n_terms-1)/2,
/// score = (rss/n) / (1 - C/n)^2. Throws ModelError when C >= n.
double gcv(double rss, std::size_t n, std::size_t n_terms, double penalty = 3.0);

/// Greedy forward selection of mirrored hinge pairs. Each iteration scans
/// (parent term, feature, thinned knot) and keeps the pair with the lowest
/// residual sum of squares; ties break to the lowest (feature, knot). Stops
/// at max_terms or when the relative rss improvement drops below 1e-10.
MarsModel forward_pass(const Matrix& X, const std::vector<double>& y,
                       const MarsConfig& config = {});

/// Backward pruning: repeatedly delete the non-intercept term whose removal
/// minimizes GCV, track the best model across all depths, return the global
/// GCV minimizer. The intercept is never pruned.
MarsModel backward_pass(const MarsModel& candidate, const Matrix& X,
                        const std::vector<double>& y);

double mars_predict(const MarsModel& model, const std::vector<double>& x);

std::string mars_to_json(const MarsModel& model);
MarsModel mars_from_json(const std::string& text);

} // namespace stockcast
