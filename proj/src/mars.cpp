#include "stockcast/mars.hpp"

#include "stockcast/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace stockcast {

bool BasisTerm::uses_feature(int f) const {
    for (const auto& h : hinges) {
        if (h.feature == f) return true;
    }
    return false;
}

double eval_basis(const BasisTerm& term, const std::vector<double>& x) {
    double value = 1.0;
    for (const auto& h : term.hinges) {
        if (h.feature < 0 || static_cast<std::size_t>(h.feature) >= x.size()) {
            throw std::invalid_argument("eval_basis: feature index out of range");
        }
        const double delta = h.positive ? x[static_cast<std::size_t>(h.feature)] - h.knot
                                        : h.knot - x[static_cast<std::size_t>(h.feature)];
        value *= std::max(0.0, delta);
        if (value == 0.0) return 0.0;
    }
    return value;
}

namespace {

Eigen::VectorXd basis_column(const BasisTerm& term, const Matrix& X) {
    Eigen::VectorXd col(static_cast<Eigen::Index>(X.size()));
    for (std::size_t i = 0; i < X.size(); ++i) {
        col(static_cast<Eigen::Index>(i)) = eval_basis(term, X[i]);
    }
    return col;
}

Eigen::MatrixXd basis_matrix(const std::vector<BasisTerm>& terms, const Matrix& X) {
    Eigen::MatrixXd B(static_cast<Eigen::Index>(X.size()),
                      static_cast<Eigen::Index>(terms.size()));
    for (std::size_t j = 0; j < terms.size(); ++j) B.col(static_cast<Eigen::Index>(j)) =
        basis_column(terms[j], X);
    return B;
}

struct LsqOutcome {
    std::vector<double> coeffs;
    double rss = 0.0;
};

LsqOutcome lsq_solve_eigen(const Eigen::MatrixXd& B, const Eigen::VectorXd& y) {
    const Eigen::Index n = B.rows(), m = B.cols();
    if (n == 0 || m == 0) throw std::invalid_argument("lsq_solve: empty matrix");
    if (n < m) throw std::invalid_argument("lsq_solve: fewer rows than columns");

    // Rank filter in column order: a column that is (numerically) dependent
    // on earlier ones is dropped and gets a zero coefficient.
    Eigen::MatrixXd Q(n, m);
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::VectorXd w = B.col(j);
        const double norm0 = w.norm();
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < kept.size(); ++k) {
                const auto qk = Q.col(static_cast<Eigen::Index>(k));
                w -= qk.dot(w) * qk;
            }
        }
        const double norm1 = w.norm();
        if (norm1 <= 1e-10 * std::max(norm0, 1.0)) continue;
        Q.col(static_cast<Eigen::Index>(kept.size())) = w / norm1;
        kept.push_back(j);
    }

    LsqOutcome out;
    out.coeffs.assign(static_cast<std::size_t>(m), 0.0);
    if (kept.empty()) {
        out.rss = y.squaredNorm();
        return out;
    }
    Eigen::MatrixXd Bk(n, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
        Bk.col(static_cast<Eigen::Index>(k)) = B.col(kept[k]);
    }
    const Eigen::VectorXd ck = Bk.householderQr().solve(y);
    for (std::size_t k = 0; k < kept.size(); ++k) {
        out.coeffs[static_cast<std::size_t>(kept[k])] = ck(static_cast<Eigen::Index>(k));
    }
    out.rss = (y - Bk * ck).squaredNorm();
    return out;
}

/// Grows an orthonormal basis column by column and tracks the residual of y
/// against its span; lets the forward pass score a mirrored hinge pair in
/// O(n * m) instead of re-solving the full least-squares problem.
class IncrementalLsq {
public:
    IncrementalLsq(Eigen::Index n, const Eigen::VectorXd& y)
        : Q_(n, 0), resid_(y), rss_(y.squaredNorm()) {}

    double rss() const { return rss_; }

    // rss after hypothetically appending u and v; does not commit.
    double peek_pair(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        Eigen::VectorXd qu = orthogonalize(u);
        double rss = rss_;
        const double nu = qu.norm();
        if (nu > tol_norm(u)) {
            qu /= nu;
            const double proj = qu.dot(resid_);
            rss -= proj * proj;
            Eigen::VectorXd qv = orthogonalize(v);
            qv -= qu.dot(qv) * qu;
            const double nv = qv.norm();
            if (nv > tol_norm(v)) {
                qv /= nv;
                const double projv = qv.dot(resid_);
                rss -= projv * projv;
            }
        } else {
            Eigen::VectorXd qv = orthogonalize(v);
            const double nv = qv.norm();
            if (nv > tol_norm(v)) {
                qv /= nv;
                const double projv = qv.dot(resid_);
                rss -= projv * projv;
            }
        }
        return std::max(rss, 0.0);
    }

    void add(const Eigen::VectorXd& u) {
        Eigen::VectorXd qu = orthogonalize(u);
        qu = orthogonalize(qu); // second pass for stability
        const double nu = qu.norm();
        if (nu <= tol_norm(u)) return; // dependent column; span unchanged
        qu /= nu;
        Q_.conservativeResize(Eigen::NoChange, Q_.cols() + 1);
        Q_.col(Q_.cols() - 1) = qu;
        const double proj = qu.dot(resid_);
        resid_ -= proj * qu;
        rss_ = resid_.squaredNorm();
    }

private:
    static double tol_norm(const Eigen::VectorXd& v) { return 1e-12 * std::max(v.norm(), 1.0); }

    Eigen::VectorXd orthogonalize(const Eigen::VectorXd& v) const {
        Eigen::VectorXd w = v;
        for (Eigen::Index k = 0; k < Q_.cols(); ++k) {
            w -= Q_.col(k).dot(w) * Q_.col(k);
        }
        return w;
    }

    Eigen::MatrixXd Q_;
    Eigen::VectorXd resid_;
    double rss_;
};

std::vector<std::vector<double>> thinned_knots(const Matrix& X, int max_knots) {
    const std::size_t n_features = X.empty() ? 0 : X[0].size();
    std::vector<std::vector<double>> knots(n_features);
    for (std::size_t f = 0; f < n_features; ++f) {
        std::vector<double> values;
        values.reserve(X.size());
        for (const auto& row : X) values.push_back(row[f]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        if (static_cast<int>(values.size()) <= max_knots) {
            knots[f] = std::move(values);
            continue;
        }
        // Evenly ranked subset.
        knots[f].reserve(static_cast<std::size_t>(max_knots));
        const std::size_t count = values.size();
        for (int i = 0; i < max_knots; ++i) {
            const std::size_t idx =
                static_cast<std::size_t>(i) * (count - 1) / static_cast<std::size_t>(max_knots - 1);
            knots[f].push_back(values[idx]);
        }
    }
    return knots;
}

double model_gcv(double rss, std::size_t n, std::size_t n_terms, double penalty) {
    return gcv(rss, n, n_terms, penalty);
}

} // namespace

std::vector<double> lsq_solve(const Matrix& basis, const std::vector<double>& y) {
    if (basis.empty() || basis[0].empty()) throw std::invalid_argument("lsq_solve: empty matrix");
    if (basis.size() != y.size()) throw std::invalid_argument("lsq_solve: row count mismatch");
    Eigen::MatrixXd B(static_cast<Eigen::Index>(basis.size()),
                      static_cast<Eigen::Index>(basis[0].size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (basis[i].size() != basis[0].size()) throw std::invalid_argument("lsq_solve: ragged");
        for (std::size_t j = 0; j < basis[i].size(); ++j) {
            B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = basis[i][j];
        }
    }
    const Eigen::VectorXd yv =
        Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return lsq_solve_eigen(B, yv).coeffs;
}

double gcv(double rss, std::size_t n, std::size_t n_terms, double penalty) {
    const double cost =
        static_cast<double>(n_terms) + penalty * (static_cast<double>(n_terms) - 1.0) / 2.0;
    if (cost >= static_cast<double>(n)) {
        throw ModelError("gcv: effective parameters (" + std::to_string(cost) +
                         ") >= sample count (" + std::to_string(n) + ")");
    }
    const double denom = 1.0 - cost / static_cast<double>(n);
    return (rss / static_cast<double>(n)) / (denom * denom);
}

MarsModel forward_pass(const Matrix& X, const std::vector<double>& y, const MarsConfig& config) {
    if (X.size() < 10) throw InputError("forward_pass: need at least 10 samples");
    if (X.size() != y.size()) throw std::invalid_argument("forward_pass: X/y mismatch");
    if (config.max_degree < 1 || config.max_terms < 1 || config.max_knots < 2) {
        throw std::invalid_argument("forward_pass: bad configuration");
    }

    const Eigen::Index n = static_cast<Eigen::Index>(X.size());
    const std::size_t n_features = X[0].size();
    const Eigen::VectorXd yv =
        Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    const auto knots = thinned_knots(X, config.max_knots);

    MarsModel model;
    model.penalty = config.penalty;
    model.n_train = X.size();
    model.terms.push_back(BasisTerm{}); // intercept

    IncrementalLsq state(n, yv);
    state.add(Eigen::VectorXd::Ones(n));
    double rss = state.rss();
    const double rss0 = std::max(rss, 1e-300);

    // Cached basis columns of the current terms (parents for products).
    std::vector<Eigen::VectorXd> term_columns{Eigen::VectorXd::Ones(n)};

    auto gcv_cost = [&](std::size_t n_terms) {
        return static_cast<double>(n_terms) +
               config.penalty * (static_cast<double>(n_terms) - 1.0) / 2.0;
    };

    while (static_cast<int>(model.terms.size()) + 2 <= config.max_terms &&
           gcv_cost(model.terms.size() + 2) < static_cast<double>(X.size()) &&
           rss > 1e-14 * rss0) {
        double best_rss = rss;
        int best_parent = -1, best_feature = -1;
        double best_knot = 0.0;

        for (std::size_t parent = 0; parent < model.terms.size(); ++parent) {
            if (static_cast<int>(model.terms[parent].degree()) + 1 > config.max_degree) continue;
            for (std::size_t f = 0; f < n_features; ++f) {
                if (model.terms[parent].uses_feature(static_cast<int>(f))) continue;
                for (double knot : knots[f]) {
                    Eigen::VectorXd up(n), down(n);
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double xv = X[static_cast<std::size_t>(i)][f];
                        const double parent_v = term_columns[parent](i);
                        up(i) = parent_v * std::max(0.0, xv - knot);
                        down(i) = parent_v * std::max(0.0, knot - xv);
                    }
                    const double cand = state.peek_pair(up, down);
                    if (cand < best_rss - 1e-12 * std::max(rss, 1e-300)) {
                        best_rss = cand;
                        best_parent = static_cast<int>(parent);
                        best_feature = static_cast<int>(f);
                        best_knot = knot;
                    }
                }
            }
        }

        if (best_parent < 0) break;
        const double improvement = rss - best_rss;
        if (improvement < 1e-10 * std::max(rss, 1e-300)) break;

        for (bool positive : {true, false}) {
            BasisTerm term = model.terms[static_cast<std::size_t>(best_parent)];
            term.hinges.push_back(Hinge{best_feature, best_knot, positive});
            Eigen::VectorXd col = basis_column(term, X);
            state.add(col);
            term_columns.push_back(std::move(col));
            model.terms.push_back(std::move(term));
        }
        rss = state.rss();
    }

    // Exact coefficients from the standalone solver.
    const LsqOutcome final_fit = lsq_solve_eigen(basis_matrix(model.terms, X), yv);
    model.coeffs = final_fit.coeffs;
    model.rss = final_fit.rss;
    model.gcv = model_gcv(model.rss, model.n_train, model.terms.size(), model.penalty);
    return model;
}

MarsModel backward_pass(const MarsModel& candidate, const Matrix& X,
                        const std::vector<double>& y) {
    if (candidate.terms.empty()) throw std::invalid_argument("backward_pass: empty model");
    const Eigen::VectorXd yv =
        Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));

    auto refit = [&](const std::vector<BasisTerm>& terms) {
        MarsModel m;
        m.terms = terms;
        m.penalty = candidate.penalty;
        m.n_train = X.size();
        const LsqOutcome fit = lsq_solve_eigen(basis_matrix(terms, X), yv);
        m.coeffs = fit.coeffs;
        m.rss = fit.rss;
        m.gcv = model_gcv(m.rss, m.n_train, m.terms.size(), m.penalty);
        return m;
    };

    MarsModel current = refit(candidate.terms);
    MarsModel best = current;

    while (current.terms.size() > 1) {
        int drop = -1;
        MarsModel drop_model;
        for (std::size_t i = 1; i < current.terms.size(); ++i) { // never the intercept
            std::vector<BasisTerm> reduced = current.terms;
            reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(i));
            MarsModel m = refit(reduced);
            if (drop < 0 || m.gcv < drop_model.gcv) {
                drop = static_cast<int>(i);
                drop_model = std::move(m);
            }
        }
        current = std::move(drop_model);
        if (current.gcv < best.gcv) best = current;
    }
    return best;
}

double mars_predict(const MarsModel& model, const std::vector<double>& x) {
    double sum = 0.0;
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
        sum += model.coeffs[i] * eval_basis(model.terms[i], x);
    }
    return sum;
}

std::string mars_to_json(const MarsModel& model) {
    nlohmann::ordered_json j;
    j["kind"] = "mars";
    j["penalty"] = model.penalty;
    j["n_train"] = model.n_train;
    j["rss"] = model.rss;
    j["gcv"] = model.gcv;
    auto terms = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < model.terms.size(); ++i) {
        nlohmann::ordered_json jt;
        jt["coeff"] = model.coeffs[i];
        auto hinges = nlohmann::ordered_json::array();
        for (const auto& h : model.terms[i].hinges) {
            hinges.push_back({{"feature", h.feature}, {"knot", h.knot}, {"positive", h.positive}});
        }
        jt["hinges"] = std::move(hinges);
        terms.push_back(std::move(jt));
    }
    j["terms"] = std::move(terms);
    return j.dump(2) + "\n";
}

MarsModel mars_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("kind", "") != "mars") throw InputError("mars_from_json: not a mars document");
    MarsModel model;
    model.penalty = j.at("penalty").get<double>();
    model.n_train = j.at("n_train").get<std::size_t>();
    model.rss = j.at("rss").get<double>();
    model.gcv = j.at("gcv").get<double>();
    for (const auto& jt : j.at("terms")) {
        BasisTerm term;
        for (const auto& jh : jt.at("hinges")) {
            term.hinges.push_back(Hinge{jh.at("feature").get<int>(), jh.at("knot").get<double>(),
                                        jh.at("positive").get<bool>()});
        }
        model.terms.push_back(std::move(term));
        model.coeffs.push_back(jt.at("coeff").get<double>());
    }
    return model;
}

} // namespace stockcast
