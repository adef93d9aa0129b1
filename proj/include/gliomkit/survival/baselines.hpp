#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gliomkit/common.hpp"
#include "gliomkit/rng.hpp"
#include "gliomkit/survival/cohort.hpp"
#include "gliomkit/survival/metrics.hpp"

namespace gliomkit::survival {

struct BaselineConfig {
    std::uint64_t seed = 0;
    // linear
    double ridge_lambda = 1e-8; // applied only when the Gram matrix is singular
    // logistic (bucket classifier predicting midpoint days)
    BucketThresholds thresholds;
    std::array<double, 3> bucket_midpoints = {150.0, 380.0, 600.0};
    int logistic_iters = 2000;
    double logistic_lr = 0.5;
    double logistic_l2 = 1e-6;
    // random forest
    int n_trees = 100;
    int min_leaf = 2;
    int mtry = 0; // 0 -> ceil(p/3)
    // epsilon-SVR with RBF kernel (solved by SMO on standardized data)
    double svr_c = 1.0;
    double svr_epsilon = 0.0; // standardized units; 0 -> 0.1 (= 0.1 * target std)
    double svr_gamma = 0.0;   // 0 -> 1/p
    double svr_tol = 1e-4;
    int svr_max_passes = 4000;
};

namespace detail {

// Gaussian elimination with partial pivoting; returns false on a pivot
// collapse (singular system).
inline bool solve_linear_system(std::vector<std::vector<double>> a, std::vector<double> rhs,
                                std::vector<double>& out) {
    const std::size_t n = a.size();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(a[i][i]));
    const double tol = std::max(1e-300, 1e-13 * max_diag);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < tol) return false;
        std::swap(a[pivot], a[col]);
        std::swap(rhs[pivot], rhs[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            rhs[r] -= f * rhs[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * out[c];
        out[i] = s / a[i][i];
    }
    return true;
}

} // namespace detail

// Ordinary least squares via normal equations, with a ridge fallback when the
// Gram matrix is singular. Coefficients are reported in raw feature space.
struct LinearModel {
    std::vector<double> coefficients; // per raw feature
    double intercept = 0.0;

    static LinearModel fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                           const BaselineConfig& cfg = {}) {
        if (X.empty()) throw value_error("linear fit: no rows");
        const std::size_t n = X.size(), p = X[0].size();
        // Gram of [X | 1]
        std::vector<std::vector<double>> gram(p + 1, std::vector<double>(p + 1, 0.0));
        std::vector<double> rhs(p + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 0; a < p; ++a) {
                for (std::size_t b = a; b < p; ++b) gram[a][b] += X[i][a] * X[i][b];
                gram[a][p] += X[i][a];
                rhs[a] += X[i][a] * y[i];
            }
            rhs[p] += y[i];
        }
        gram[p][p] = static_cast<double>(n);
        for (std::size_t a = 0; a < p + 1; ++a)
            for (std::size_t b = 0; b < a; ++b) gram[a][b] = gram[b][a];

        std::vector<double> beta;
        if (!detail::solve_linear_system(gram, rhs, beta)) {
            for (std::size_t a = 0; a < p + 1; ++a) gram[a][a] += cfg.ridge_lambda;
            if (!detail::solve_linear_system(gram, rhs, beta))
                throw value_error("linear fit: system still singular after ridge fallback");
        }
        LinearModel m;
        m.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(p));
        m.intercept = beta[p];
        return m;
    }

    double predict(const std::vector<double>& x) const {
        double out = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) out += coefficients[j] * x[j];
        return out;
    }
};

// Multinomial softmax classifier over the three survival buckets, trained by
// full-batch gradient descent on standardized features; predictions are the
// configured bucket-midpoint days.
struct LogisticModel {
    Standardizer xs;
    std::vector<double> w; // (p+1) x 3 row-major, last row = intercepts
    std::array<double, 3> midpoints{};
    int p = 0;

    static LogisticModel fit(const std::vector<std::vector<double>>& X,
                             const std::vector<double>& y, const BaselineConfig& cfg = {}) {
        if (X.empty()) throw value_error("logistic fit: no rows");
        LogisticModel m;
        m.p = static_cast<int>(X[0].size());
        m.xs = Standardizer::fit(X);
        m.midpoints = cfg.bucket_midpoints;
        const auto Xs = m.xs.apply_all(X);
        const std::size_t n = X.size();
        std::vector<int> label(n);
        for (std::size_t i = 0; i < n; ++i) label[i] = bucket(y[i], cfg.thresholds);

        const std::size_t rows = static_cast<std::size_t>(m.p) + 1;
        m.w.assign(rows * 3, 0.0);
        std::vector<double> grad(rows * 3);
        std::vector<double> logits(3), prob(3);
        for (int it = 0; it < cfg.logistic_iters; ++it) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (int k = 0; k < 3; ++k) {
                    double a = m.w[(rows - 1) * 3 + static_cast<std::size_t>(k)];
                    for (int j = 0; j < m.p; ++j)
                        a += Xs[i][static_cast<std::size_t>(j)] * m.w[static_cast<std::size_t>(j) * 3 + static_cast<std::size_t>(k)];
                    logits[static_cast<std::size_t>(k)] = a;
                }
                const double mx = std::max({logits[0], logits[1], logits[2]});
                double sum = 0.0;
                for (int k = 0; k < 3; ++k) {
                    prob[static_cast<std::size_t>(k)] = std::exp(logits[static_cast<std::size_t>(k)] - mx);
                    sum += prob[static_cast<std::size_t>(k)];
                }
                for (int k = 0; k < 3; ++k) {
                    const double d = (prob[static_cast<std::size_t>(k)] / sum -
                                      (label[i] == k ? 1.0 : 0.0)) /
                                     static_cast<double>(n);
                    for (int j = 0; j < m.p; ++j)
                        grad[static_cast<std::size_t>(j) * 3 + static_cast<std::size_t>(k)] +=
                            d * Xs[i][static_cast<std::size_t>(j)];
                    grad[(rows - 1) * 3 + static_cast<std::size_t>(k)] += d;
                }
            }
            for (std::size_t j = 0; j + 1 < rows; ++j)
                for (int k = 0; k < 3; ++k)
                    grad[j * 3 + static_cast<std::size_t>(k)] += cfg.logistic_l2 * m.w[j * 3 + static_cast<std::size_t>(k)];
            for (std::size_t idx = 0; idx < m.w.size(); ++idx) m.w[idx] -= cfg.logistic_lr * grad[idx];
        }
        return m;
    }

    int predict_bucket(const std::vector<double>& x) const {
        const auto xs_row = xs.apply(x);
        const std::size_t rows = static_cast<std::size_t>(p) + 1;
        int best = 0;
        double best_v = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            double a = w[(rows - 1) * 3 + static_cast<std::size_t>(k)];
            for (int j = 0; j < p; ++j)
                a += xs_row[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j) * 3 + static_cast<std::size_t>(k)];
            if (a > best_v) {
                best_v = a;
                best = k;
            }
        }
        return best;
    }

    double predict(const std::vector<double>& x) const {
        return midpoints[static_cast<std::size_t>(predict_bucket(x))];
    }
};

// Bagged variance-reduction CART regression trees.
struct ForestModel {
    struct Node {
        int feature = -1; // -1 for leaf
        double threshold = 0.0;
        std::int32_t left = -1, right = -1;
        double value = 0.0;
    };
    struct Tree {
        std::vector<Node> nodes;
        double predict(const std::vector<double>& x) const {
            std::int32_t cur = 0;
            while (nodes[static_cast<std::size_t>(cur)].feature >= 0) {
                const Node& nd = nodes[static_cast<std::size_t>(cur)];
                cur = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
            }
            return nodes[static_cast<std::size_t>(cur)].value;
        }
    };
    std::vector<Tree> trees;

    static ForestModel fit(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                           const BaselineConfig& cfg = {}) {
        if (X.empty()) throw value_error("forest fit: no rows");
        const std::size_t n = X.size(), p = X[0].size();
        const int mtry = cfg.mtry > 0 ? cfg.mtry : static_cast<int>((p + 2) / 3);
        Rng master(cfg.seed);
        ForestModel m;
        m.trees.resize(static_cast<std::size_t>(cfg.n_trees));
        for (int t = 0; t < cfg.n_trees; ++t) {
            Rng rng = master.fork(static_cast<std::uint64_t>(t));
            std::vector<std::size_t> sample(n);
            for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_index(n));
            build_tree(m.trees[static_cast<std::size_t>(t)], X, y, std::move(sample), mtry,
                       cfg.min_leaf, rng);
        }
        return m;
    }

    double predict(const std::vector<double>& x) const {
        double sum = 0.0;
        for (const auto& t : trees) sum += t.predict(x);
        return sum / static_cast<double>(trees.size());
    }

private:
    static void build_tree(Tree& tree, const std::vector<std::vector<double>>& X,
                           const std::vector<double>& y, std::vector<std::size_t> rows, int mtry,
                           int min_leaf, Rng& rng) {
        tree.nodes.clear();
        grow(tree, X, y, std::move(rows), mtry, min_leaf, rng);
    }

    static std::int32_t grow(Tree& tree, const std::vector<std::vector<double>>& X,
                             const std::vector<double>& y, std::vector<std::size_t> rows, int mtry,
                             int min_leaf, Rng& rng) {
        const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        double mean = 0.0;
        for (std::size_t r : rows) mean += y[r];
        mean /= static_cast<double>(rows.size());
        double sse = 0.0;
        for (std::size_t r : rows) sse += (y[r] - mean) * (y[r] - mean);
        tree.nodes[static_cast<std::size_t>(id)].value = mean;
        if (static_cast<int>(rows.size()) < 2 * min_leaf || sse <= 0.0) return id;

        const std::size_t p = X[0].size();
        std::vector<std::size_t> feats(p);
        for (std::size_t j = 0; j < p; ++j) feats[j] = j;
        for (std::size_t j = 0; j < static_cast<std::size_t>(mtry) && j < p; ++j) {
            const std::size_t k = j + static_cast<std::size_t>(rng.uniform_index(p - j));
            std::swap(feats[j], feats[k]);
        }

        int best_feat = -1;
        double best_thresh = 0.0, best_score = sse;
        std::vector<std::pair<double, double>> vals(rows.size()); // (x_j, y)
        for (std::size_t fi = 0; fi < static_cast<std::size_t>(mtry) && fi < p; ++fi) {
            const std::size_t j = feats[fi];
            for (std::size_t r = 0; r < rows.size(); ++r)
                vals[r] = {X[rows[r]][j], y[rows[r]]};
            std::sort(vals.begin(), vals.end());
            double lsum = 0.0, lsq = 0.0;
            double rsum = 0.0, rsq = 0.0;
            for (const auto& [xv, yv] : vals) {
                rsum += yv;
                rsq += yv * yv;
            }
            const std::size_t nn = vals.size();
            for (std::size_t i = 0; i + 1 < nn; ++i) {
                lsum += vals[i].second;
                lsq += vals[i].second * vals[i].second;
                rsum -= vals[i].second;
                rsq -= vals[i].second * vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                const std::size_t nl = i + 1, nr = nn - nl;
                if (static_cast<int>(nl) < min_leaf || static_cast<int>(nr) < min_leaf) continue;
                const double score = (lsq - lsum * lsum / static_cast<double>(nl)) +
                                     (rsq - rsum * rsum / static_cast<double>(nr));
                if (score < best_score - 1e-12) {
                    best_score = score;
                    best_feat = static_cast<int>(j);
                    best_thresh = 0.5 * (vals[i].first + vals[i + 1].first);
                }
            }
        }
        if (best_feat < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows)
            (X[r][static_cast<std::size_t>(best_feat)] <= best_thresh ? left : right).push_back(r);
        if (left.empty() || right.empty()) return id;
        rows.clear();
        rows.shrink_to_fit();
        const std::int32_t li = grow(tree, X, y, std::move(left), mtry, min_leaf, rng);
        const std::int32_t ri = grow(tree, X, y, std::move(right), mtry, min_leaf, rng);
        tree.nodes[static_cast<std::size_t>(id)].feature = best_feat;
        tree.nodes[static_cast<std::size_t>(id)].threshold = best_thresh;
        tree.nodes[static_cast<std::size_t>(id)].left = li;
        tree.nodes[static_cast<std::size_t>(id)].right = ri;
        return id;
    }
};

// epsilon-SVR with an RBF kernel, solved by SMO on standardized features and
// target. beta_i = alpha_i - alpha_i* in [-C, C], sum(beta) = 0.
struct SvrModel {
    Standardizer xs;
    double y_mean = 0.0, y_std = 1.0;
    std::vector<std::vector<double>> support; // standardized training rows
    std::vector<double> beta;
    double bias = 0.0;
    double gamma = 0.0;
    double epsilon = 0.1;
    double c = 1.0;
    double kkt_residual = 0.0; // max violation at convergence, standardized units

    double kernel(const std::vector<double>& a, const std::vector<double>& b) const {
        double d2 = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) d2 += (a[j] - b[j]) * (a[j] - b[j]);
        return std::exp(-gamma * d2);
    }

    static SvrModel fit(const std::vector<std::vector<double>>& X, const std::vector<double>& yraw,
                        const BaselineConfig& cfg = {}) {
        if (X.empty()) throw value_error("svr fit: no rows");
        SvrModel m;
        const std::size_t n = X.size(), p = X[0].size();
        m.xs = Standardizer::fit(X);
        m.support = m.xs.apply_all(X);
        m.gamma = cfg.svr_gamma > 0.0 ? cfg.svr_gamma : 1.0 / static_cast<double>(p);
        m.epsilon = cfg.svr_epsilon > 0.0 ? cfg.svr_epsilon : 0.1;
        m.c = cfg.svr_c;

        double ym = 0.0;
        for (double v : yraw) ym += v;
        ym /= static_cast<double>(n);
        double ys = 0.0;
        for (double v : yraw) ys += (v - ym) * (v - ym);
        ys = std::sqrt(ys / static_cast<double>(n));
        m.y_mean = ym;
        m.y_std = ys > 0.0 ? ys : 1.0;
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = (yraw[i] - ym) / m.y_std;

        std::vector<std::vector<double>> K(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) K[i][j] = K[j][i] = m.kernel(m.support[i], m.support[j]);

        m.beta.assign(n, 0.0);
        std::vector<double> g(n, 0.0); // f(x_i) without bias
        const double C = m.c, eps = m.epsilon;

        // Objective restricted to the pair (i, j) as a function of t = beta_i,
        // with beta_j = rho - t; piecewise quadratic with breaks at 0 and rho.
        auto pair_objective = [&](std::size_t i, std::size_t j, double rho, double ui, double uj,
                                  double t) {
            const double bj = rho - t;
            return y[i] * t + y[j] * bj - eps * (std::abs(t) + std::abs(bj)) -
                   0.5 * (K[i][i] * t * t + K[j][j] * bj * bj) - K[i][j] * t * bj - t * ui - bj * uj;
        };

        // One two-variable update on the pair (i, j); returns true when beta_i
        // moved. The 1-D objective in t is piecewise quadratic with breaks at
        // 0 and rho, so the maximum is at an endpoint, a break, or a clamped
        // per-segment vertex; all candidates are evaluated exactly.
        auto try_pair = [&](std::size_t i, std::size_t j) {
            const double rho = m.beta[i] + m.beta[j];
            const double ui = g[i] - m.beta[i] * K[i][i] - m.beta[j] * K[i][j];
            const double uj = g[j] - m.beta[i] * K[i][j] - m.beta[j] * K[j][j];
            const double lo = std::max(-C, rho - C), hi = std::min(C, rho + C);
            if (lo >= hi) return false;
            const double eta = K[i][i] + K[j][j] - 2.0 * K[i][j];

            double cand[8];
            int n_cand = 0;
            cand[n_cand++] = lo;
            cand[n_cand++] = hi;
            if (0.0 > lo && 0.0 < hi) cand[n_cand++] = 0.0;
            if (rho > lo && rho < hi) cand[n_cand++] = rho;
            if (eta > 1e-12) {
                const double base = (y[i] - y[j]) - (ui - uj) + rho * (K[j][j] - K[i][j]);
                for (const double si : {-1.0, 1.0})
                    for (const double sj : {-1.0, 1.0})
                        cand[n_cand++] = std::clamp((base - eps * si + eps * sj) / eta, lo, hi);
            }
            double best_t = m.beta[i];
            double best_obj = pair_objective(i, j, rho, ui, uj, m.beta[i]);
            for (int c = 0; c < n_cand; ++c) {
                const double obj = pair_objective(i, j, rho, ui, uj, cand[c]);
                if (obj > best_obj + 1e-12) {
                    best_obj = obj;
                    best_t = cand[c];
                }
            }
            const double di = best_t - m.beta[i];
            if (std::abs(di) < 1e-12) return false;
            const double dj = (rho - best_t) - m.beta[j];
            m.beta[i] = best_t;
            m.beta[j] = rho - best_t;
            for (std::size_t k = 0; k < n; ++k) g[k] += di * K[i][k] + dj * K[j][k];
            return true;
        };

        for (int pass = 0; pass < cfg.svr_max_passes; ++pass) {
            bool improved = false;
            for (std::size_t i = 0; i < n; ++i) {
                // largest-residual-gap partner first, exhaustive fallback;
                // pairwise optimality over all pairs certifies the optimum of
                // this concave dual
                std::size_t greedy = i;
                double best_gap = -1.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == i) continue;
                    const double gap = std::abs((g[i] - y[i]) - (g[k] - y[k]));
                    if (gap > best_gap) {
                        best_gap = gap;
                        greedy = k;
                    }
                }
                if (greedy != i && try_pair(i, greedy)) {
                    improved = true;
                    continue;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == i || j == greedy) continue;
                    if (try_pair(i, j)) {
                        improved = true;
                        break;
                    }
                }
            }
            m.compute_bias(y, g);
            if (m.kkt_violation(y, g) <= cfg.svr_tol) break;
            if (!improved) break;
        }
        m.compute_bias(y, g);
        m.kkt_residual = m.kkt_violation(y, g);
        return m;
    }

    double predict(const std::vector<double>& x) const {
        const auto xs_row = xs.apply(x);
        double f = bias;
        for (std::size_t i = 0; i < support.size(); ++i)
            if (beta[i] != 0.0) f += beta[i] * kernel(support[i], xs_row);
        return f * y_std + y_mean;
    }

private:
    void compute_bias(const std::vector<double>& y, const std::vector<double>& g) {
        // interior points pin f exactly at the tube edge
        double sum = 0.0;
        int count = 0;
        const double margin = 1e-8;
        for (std::size_t i = 0; i < beta.size(); ++i) {
            const double a = std::abs(beta[i]);
            if (a > margin && a < c - margin) {
                sum += y[i] - g[i] - (beta[i] > 0 ? epsilon : -epsilon);
                ++count;
            }
        }
        if (count > 0) {
            bias = sum / count;
            return;
        }
        // fall back to the feasible interval midpoint over all points
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < beta.size(); ++i) {
            const double e = y[i] - g[i];
            if (beta[i] > margin) {
                lo = std::max(lo, e - epsilon);
                hi = std::min(hi, e - epsilon);
            } else if (beta[i] < -margin) {
                lo = std::max(lo, e + epsilon);
                hi = std::min(hi, e + epsilon);
            } else {
                lo = std::max(lo, e - epsilon);
                hi = std::min(hi, e + epsilon);
            }
        }
        if (std::isfinite(lo) && std::isfinite(hi)) bias = 0.5 * (lo + hi);
        else bias = 0.0;
    }

    double kkt_violation(const std::vector<double>& y, const std::vector<double>& g) const {
        double worst = 0.0;
        const double margin = 1e-8;
        for (std::size_t i = 0; i < beta.size(); ++i) {
            const double e = y[i] - (g[i] + bias); // residual above the regressor
            double v = 0.0;
            if (std::abs(beta[i]) <= margin) {
                v = std::max(0.0, std::abs(e) - epsilon);
            } else if (beta[i] >= c - margin) {
                v = std::max(0.0, epsilon - e);
            } else if (beta[i] <= -c + margin) {
                v = std::max(0.0, epsilon + e);
            } else if (beta[i] > 0) {
                v = std::abs(e - epsilon);
            } else {
                v = std::abs(e + epsilon);
            }
            worst = std::max(worst, v);
        }
        return worst;
    }
};

} // namespace gliomkit::survival
