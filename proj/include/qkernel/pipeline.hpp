#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkernel/eig.hpp"
#include "qkernel/matrix.hpp"
#include "qkernel/parallel.hpp"
#include "qkernel/svm.hpp"

namespace qkernel {

// ---------------------------------------------------------------------------
// Feature scaling (fit on training data only)

enum class ScalerMethod { MinMax, Standard };

struct ScalerState {
    ScalerMethod method = ScalerMethod::MinMax;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> center; // min (minmax) or mean (standard)
    std::vector<double> spread; // max-min (minmax) or stddev (standard)
};

inline ScalerState scaler_fit(const Matrix& x_train, ScalerMethod method, double lo, double hi) {
    if (x_train.rows < 2) throw std::invalid_argument("scaler_fit: need at least two rows");
    if (!(hi > lo)) throw std::invalid_argument("scaler_fit: empty target range");
    ScalerState st;
    st.method = method;
    st.lo = lo;
    st.hi = hi;
    st.center.resize(x_train.cols);
    st.spread.resize(x_train.cols);
    for (std::size_t j = 0; j < x_train.cols; ++j) {
        if (method == ScalerMethod::MinMax) {
            double mn = x_train(0, j);
            double mx = mn;
            for (std::size_t i = 1; i < x_train.rows; ++i) {
                mn = std::min(mn, x_train(i, j));
                mx = std::max(mx, x_train(i, j));
            }
            st.center[j] = mn;
            st.spread[j] = mx - mn;
        } else {
            double mean = 0.0;
            for (std::size_t i = 0; i < x_train.rows; ++i) mean += x_train(i, j);
            mean /= static_cast<double>(x_train.rows);
            double var = 0.0;
            for (std::size_t i = 0; i < x_train.rows; ++i) {
                const double d = x_train(i, j) - mean;
                var += d * d;
            }
            st.center[j] = mean;
            st.spread[j] = std::sqrt(var / static_cast<double>(x_train.rows - 1));
        }
    }
    return st;
}

// Maps into [lo, hi]; out-of-range values (unseen test data) are clamped and
// counted. Constant features land at the range midpoint. The standard method
// places mean at the midpoint with +-2 sigma at the range edges.
inline Matrix scaler_apply(const ScalerState& st, const Matrix& x,
                           std::size_t* clamp_count = nullptr) {
    if (x.cols != st.center.size())
        throw std::invalid_argument("scaler_apply: feature dimension mismatch");
    Matrix out(x.rows, x.cols);
    std::size_t clamped = 0;
    const double mid = 0.5 * (st.lo + st.hi);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j) {
            double unit; // position in [0, 1]
            if (st.spread[j] <= 0.0) {
                unit = 0.5;
            } else if (st.method == ScalerMethod::MinMax) {
                unit = (x(i, j) - st.center[j]) / st.spread[j];
            } else {
                unit = 0.5 + (x(i, j) - st.center[j]) / (4.0 * st.spread[j]);
            }
            if (unit < 0.0) { unit = 0.0; ++clamped; }
            else if (unit > 1.0) { unit = 1.0; ++clamped; }
            out(i, j) = st.spread[j] <= 0.0 ? mid : st.lo + unit * (st.hi - st.lo);
        }
    if (clamp_count) *clamp_count = clamped;
    return out;
}

// ---------------------------------------------------------------------------
// Principal component analysis

struct PCAState {
    std::vector<double> mean;
    std::vector<double> scale; // per-feature divisor (1 unless standardized)
    Matrix components;         // original_dim x d, orthonormal columns
    std::vector<double> explained_variance_fraction;
};

inline PCAState pca_fit(const Matrix& x, std::size_t d, bool standardize = false) {
    if (x.rows < 2) throw std::invalid_argument("pca_fit: need at least two rows");
    if (d < 1 || d > x.cols) throw std::invalid_argument("pca_fit: target dimension out of range");

    PCAState st;
    st.mean.assign(x.cols, 0.0);
    st.scale.assign(x.cols, 1.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        for (std::size_t i = 0; i < x.rows; ++i) st.mean[j] += x(i, j);
        st.mean[j] /= static_cast<double>(x.rows);
    }
    if (standardize) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            double var = 0.0;
            for (std::size_t i = 0; i < x.rows; ++i) {
                const double dv = x(i, j) - st.mean[j];
                var += dv * dv;
            }
            const double sd = std::sqrt(var / static_cast<double>(x.rows - 1));
            st.scale[j] = sd > 0.0 ? sd : 1.0;
        }
    }

    Matrix cov(x.cols, x.cols);
    for (std::size_t a = 0; a < x.cols; ++a)
        for (std::size_t b = a; b < x.cols; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.rows; ++i)
                s += (x(i, a) - st.mean[a]) / st.scale[a] * ((x(i, b) - st.mean[b]) / st.scale[b]);
            s /= static_cast<double>(x.rows - 1);
            cov(a, b) = s;
            cov(b, a) = s;
        }

    const EigenSystem es = sym_eig(cov);
    double total = 0.0;
    for (double v : es.eigenvalues) total += std::max(v, 0.0);

    st.components = Matrix(x.cols, d);
    st.explained_variance_fraction.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        // deterministic sign: largest-magnitude entry positive
        std::size_t arg = 0;
        for (std::size_t i = 1; i < x.cols; ++i)
            if (std::abs(es.eigenvectors(i, k)) > std::abs(es.eigenvectors(arg, k))) arg = i;
        const double sign = es.eigenvectors(arg, k) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < x.cols; ++i)
            st.components(i, k) = sign * es.eigenvectors(i, k);
        st.explained_variance_fraction[k] =
            total > 0.0 ? std::max(es.eigenvalues[k], 0.0) / total : 0.0;
    }
    return st;
}

inline Matrix pca_apply(const PCAState& st, const Matrix& x) {
    if (x.cols != st.mean.size()) throw std::invalid_argument("pca_apply: feature dimension mismatch");
    const std::size_t d = st.components.cols;
    Matrix out(x.rows, d);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < x.cols; ++j)
                s += (x(i, j) - st.mean[j]) / st.scale[j] * st.components(j, k);
            out(i, k) = s;
        }
    return out;
}

// Embeds projected rows back into the original feature space.
inline Matrix pca_reconstruct(const PCAState& st, const Matrix& z) {
    if (z.cols != st.components.cols)
        throw std::invalid_argument("pca_reconstruct: component dimension mismatch");
    Matrix out(z.rows, st.mean.size());
    for (std::size_t i = 0; i < z.rows; ++i)
        for (std::size_t j = 0; j < st.mean.size(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < z.cols; ++k) s += z(i, k) * st.components(j, k);
            out(i, j) = s * st.scale[j] + st.mean[j];
        }
    return out;
}

// ---------------------------------------------------------------------------
// Box-Cox power transform of a positive target

inline std::vector<double> boxcox(std::span<const double> y, double xi) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0.0))
            throw std::invalid_argument("boxcox: non-positive value at index " + std::to_string(i));
        out[i] = xi == 0.0 ? std::log(y[i]) : (std::pow(y[i], xi) - 1.0) / xi;
    }
    return out;
}

inline std::vector<double> boxcox_inverse(std::span<const double> t, double xi) {
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = xi == 0.0 ? std::exp(t[i]) : std::pow(xi * t[i] + 1.0, 1.0 / xi);
    return out;
}

// ---------------------------------------------------------------------------
// Classical Gaussian (RBF) kernel baseline

inline Matrix gaussian_kernel_matrix(const Matrix& a, const Matrix& b, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gaussian_kernel_matrix: gamma must be positive");
    if (a.cols != b.cols) throw std::invalid_argument("gaussian_kernel_matrix: dimension mismatch");
    Matrix k(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < a.cols; ++c) {
                const double d = a(i, c) - b(j, c);
                d2 += d * d;
            }
            k(i, j) = std::exp(-gamma * d2);
        }
    return k;
}

// ---------------------------------------------------------------------------
// Metrics

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw std::invalid_argument("accuracy: length mismatch or empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        if (y_true[i] == y_pred[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw std::invalid_argument("rmse: length mismatch or empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double d = y_true[i] - y_pred[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(y_true.size()));
}

// R^2 = 1 - SS_res / SS_tot
inline double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw std::invalid_argument("r_squared: length mismatch or empty input");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(y_true.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (ss_tot <= 0.0) throw std::invalid_argument("r_squared: undefined for constant y_true");
    return 1.0 - ss_res / ss_tot;
}

// ---------------------------------------------------------------------------
// Hyperparameter grid search over precomputed kernels. The scorer trains on
// the train kernel and scores on a held-out validation kernel (rows =
// validation points, cols = training points).

struct SvrGridCell {
    double epsilon = 0.0;
    double C = 0.0;
    double score = 0.0; // validation RMSE
    std::size_t n_sv = 0;
    bool failed = false;
};

struct SvrGridResult {
    double best_epsilon = 0.0;
    double best_C = 0.0;
    double best_score = 0.0;
    std::vector<SvrGridCell> surface; // epsilon-major, C-minor order
};

inline std::vector<double> default_epsilon_grid() {
    std::vector<double> g;
    for (int i = 0; i <= 50; ++i) g.push_back(static_cast<double>(i) / 100.0);
    return g;
}

inline std::vector<double> default_c_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 100; ++i) g.push_back(static_cast<double>(i) / 10.0);
    return g;
}

inline SvrGridResult grid_search_svr(const Matrix& k_train, std::span<const double> y_train,
                                     const Matrix& k_val, std::span<const double> y_val,
                                     std::span<const double> eps_grid,
                                     std::span<const double> c_grid,
                                     const SolverConfig& cfg = {}) {
    if (eps_grid.empty() || c_grid.empty())
        throw std::invalid_argument("grid_search_svr: empty grid");
    SvrGridResult out;
    out.surface.resize(eps_grid.size() * c_grid.size());
    const std::vector<double> ytr(y_train.begin(), y_train.end());
    const std::vector<double> yv(y_val.begin(), y_val.end());

    parallel_for(out.surface.size(), [&](std::size_t t) {
        SvrGridCell& cell = out.surface[t];
        cell.epsilon = eps_grid[t / c_grid.size()];
        cell.C = c_grid[t % c_grid.size()];
        try {
            const SVRModel model = train_svr(k_train, ytr, cell.C, cell.epsilon, cfg);
            const auto pred = predict_svr(model, k_val);
            cell.score = rmse(yv, pred);
            cell.n_sv = model.sv_indices.size();
        } catch (const std::exception&) {
            cell.failed = true;
        }
    });

    const SvrGridCell* best = nullptr;
    for (const auto& cell : out.surface) {
        if (cell.failed) continue;
        if (!best || cell.score < best->score - 1e-12 ||
            (std::abs(cell.score - best->score) <= 1e-12 &&
             (cell.C < best->C || (cell.C == best->C && cell.epsilon < best->epsilon))))
            best = &cell;
    }
    if (!best) throw std::runtime_error("grid_search_svr: every grid cell failed");
    out.best_epsilon = best->epsilon;
    out.best_C = best->C;
    out.best_score = best->score;
    return out;
}

struct SvcGridCell {
    double C = 0.0;
    double score = 0.0; // validation accuracy
    std::size_t n_sv = 0;
    bool failed = false;
};

struct SvcGridResult {
    double best_C = 0.0;
    double best_score = 0.0;
    std::vector<SvcGridCell> surface;
};

inline SvcGridResult grid_search_svc(const Matrix& k_train, std::span<const int> y_train,
                                     const Matrix& k_val, std::span<const int> y_val,
                                     std::span<const double> c_grid,
                                     const SolverConfig& cfg = {}) {
    if (c_grid.empty()) throw std::invalid_argument("grid_search_svc: empty grid");
    SvcGridResult out;
    out.surface.resize(c_grid.size());
    const std::vector<int> ytr(y_train.begin(), y_train.end());
    const std::vector<int> yv(y_val.begin(), y_val.end());

    parallel_for(c_grid.size(), [&](std::size_t t) {
        SvcGridCell& cell = out.surface[t];
        cell.C = c_grid[t];
        try {
            const SVCModel model = train_svc(k_train, ytr, cell.C, cfg);
            const auto pred = predict_svc(model, k_val);
            cell.score = accuracy(yv, pred);
            cell.n_sv = model.sv_indices.size();
        } catch (const std::exception&) {
            cell.failed = true;
        }
    });

    const SvcGridCell* best = nullptr;
    for (const auto& cell : out.surface) {
        if (cell.failed) continue;
        if (!best || cell.score > best->score + 1e-12 ||
            (std::abs(cell.score - best->score) <= 1e-12 && cell.C < best->C))
            best = &cell;
    }
    if (!best) throw std::runtime_error("grid_search_svc: every grid cell failed");
    out.best_C = best->C;
    out.best_score = best->score;
    return out;
}

} // namespace qkernel
