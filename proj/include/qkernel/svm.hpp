#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qkernel/kernel.hpp"
#include "qkernel/matrix.hpp"

namespace qkernel {

struct SolverConfig {
    double kkt_tolerance = 1e-3;
    std::optional<long long> max_passes; // pair updates; defaults to 10 * m^2
    double numerical_zero = 1e-8;

    void validate() const {
        if (!(kkt_tolerance > 0.0)) throw std::invalid_argument("SolverConfig: kkt_tolerance must be positive");
        if (max_passes && *max_passes <= 0) throw std::invalid_argument("SolverConfig: max_passes must be positive");
        if (!(numerical_zero > 0.0)) throw std::invalid_argument("SolverConfig: numerical_zero must be positive");
    }
};

struct SVCModel {
    std::vector<double> alpha;
    double b = 0.0;
    std::vector<std::size_t> sv_indices; // alpha_i > numerical_zero
    std::vector<int> y;
    double C = 1.0;
    bool converged = true;
};

struct SVRModel {
    std::vector<double> beta; // beta_i = alpha*_i - alpha_i
    double b = 0.0;
    std::vector<std::size_t> sv_indices; // |beta_i| > numerical_zero
    double C = 1.0;
    double epsilon = 0.0;
    bool converged = true;
};

namespace detail {

inline void snap(double& v, double bound, double tol = 1e-12) {
    if (std::abs(v - bound) <= tol * std::max(1.0, std::abs(bound))) v = bound;
}

inline long long resolved_max_passes(const SolverConfig& cfg, std::size_t m) {
    if (cfg.max_passes) return *cfg.max_passes;
    return 10ll * static_cast<long long>(m) * static_cast<long long>(m);
}

} // namespace detail

// SMO for the C-SVC dual: maximize sum(alpha) - 1/2 sum alpha_i alpha_j y_i
// y_j K_ij subject to alpha in [0, C]^m and sum y_i alpha_i = 0. Working
// pairs are picked by maximal KKT violation; subproblems with non-positive
// curvature are resolved at the feasible segment end.
inline SVCModel train_svc(const Matrix& k, std::span<const int> y, double c,
                          const SolverConfig& cfg = {}) {
    cfg.validate();
    const std::size_t m = k.rows;
    if (k.rows != k.cols) throw std::invalid_argument("train_svc: kernel matrix not square");
    if (y.size() != m) throw std::invalid_argument("train_svc: label length mismatch");
    if (m < 2) throw std::invalid_argument("train_svc: need at least two training points");
    if (!(c > 0.0)) throw std::invalid_argument("train_svc: C must be positive");
    bool has_pos = false;
    bool has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw std::invalid_argument("train_svc: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train_svc: both classes must be present");

    std::vector<double> alpha(m, 0.0);
    std::vector<double> f(m, 0.0); // f_i = sum_j alpha_j y_j K_ij
    const long long max_iter = detail::resolved_max_passes(cfg, m);

    SVCModel model;
    model.converged = false;

    for (long long iter = 0; iter < max_iter; ++iter) {
        // maximal violating pair over g_i = y_i - f_i
        std::size_t i_up = m;
        std::size_t i_low = m;
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const double g = static_cast<double>(y[i]) - f[i];
            const bool in_up = (y[i] == 1 && alpha[i] < c) || (y[i] == -1 && alpha[i] > 0.0);
            const bool in_low = (y[i] == -1 && alpha[i] < c) || (y[i] == 1 && alpha[i] > 0.0);
            if (in_up && g > m_up) { m_up = g; i_up = i; }
            if (in_low && g < m_low) { m_low = g; i_low = i; }
        }
        if (i_up == m || i_low == m || i_up == i_low || m_up - m_low <= cfg.kkt_tolerance) {
            model.converged = true;
            break;
        }

        const std::size_t i = i_up;
        const std::size_t j = i_low;
        // step alpha_i += y_i t, alpha_j -= y_j t keeps the equality constraint
        const double room_i = y[i] == 1 ? c - alpha[i] : alpha[i];
        const double room_j = y[j] == 1 ? alpha[j] : c - alpha[j];
        const double t_hi = std::min(room_i, room_j);
        if (!(t_hi > 0.0)) { model.converged = true; break; }

        const double g = m_up - m_low; // dW/dt at t = 0
        const double eta = k(i, i) + k(j, j) - 2.0 * k(i, j);
        double t;
        if (eta > 1e-300) {
            t = std::min(g / eta, t_hi);
        } else {
            // non-positive curvature: objective is convex along the segment
            // and increasing at 0, so the far end wins
            t = t_hi;
        }

        alpha[i] += static_cast<double>(y[i]) * t;
        alpha[j] -= static_cast<double>(y[j]) * t;
        detail::snap(alpha[i], 0.0);
        detail::snap(alpha[i], c);
        detail::snap(alpha[j], 0.0);
        detail::snap(alpha[j], c);
        alpha[i] = std::clamp(alpha[i], 0.0, c);
        alpha[j] = std::clamp(alpha[j], 0.0, c);

        for (std::size_t kk = 0; kk < m; ++kk) f[kk] += t * (k(i, kk) - k(j, kk));
    }

    // bias: average of y_i - f_i over free SVs, else midpoint of the
    // KKT-feasible interval [m_low, m_up]
    double b_sum = 0.0;
    std::size_t b_count = 0;
    for (std::size_t i = 0; i < m; ++i)
        if (alpha[i] > cfg.numerical_zero && alpha[i] < c - cfg.numerical_zero) {
            b_sum += static_cast<double>(y[i]) - f[i];
            ++b_count;
        }
    if (b_count > 0) {
        model.b = b_sum / static_cast<double>(b_count);
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const double g = static_cast<double>(y[i]) - f[i];
            const bool in_up = (y[i] == 1 && alpha[i] < c) || (y[i] == -1 && alpha[i] > 0.0);
            const bool in_low = (y[i] == -1 && alpha[i] < c) || (y[i] == 1 && alpha[i] > 0.0);
            if (in_up) hi = std::max(hi, g);
            if (in_low) lo = std::min(lo, g);
        }
        model.b = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : 0.0;
    }

    model.alpha = std::move(alpha);
    model.y.assign(y.begin(), y.end());
    model.C = c;
    for (std::size_t i = 0; i < m; ++i)
        if (model.alpha[i] > cfg.numerical_zero) model.sv_indices.push_back(i);
    return model;
}

inline SVCModel train_svc(const KernelMatrix& k, std::span<const int> y, double c,
                          const SolverConfig& cfg = {}) {
    return train_svc(k.entries, y, c, cfg);
}

// Pre-sign decision values: f(x) = sum_i y_i alpha_i K(x_i, x) + b.
inline std::vector<double> decision_values(const SVCModel& model, const Matrix& k_cross) {
    if (k_cross.cols != model.alpha.size())
        throw std::invalid_argument("decision_values: kernel columns do not match model size");
    std::vector<double> out(k_cross.rows, model.b);
    for (std::size_t t = 0; t < k_cross.rows; ++t)
        for (std::size_t i = 0; i < model.alpha.size(); ++i)
            out[t] += static_cast<double>(model.y[i]) * model.alpha[i] * k_cross(t, i);
    return out;
}

inline std::vector<double> decision_values(const SVCModel& model, const CrossKernelMatrix& k) {
    return decision_values(model, k.entries);
}

// sgn with sgn(0) = +1
inline std::vector<int> predict_svc(const SVCModel& model, const Matrix& k_cross) {
    const auto vals = decision_values(model, k_cross);
    std::vector<int> labels(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) labels[i] = vals[i] >= 0.0 ? 1 : -1;
    return labels;
}

inline std::vector<int> predict_svc(const SVCModel& model, const CrossKernelMatrix& k) {
    return predict_svc(model, k.entries);
}

// SMO for the epsilon-SVR dual over beta_i = alpha*_i - alpha_i: maximize
// -1/2 beta^T K beta + beta^T y - epsilon * sum |beta_i| subject to beta in
// [-C, C]^m and sum beta_i = 0.
inline SVRModel train_svr(const Matrix& k, std::span<const double> y, double c, double epsilon,
                          const SolverConfig& cfg = {}) {
    cfg.validate();
    const std::size_t m = k.rows;
    if (k.rows != k.cols) throw std::invalid_argument("train_svr: kernel matrix not square");
    if (y.size() != m) throw std::invalid_argument("train_svr: target length mismatch");
    if (m < 1) throw std::invalid_argument("train_svr: need at least one training point");
    if (!(c > 0.0)) throw std::invalid_argument("train_svr: C must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("train_svr: epsilon must be >= 0");

    std::vector<double> beta(m, 0.0);
    std::vector<double> f(m, 0.0); // f_i = sum_j beta_j K_ij

    const auto up_gain = [&](std::size_t i) {
        return (y[i] - f[i]) - (beta[i] >= 0.0 ? epsilon : -epsilon);
    };
    const auto down_gain = [&](std::size_t i) {
        return (f[i] - y[i]) + (beta[i] > 0.0 ? epsilon : -epsilon);
    };

    SVRModel model;
    model.converged = false;
    const long long max_iter = detail::resolved_max_passes(cfg, m);

    if (m == 1) model.converged = true;
    for (long long iter = 0; m >= 2 && iter < max_iter; ++iter) {
        std::size_t i_up = m;
        std::size_t i_down = m;
        double best_up = -std::numeric_limits<double>::infinity();
        double best_down = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (beta[i] < c) {
                const double g = up_gain(i);
                if (g > best_up) { best_up = g; i_up = i; }
            }
            if (beta[i] > -c) {
                const double g = down_gain(i);
                if (g > best_down) { best_down = g; i_down = i; }
            }
        }
        if (i_up == m || i_down == m || i_up == i_down ||
            best_up + best_down <= cfg.kkt_tolerance) {
            model.converged = true;
            break;
        }

        const std::size_t i = i_up;
        const std::size_t j = i_down;
        const double t_hi = std::min(c - beta[i], beta[j] + c);
        if (!(t_hi > 0.0)) { model.converged = true; break; }

        // piecewise quadratic along beta_i += t, beta_j -= t
        const double eta = k(i, i) + k(j, j) - 2.0 * k(i, j);
        const double g_smooth = (y[i] - f[i]) - (y[j] - f[j]);
        const auto delta_w = [&](double t) {
            return g_smooth * t - 0.5 * eta * t * t -
                   epsilon * (std::abs(beta[i] + t) - std::abs(beta[i])) -
                   epsilon * (std::abs(beta[j] - t) - std::abs(beta[j]));
        };

        double candidates[8];
        std::size_t n_cand = 0;
        candidates[n_cand++] = t_hi;
        if (beta[i] < 0.0 && -beta[i] < t_hi) candidates[n_cand++] = -beta[i];
        if (beta[j] > 0.0 && beta[j] < t_hi) candidates[n_cand++] = beta[j];
        if (eta > 1e-300) {
            // stationary point per sign regime of (beta_i + t, beta_j - t)
            for (const double si : {1.0, -1.0})
                for (const double sj : {1.0, -1.0}) {
                    const double ts = (g_smooth - epsilon * si + epsilon * sj) / eta;
                    if (ts > 0.0 && ts < t_hi &&
                        (beta[i] + ts >= 0.0 ? 1.0 : -1.0) == si &&
                        (beta[j] - ts >= 0.0 ? 1.0 : -1.0) == sj)
                        candidates[n_cand++] = ts;
                }
        }

        double best_t = 0.0;
        double best_gain = 0.0;
        for (std::size_t cidx = 0; cidx < n_cand; ++cidx) {
            const double gain = delta_w(candidates[cidx]);
            if (gain > best_gain) { best_gain = gain; best_t = candidates[cidx]; }
        }
        if (!(best_t > 0.0)) { model.converged = true; break; }

        beta[i] += best_t;
        beta[j] -= best_t;
        for (double* v : {&beta[i], &beta[j]}) {
            detail::snap(*v, 0.0);
            detail::snap(*v, c);
            detail::snap(*v, -c);
            *v = std::clamp(*v, -c, c);
        }
        for (std::size_t kk = 0; kk < m; ++kk) f[kk] += best_t * (k(i, kk) - k(j, kk));
    }

    // bias from KKT: free SVs give it exactly; otherwise midpoint of the
    // feasible interval
    double b_sum = 0.0;
    std::size_t b_count = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (beta[i] > cfg.numerical_zero && beta[i] < c - cfg.numerical_zero) {
            b_sum += y[i] - f[i] - epsilon;
            ++b_count;
        } else if (beta[i] < -cfg.numerical_zero && beta[i] > -c + cfg.numerical_zero) {
            b_sum += y[i] - f[i] + epsilon;
            ++b_count;
        }
    }
    if (b_count > 0) {
        model.b = b_sum / static_cast<double>(b_count);
    } else {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (beta[i] < c) lo = std::max(lo, up_gain(i));
            if (beta[i] > -c) hi = std::min(hi, -down_gain(i));
        }
        model.b = std::isfinite(lo) && std::isfinite(hi) ? 0.5 * (lo + hi) : 0.0;
    }

    model.beta = std::move(beta);
    model.C = c;
    model.epsilon = epsilon;
    for (std::size_t i = 0; i < m; ++i)
        if (std::abs(model.beta[i]) > cfg.numerical_zero) model.sv_indices.push_back(i);
    return model;
}

inline SVRModel train_svr(const KernelMatrix& k, std::span<const double> y, double c,
                          double epsilon, const SolverConfig& cfg = {}) {
    return train_svr(k.entries, y, c, epsilon, cfg);
}

// f(x) = sum_i beta_i K(x_i, x) + b
inline std::vector<double> predict_svr(const SVRModel& model, const Matrix& k_cross) {
    if (k_cross.cols != model.beta.size())
        throw std::invalid_argument("predict_svr: kernel columns do not match model size");
    std::vector<double> out(k_cross.rows, model.b);
    for (std::size_t t = 0; t < k_cross.rows; ++t)
        for (std::size_t i = 0; i < model.beta.size(); ++i)
            out[t] += model.beta[i] * k_cross(t, i);
    return out;
}

inline std::vector<double> predict_svr(const SVRModel& model, const CrossKernelMatrix& k) {
    return predict_svr(model, k.entries);
}

// Dual objective values, used to cross-check the solver against independent
// oracles. The feasible flag reports box/equality violations beyond tol.
inline double dual_objective_svc(const Matrix& k, std::span<const int> y,
                                 std::span<const double> alpha, double c,
                                 bool* feasible = nullptr) {
    const std::size_t m = k.rows;
    if (alpha.size() != m || y.size() != m)
        throw std::invalid_argument("dual_objective_svc: size mismatch");
    double lin = 0.0;
    double quad = 0.0;
    double eq = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
        lin += alpha[i];
        eq += static_cast<double>(y[i]) * alpha[i];
        if (alpha[i] < -1e-9 || alpha[i] > c + 1e-9) ok = false;
        for (std::size_t j = 0; j < m; ++j)
            quad += alpha[i] * alpha[j] * static_cast<double>(y[i]) * static_cast<double>(y[j]) *
                    k(i, j);
    }
    if (std::abs(eq) > 1e-8 * static_cast<double>(m) * std::max(1.0, c)) ok = false;
    if (feasible) *feasible = ok;
    return lin - 0.5 * quad;
}

inline double dual_objective_svr(const Matrix& k, std::span<const double> y,
                                 std::span<const double> beta, double c, double epsilon,
                                 bool* feasible = nullptr) {
    const std::size_t m = k.rows;
    if (beta.size() != m || y.size() != m)
        throw std::invalid_argument("dual_objective_svr: size mismatch");
    double lin = 0.0;
    double l1 = 0.0;
    double quad = 0.0;
    double eq = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
        lin += beta[i] * y[i];
        l1 += std::abs(beta[i]);
        eq += beta[i];
        if (std::abs(beta[i]) > c + 1e-9) ok = false;
        for (std::size_t j = 0; j < m; ++j) quad += beta[i] * beta[j] * k(i, j);
    }
    if (std::abs(eq) > 1e-8 * static_cast<double>(m) * std::max(1.0, c)) ok = false;
    if (feasible) *feasible = ok;
    return -0.5 * quad + lin - epsilon * l1;
}

} // namespace qkernel
