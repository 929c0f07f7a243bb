#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkernel/eig.hpp"
#include "qkernel/errors.hpp"
#include "qkernel/format.hpp"
#include "qkernel/matrix.hpp"
#include "qkernel/noise.hpp"
#include "qkernel/parallel.hpp"
#include "qkernel/statevec.hpp"

namespace qkernel {

enum class BackendMode { Exact, Sampled, Noisy };

inline const char* to_string(BackendMode m) {
    switch (m) {
        case BackendMode::Exact: return "exact";
        case BackendMode::Sampled: return "sampled";
        default: return "noisy";
    }
}

inline BackendMode backend_mode_from_string(const std::string& s) {
    if (s == "exact") return BackendMode::Exact;
    if (s == "sampled") return BackendMode::Sampled;
    if (s == "noisy") return BackendMode::Noisy;
    throw std::invalid_argument("unknown backend mode: '" + s + "'");
}

// Kernel evaluation backend: exact statevector overlaps, shot-sampled
// estimates, or shot-sampled estimates with stochastic Pauli gate noise.
struct KernelBackend {
    BackendMode mode = BackendMode::Exact;
    FeatureMapSpec spec;
    std::optional<ShotPlan> plan;
    std::optional<NoiseParams> noise;

    void validate() const {
        spec.validate();
        if (mode != BackendMode::Exact) {
            if (!plan) throw std::invalid_argument("KernelBackend: sampled/noisy modes require a shot plan");
            plan->validate();
        }
        if (mode == BackendMode::Noisy) {
            if (!noise) throw std::invalid_argument("KernelBackend: noisy mode requires noise parameters");
            noise->validate();
        }
    }
};

struct KernelMeta {
    BackendMode mode = BackendMode::Exact;
    int n_qubits = 0;
    double lambda = 1.0;
    long long shots = 0; // per entry; 0 for exact
    std::uint64_t base_seed = 0;
    unsigned long long total_shots = 0;
};

struct KernelMatrix {
    Matrix entries; // m x m, symmetric by construction
    KernelMeta meta;

    std::size_t size() const { return entries.rows; }
};

struct CrossKernelMatrix {
    Matrix entries; // m_test x m_train
    KernelMeta meta;
};

namespace detail {

inline std::vector<StateVector> feature_states(const Matrix& x, const FeatureMapSpec& spec) {
    std::vector<StateVector> states(x.rows, StateVector(spec.n_qubits));
    parallel_for(x.rows, [&](std::size_t i) {
        states[i] = feature_state(std::span<const double>(&x.data[i * x.cols], x.cols), spec);
    });
    return states;
}

inline std::span<const double> row_span(const Matrix& x, std::size_t i) {
    return {&x.data[i * x.cols], x.cols};
}

// Cross-matrix entries draw from a tagged stream so a shared base seed does
// not replicate the Gram draws.
constexpr std::uint64_t kCrossStreamTag = 0x63726f7373ULL; // "cross"

} // namespace detail

// Gram matrix over training rows. Only the diagonal and upper triangle are
// evaluated; the lower triangle is mirrored, never re-estimated. The exact
// backend pins the diagonal to 1; sampled backends measure it.
inline KernelMatrix gram(const Matrix& x, const KernelBackend& backend) {
    backend.validate();
    if (x.rows == 0) throw std::invalid_argument("gram: empty feature matrix");
    if (static_cast<int>(x.cols) != backend.spec.n_qubits)
        throw std::invalid_argument("gram: feature dimension does not match n_qubits");

    const std::size_t m = x.rows;
    KernelMatrix k;
    k.entries = Matrix(m, m);
    k.meta.mode = backend.mode;
    k.meta.n_qubits = backend.spec.n_qubits;
    k.meta.lambda = backend.spec.lambda;
    k.meta.shots = backend.mode == BackendMode::Exact ? 0 : backend.plan->shots;
    k.meta.base_seed = backend.mode == BackendMode::Exact ? 0 : backend.plan->base_seed;
    k.meta.total_shots = backend.mode == BackendMode::Exact
                             ? 0
                             : static_cast<unsigned long long>(m) * (m + 1) / 2 *
                                   static_cast<unsigned long long>(backend.plan->shots);

    struct Task {
        std::size_t i, j;
    };
    std::vector<Task> tasks;
    tasks.reserve(m * (m + 1) / 2);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) tasks.push_back({i, j});

    if (backend.mode == BackendMode::Exact) {
        const auto states = detail::feature_states(x, backend.spec);
        parallel_for(tasks.size(), [&](std::size_t t) {
            const auto [i, j] = tasks[t];
            const double v = i == j ? 1.0 : overlap_probability(states[i], states[j]);
            k.entries(i, j) = v;
            k.entries(j, i) = v;
        });
    } else if (backend.mode == BackendMode::Sampled) {
        const auto states = detail::feature_states(x, backend.spec);
        parallel_for(tasks.size(), [&](std::size_t t) {
            const auto [i, j] = tasks[t];
            const bool same_row =
                i == j || std::equal(detail::row_span(x, i).begin(), detail::row_span(x, i).end(),
                                     detail::row_span(x, j).begin());
            const double p = same_row ? 1.0 : overlap_probability(states[i], states[j]);
            const auto est = binomial_estimate(p, backend.plan->shots,
                                               mix_seed(backend.plan->base_seed, i, j));
            k.entries(i, j) = est.estimate;
            k.entries(j, i) = est.estimate;
        });
    } else {
        parallel_for(tasks.size(), [&](std::size_t t) {
            const auto [i, j] = tasks[t];
            const auto est =
                sample_kernel_entry(detail::row_span(x, i), detail::row_span(x, j), backend.spec,
                                    *backend.plan, backend.noise,
                                    mix_seed(backend.plan->base_seed, i, j));
            k.entries(i, j) = est.estimate;
            k.entries(j, i) = est.estimate;
        });
    }
    return k;
}

// Rectangular test-by-train kernel; every entry is evaluated.
inline CrossKernelMatrix cross(const Matrix& x_test, const Matrix& x_train,
                               const KernelBackend& backend) {
    backend.validate();
    if (x_test.rows == 0 || x_train.rows == 0)
        throw std::invalid_argument("cross: empty feature matrix");
    if (x_test.cols != x_train.cols || static_cast<int>(x_train.cols) != backend.spec.n_qubits)
        throw std::invalid_argument("cross: feature dimension mismatch");

    const std::size_t mt = x_test.rows;
    const std::size_t mr = x_train.rows;
    CrossKernelMatrix k;
    k.entries = Matrix(mt, mr);
    k.meta.mode = backend.mode;
    k.meta.n_qubits = backend.spec.n_qubits;
    k.meta.lambda = backend.spec.lambda;
    k.meta.shots = backend.mode == BackendMode::Exact ? 0 : backend.plan->shots;
    k.meta.base_seed = backend.mode == BackendMode::Exact ? 0 : backend.plan->base_seed;
    k.meta.total_shots =
        backend.mode == BackendMode::Exact
            ? 0
            : static_cast<unsigned long long>(mt) * mr *
                  static_cast<unsigned long long>(backend.plan->shots);

    const std::uint64_t stream =
        backend.mode == BackendMode::Exact
            ? 0
            : splitmix64(backend.plan->base_seed ^ detail::kCrossStreamTag);

    if (backend.mode == BackendMode::Noisy) {
        parallel_for(mt * mr, [&](std::size_t t) {
            const std::size_t i = t / mr;
            const std::size_t j = t % mr;
            const auto est = sample_kernel_entry(detail::row_span(x_test, i),
                                                 detail::row_span(x_train, j), backend.spec,
                                                 *backend.plan, backend.noise, mix_seed(stream, i, j));
            k.entries(i, j) = est.estimate;
        });
    } else {
        const auto test_states = detail::feature_states(x_test, backend.spec);
        const auto train_states = detail::feature_states(x_train, backend.spec);
        parallel_for(mt * mr, [&](std::size_t t) {
            const std::size_t i = t / mr;
            const std::size_t j = t % mr;
            const bool same_row =
                std::equal(detail::row_span(x_test, i).begin(), detail::row_span(x_test, i).end(),
                           detail::row_span(x_train, j).begin());
            const double p = same_row ? 1.0 : overlap_probability(test_states[i], train_states[j]);
            if (backend.mode == BackendMode::Exact) {
                k.entries(i, j) = p;
            } else {
                const auto est = binomial_estimate(p, backend.plan->shots, mix_seed(stream, i, j));
                k.entries(i, j) = est.estimate;
            }
        });
    }
    return k;
}

// Cosine of the angle between two matrices under the Frobenius inner product.
inline double alignment(const Matrix& k, const Matrix& kp) {
    if (!k.same_shape(kp)) throw std::invalid_argument("alignment: shape mismatch");
    const double kk = frobenius_inner(k, k);
    const double pp = frobenius_inner(kp, kp);
    if (kk <= 0.0 || pp <= 0.0)
        throw std::invalid_argument("alignment: undefined for a zero-norm matrix");
    return frobenius_inner(k, kp) / std::sqrt(kk * pp);
}

inline double alignment(const KernelMatrix& k, const KernelMatrix& kp) {
    return alignment(k.entries, kp.entries);
}

// Entrywise deviation summary between a noisy kernel and a reference.
struct DeviationStats {
    double mean_delta = 0.0;
    double frobenius = 0.0;
    std::vector<long long> histogram;
    double hist_lo = 0.0;
    double hist_hi = 0.0;
};

inline DeviationStats deviation_stats(const Matrix& k_noisy, const Matrix& k_ref,
                                      std::size_t bins = 20) {
    if (!k_noisy.same_shape(k_ref)) throw std::invalid_argument("deviation_stats: shape mismatch");
    if (bins == 0) throw std::invalid_argument("deviation_stats: bins must be >= 1");
    DeviationStats out;
    std::vector<double> deltas(k_noisy.data.size());
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t t = 0; t < deltas.size(); ++t) {
        const double d = k_noisy.data[t] - k_ref.data[t];
        deltas[t] = d;
        sum += d;
        sq += d * d;
    }
    out.mean_delta = sum / static_cast<double>(deltas.size());
    out.frobenius = std::sqrt(sq);
    out.hist_lo = *std::min_element(deltas.begin(), deltas.end());
    out.hist_hi = *std::max_element(deltas.begin(), deltas.end());
    out.histogram.assign(bins, 0);
    const double width = out.hist_hi - out.hist_lo;
    for (double d : deltas) {
        std::size_t b = width > 0.0
                            ? static_cast<std::size_t>((d - out.hist_lo) / width *
                                                       static_cast<double>(bins))
                            : 0;
        if (b >= bins) b = bins - 1;
        ++out.histogram[b];
    }
    return out;
}

// Rank-r spectral reconstruction, eigenvalues taken in descending algebraic
// order. Negative eigenvalues are kept unless clip_psd is set.
inline Matrix low_rank_reconstruct(const Matrix& k, std::size_t r, bool clip_psd = false) {
    if (r < 1 || r > k.rows) throw std::invalid_argument("low_rank_reconstruct: rank out of range");
    const EigenSystem es = sym_eig(k);
    const std::size_t m = k.rows;

    double smallest_kept = 0.0;
    for (std::size_t kk = 0; kk < r; ++kk)
        smallest_kept = kk == 0 ? std::abs(es.eigenvalues[kk])
                                : std::min(smallest_kept, std::abs(es.eigenvalues[kk]));
    for (std::size_t kk = r; kk < m; ++kk) {
        if (std::abs(es.eigenvalues[kk]) > smallest_kept + 1e-12) {
            std::cerr << "[qkernel] warning: dropped eigenvalue " << es.eigenvalues[kk]
                      << " exceeds a kept one in magnitude; algebraic ordering differs from "
                         "magnitude ordering\n";
            break;
        }
    }

    Matrix out(m, m);
    for (std::size_t kk = 0; kk < r; ++kk) {
        double mu = es.eigenvalues[kk];
        if (clip_psd && mu < 0.0) mu = 0.0;
        if (mu == 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) {
            const double ui = mu * es.eigenvectors(i, kk);
            for (std::size_t j = i; j < m; ++j) {
                const double v = ui * es.eigenvectors(j, kk);
                out(i, j) += v;
                if (j != i) out(j, i) += v;
            }
        }
    }
    return out;
}

struct RankSelection {
    std::size_t r_star = 0;
    std::vector<double> alignment_curve; // alignment_curve[r-1] = A(K_ref, K_hat_r)
};

// Sweeps the reconstruction rank and picks the smallest r maximizing the
// alignment with the reference kernel.
inline RankSelection select_rank(const Matrix& k_noisy, const Matrix& k_ref) {
    if (!k_noisy.same_shape(k_ref)) throw std::invalid_argument("select_rank: shape mismatch");
    const EigenSystem es = sym_eig(k_noisy);
    const std::size_t m = k_noisy.rows;

    RankSelection out;
    out.alignment_curve.reserve(m);
    Matrix acc(m, m);
    for (std::size_t r = 1; r <= m; ++r) {
        const double mu = es.eigenvalues[r - 1];
        for (std::size_t i = 0; i < m; ++i) {
            const double ui = mu * es.eigenvectors(i, r - 1);
            for (std::size_t j = 0; j < m; ++j) acc(i, j) += ui * es.eigenvectors(j, r - 1);
        }
        out.alignment_curve.push_back(alignment(k_ref, acc));
    }
    out.r_star = 1;
    for (std::size_t r = 2; r <= m; ++r)
        if (out.alignment_curve[r - 1] > out.alignment_curve[out.r_star - 1]) out.r_star = r;
    return out;
}

// Best rank-r approximation of a rectangular matrix, implemented as a
// projection onto the top-r eigenvectors of the smaller Gram product.
inline Matrix svd_low_rank(const Matrix& k, std::size_t r) {
    const std::size_t kmin = std::min(k.rows, k.cols);
    if (r < 1 || r > kmin) throw std::invalid_argument("svd_low_rank: rank out of range");
    if (r == kmin) return k;

    if (k.cols <= k.rows) {
        // right singular vectors from K^T K; K_r = K V_r V_r^T
        const Matrix g = matmul(transpose(k), k);
        const EigenSystem es = sym_eig(g);
        Matrix vr(k.cols, r);
        for (std::size_t c = 0; c < r; ++c)
            for (std::size_t i = 0; i < k.cols; ++i) vr(i, c) = es.eigenvectors(i, c);
        return matmul(matmul(k, vr), transpose(vr));
    }
    // left singular vectors from K K^T; K_r = U_r U_r^T K
    const Matrix g = matmul(k, transpose(k));
    const EigenSystem es = sym_eig(g);
    Matrix ur(k.rows, r);
    for (std::size_t c = 0; c < r; ++c)
        for (std::size_t i = 0; i < k.rows; ++i) ur(i, c) = es.eigenvectors(i, c);
    return matmul(ur, matmul(transpose(ur), k));
}

// ---------------------------------------------------------------------------
// Kernel matrix file format (CSV):
//   # qkernel v1; mode=<exact|sampled|noisy>; n=<int>; shots=<int|0>; seed=<int>; lambda=<float>
// followed by one comma-separated row per matrix row. Cross matrices carry
// additional "rows=<m_test>; cols=<m_train>" fields in the header.

namespace detail {

inline std::string kernel_header(const KernelMeta& meta, const Matrix& entries, bool is_cross) {
    std::ostringstream os;
    os << "# qkernel v1; mode=" << to_string(meta.mode) << "; n=" << meta.n_qubits
       << "; shots=" << meta.shots << "; seed=" << meta.base_seed
       << "; lambda=" << format_double(meta.lambda);
    if (is_cross) os << "; rows=" << entries.rows << "; cols=" << entries.cols;
    return os.str();
}

inline void write_matrix_rows(std::ostream& os, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) os << ',';
            os << format_double(m(i, j));
        }
        os << '\n';
    }
}

} // namespace detail

inline void save_kernel_csv(const KernelMatrix& k, std::ostream& os) {
    os << detail::kernel_header(k.meta, k.entries, false) << '\n';
    detail::write_matrix_rows(os, k.entries);
}

inline void save_kernel_csv(const CrossKernelMatrix& k, std::ostream& os) {
    os << detail::kernel_header(k.meta, k.entries, true) << '\n';
    detail::write_matrix_rows(os, k.entries);
}

template <typename KernelT>
inline void save_kernel_csv_file(const KernelT& k, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open for writing: " + path);
    save_kernel_csv(k, f);
}

struct LoadedKernel {
    Matrix entries;
    KernelMeta meta;
    bool is_cross = false;
};

inline LoadedKernel load_kernel_csv(std::istream& is, const std::string& origin = "<stream>") {
    std::string header;
    if (!std::getline(is, header) || header.rfind("# qkernel v1;", 0) != 0)
        throw data_error(origin + ": missing '# qkernel v1' header");

    LoadedKernel out;
    std::size_t declared_rows = 0;
    std::size_t declared_cols = 0;
    std::stringstream fields(header.substr(13));
    std::string field;
    while (std::getline(fields, field, ';')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        std::string key = field.substr(0, eq);
        key.erase(0, key.find_first_not_of(' '));
        const std::string value = field.substr(eq + 1);
        if (key == "mode") out.meta.mode = backend_mode_from_string(value);
        else if (key == "n") out.meta.n_qubits = static_cast<int>(parse_int(value));
        else if (key == "shots") out.meta.shots = parse_int(value);
        else if (key == "seed") out.meta.base_seed = parse_u64(value);
        else if (key == "lambda") out.meta.lambda = parse_double(value);
        else if (key == "rows") { declared_rows = static_cast<std::size_t>(parse_int(value)); out.is_cross = true; }
        else if (key == "cols") { declared_cols = static_cast<std::size_t>(parse_int(value)); out.is_cross = true; }
    }

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(parse_double(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw data_error(origin + ": ragged matrix rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error(origin + ": no matrix rows");

    out.entries = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) out.entries(i, j) = rows[i][j];

    if (out.is_cross &&
        (declared_rows != out.entries.rows || declared_cols != out.entries.cols))
        throw data_error(origin + ": header rows/cols do not match matrix body");
    if (!out.is_cross && out.entries.rows != out.entries.cols)
        throw data_error(origin + ": square kernel file has non-square body");

    if (out.meta.mode != BackendMode::Exact && out.meta.shots > 0) {
        const auto s = static_cast<unsigned long long>(out.meta.shots);
        out.meta.total_shots = out.is_cross
                                   ? out.entries.rows * out.entries.cols * s
                                   : out.entries.rows * (out.entries.rows + 1) / 2 * s;
    }
    return out;
}

inline LoadedKernel load_kernel_csv_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open kernel file: " + path);
    return load_kernel_csv(f, path);
}

} // namespace qkernel
