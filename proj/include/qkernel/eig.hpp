#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "qkernel/matrix.hpp"

namespace qkernel {

// Full spectrum of a symmetric matrix. eigenvalues sorted descending by
// algebraic value (ties keep original index order); eigenvectors are the
// matching orthonormal columns.
struct EigenSystem {
    std::vector<double> eigenvalues;
    Matrix eigenvectors; // column k pairs with eigenvalues[k]
};

// Cyclic Jacobi eigendecomposition. Matrices in this project are small
// (<= ~100x100), where Jacobi is accurate, simple, and easily audited.
inline EigenSystem sym_eig(const Matrix& k) {
    if (k.rows != k.cols) throw std::invalid_argument("sym_eig: matrix not square");
    const std::size_t n = k.rows;
    const double scale = std::max(1.0, max_abs(k));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(k(i, j) - k(j, i)) > 1e-10 * scale)
                throw std::invalid_argument("sym_eig: matrix not symmetric within 1e-10");

    Matrix a = k;
    // symmetrize exactly so rotations see one value per pair
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            a(i, j) = v;
            a(j, i) = v;
        }
    Matrix v = Matrix::identity(n);

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= 1e-14 * std::max(1.0, frobenius_norm(a))) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                if (std::abs(apq) <= 1e-300) { a(p, q) = a(q, p) = 0.0; continue; }
                const double tau = (aqq - app) / (2.0 * apq);
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = a(r, p);
                    const double arq = a(r, q);
                    a(r, p) = c * arp - s * arq;
                    a(p, r) = a(r, p);
                    a(r, q) = s * arp + c * arq;
                    a(q, r) = a(r, q);
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vrp = v(r, p);
                    const double vrq = v(r, q);
                    v(r, p) = c * vrp - s * vrq;
                    v(r, q) = s * vrp + c * vrq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenSystem out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t kcol = 0; kcol < n; ++kcol) {
        out.eigenvalues[kcol] = a(order[kcol], order[kcol]);
        for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, kcol) = v(r, order[kcol]);
    }
    return out;
}

} // namespace qkernel
