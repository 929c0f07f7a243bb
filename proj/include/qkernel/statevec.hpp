#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "qkernel/format.hpp"

namespace qkernel {

using cdouble = std::complex<double>;

// Angle-encoding feature map parameters: one qubit per feature, rotation
// angles scaled by lambda.
struct FeatureMapSpec {
    int n_qubits = 1;
    double lambda = 1.0;

    void validate() const {
        if (n_qubits < 1) throw std::invalid_argument("FeatureMapSpec: n_qubits must be >= 1");
        if (!std::isfinite(lambda)) throw std::invalid_argument("FeatureMapSpec: lambda must be finite");
    }
};

enum class GateKind { H, Rz, Ry, Cnot };

// Qubit indices are 1-based; qubit 1 is the least-significant amplitude bit.
struct Gate {
    GateKind kind;
    int target = 0;
    int control = 0;  // CNOT only
    double angle = 0.0; // Rz/Ry only

    static Gate h(int q) { return {GateKind::H, q, 0, 0.0}; }
    static Gate rz(int q, double a) { return {GateKind::Rz, q, 0, a}; }
    static Gate ry(int q, double a) { return {GateKind::Ry, q, 0, a}; }
    static Gate cnot(int control, int target) { return {GateKind::Cnot, target, control, 0.0}; }
};

struct StateVector {
    int n_qubits = 0;
    std::vector<cdouble> amplitudes;

    explicit StateVector(int n = 1)
        : n_qubits(n), amplitudes(std::size_t{1} << n, cdouble{0.0, 0.0}) {
        if (n < 1 || n > 30) throw std::invalid_argument("StateVector: unsupported qubit count");
        amplitudes[0] = 1.0;
    }

    std::size_t dim() const { return amplitudes.size(); }

    double norm() const {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return std::sqrt(s);
    }
};

namespace detail {

inline void check_qubit(const StateVector& s, int q, const char* what) {
    if (q < 1 || q > s.n_qubits)
        throw std::invalid_argument(std::string(what) + ": qubit index out of range");
}

// bit index of a 1-based qubit
inline std::size_t bit_mask(int q) { return std::size_t{1} << (q - 1); }

inline constexpr double kInvSqrt2 = 0.70710678118654752440;

template <typename PairOp>
inline void for_each_pair(std::vector<cdouble>& amp, std::size_t mask, PairOp&& op) {
    const std::size_t dim = amp.size();
    for (std::size_t base = 0; base < dim; base += 2 * mask)
        for (std::size_t low = 0; low < mask; ++low)
            op(amp[base + low], amp[base + low + mask]);
}

} // namespace detail

inline void apply_h(StateVector& s, int q) {
    detail::check_qubit(s, q, "apply_h");
    detail::for_each_pair(s.amplitudes, detail::bit_mask(q), [](cdouble& a0, cdouble& a1) {
        const cdouble t0 = a0;
        a0 = detail::kInvSqrt2 * (t0 + a1);
        a1 = detail::kInvSqrt2 * (t0 - a1);
    });
}

// Rz(theta) = diag(e^{-i theta/2}, e^{+i theta/2})
inline void apply_rz(StateVector& s, int q, double theta) {
    detail::check_qubit(s, q, "apply_rz");
    const cdouble e0 = std::polar(1.0, -0.5 * theta);
    const cdouble e1 = std::polar(1.0, +0.5 * theta);
    detail::for_each_pair(s.amplitudes, detail::bit_mask(q), [&](cdouble& a0, cdouble& a1) {
        a0 *= e0;
        a1 *= e1;
    });
}

// Ry(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]]
inline void apply_ry(StateVector& s, int q, double theta) {
    detail::check_qubit(s, q, "apply_ry");
    const double c = std::cos(0.5 * theta);
    const double sn = std::sin(0.5 * theta);
    detail::for_each_pair(s.amplitudes, detail::bit_mask(q), [&](cdouble& a0, cdouble& a1) {
        const cdouble t0 = a0;
        a0 = c * t0 - sn * a1;
        a1 = sn * t0 + c * a1;
    });
}

inline void apply_cnot(StateVector& s, int control, int target) {
    detail::check_qubit(s, control, "apply_cnot");
    detail::check_qubit(s, target, "apply_cnot");
    if (control == target) throw std::invalid_argument("apply_cnot: control equals target");
    const std::size_t cmask = detail::bit_mask(control);
    const std::size_t tmask = detail::bit_mask(target);
    const std::size_t dim = s.dim();
    for (std::size_t i = 0; i < dim; ++i)
        if ((i & cmask) && !(i & tmask)) std::swap(s.amplitudes[i], s.amplitudes[i | tmask]);
}

inline void apply_pauli_x(StateVector& s, int q) {
    detail::check_qubit(s, q, "apply_pauli_x");
    detail::for_each_pair(s.amplitudes, detail::bit_mask(q),
                          [](cdouble& a0, cdouble& a1) { std::swap(a0, a1); });
}

inline void apply_pauli_y(StateVector& s, int q) {
    detail::check_qubit(s, q, "apply_pauli_y");
    detail::for_each_pair(s.amplitudes, detail::bit_mask(q), [](cdouble& a0, cdouble& a1) {
        const cdouble t0 = a0;
        a0 = cdouble(a1.imag(), -a1.real());  // -i * a1
        a1 = cdouble(-t0.imag(), t0.real());  // +i * a0
    });
}

inline void apply_pauli_z(StateVector& s, int q) {
    detail::check_qubit(s, q, "apply_pauli_z");
    detail::for_each_pair(s.amplitudes, detail::bit_mask(q),
                          [](cdouble&, cdouble& a1) { a1 = -a1; });
}

inline void apply_gate_inplace(StateVector& s, const Gate& g) {
    switch (g.kind) {
        case GateKind::H: apply_h(s, g.target); break;
        case GateKind::Rz: apply_rz(s, g.target, g.angle); break;
        case GateKind::Ry: apply_ry(s, g.target, g.angle); break;
        case GateKind::Cnot: apply_cnot(s, g.control, g.target); break;
    }
}

inline StateVector apply_gate(const StateVector& s, const Gate& g) {
    StateVector out = s;
    apply_gate_inplace(out, g);
    return out;
}

// Gate order: H on every qubit; per qubit Rz(lambda x_q) then Ry(lambda x_q);
// the neighbor CNOT chain in ascending q; a final Rz(lambda x_q) layer.
inline std::vector<Gate> build_feature_circuit(std::span<const double> x, const FeatureMapSpec& spec) {
    spec.validate();
    const int n = spec.n_qubits;
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("build_feature_circuit: feature length does not match n_qubits");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("build_feature_circuit: non-finite feature");

    std::vector<Gate> gates;
    gates.reserve(static_cast<std::size_t>(4 * n + (n - 1)));
    for (int q = 1; q <= n; ++q) gates.push_back(Gate::h(q));
    for (int q = 1; q <= n; ++q) {
        const double a = spec.lambda * x[static_cast<std::size_t>(q - 1)];
        gates.push_back(Gate::rz(q, a));
        gates.push_back(Gate::ry(q, a));
    }
    for (int q = 1; q < n; ++q) gates.push_back(Gate::cnot(q, q + 1));
    for (int q = 1; q <= n; ++q)
        gates.push_back(Gate::rz(q, spec.lambda * x[static_cast<std::size_t>(q - 1)]));
    return gates;
}

// Adjoint circuit: gates reversed, rotation angles negated (H and CNOT are
// self-inverse).
inline std::vector<Gate> inverted_circuit(const std::vector<Gate>& gates) {
    std::vector<Gate> inv(gates.rbegin(), gates.rend());
    for (Gate& g : inv)
        if (g.kind == GateKind::Rz || g.kind == GateKind::Ry) g.angle = -g.angle;
    return inv;
}

inline StateVector feature_state(std::span<const double> x, const FeatureMapSpec& spec) {
    const auto gates = build_feature_circuit(x, spec);
    StateVector s(spec.n_qubits);
    for (const Gate& g : gates) apply_gate_inplace(s, g);
    return s;
}

inline cdouble inner_product(const StateVector& a, const StateVector& b) {
    if (a.n_qubits != b.n_qubits)
        throw std::invalid_argument("inner_product: qubit counts differ");
    cdouble s{0.0, 0.0};
    for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return s;
}

inline double overlap_probability(const StateVector& a, const StateVector& b) {
    return std::norm(inner_product(a, b));
}

// K(x, x') = |<phi(x)|phi(x')>|^2
inline double exact_kernel(std::span<const double> x, std::span<const double> xp,
                           const FeatureMapSpec& spec) {
    if (x.size() != xp.size())
        throw std::invalid_argument("exact_kernel: feature lengths differ");
    return overlap_probability(feature_state(x, spec), feature_state(xp, spec));
}

// Debug dump: header then one row per basis index with columns index,re,im.
inline void dump_state_csv(const StateVector& s, std::ostream& os) {
    os << "index,re,im\n";
    for (std::size_t i = 0; i < s.dim(); ++i)
        os << i << ',' << format_double(s.amplitudes[i].real()) << ','
           << format_double(s.amplitudes[i].imag()) << '\n';
}

} // namespace qkernel
