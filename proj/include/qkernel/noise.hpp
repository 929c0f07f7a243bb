#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qkernel/errors.hpp"
#include "qkernel/rng.hpp"
#include "qkernel/statevec.hpp"

namespace qkernel {

// Stochastic Pauli error rates: after each single-qubit gate a uniformly
// random X/Y/Z fires with probability p1; after each CNOT one of the 15
// non-identity two-qubit Pauli pairs fires with probability p2.
struct NoiseParams {
    double p1 = 0.0;
    double p2 = 0.0;

    void validate() const {
        if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0))
            throw std::invalid_argument("NoiseParams: error probabilities must lie in [0, 1]");
    }
};

struct ShotPlan {
    long long shots = 500;
    std::uint64_t base_seed = 0;

    void validate() const {
        if (shots < 1) throw std::invalid_argument("ShotPlan: shots must be >= 1");
    }
};

struct EntryEstimate {
    double estimate = 0.0;
    long long shots_used = 0;
};

namespace detail {

// Compound kernel-estimation circuit: U(x') followed by U^dagger(x); the
// all-zeros outcome probability equals K(x, x').
inline std::vector<Gate> compound_circuit(std::span<const double> x, std::span<const double> xp,
                                          const FeatureMapSpec& spec) {
    auto gates = build_feature_circuit(xp, spec);
    const auto adj = inverted_circuit(build_feature_circuit(x, spec));
    gates.insert(gates.end(), adj.begin(), adj.end());
    return gates;
}

inline void apply_single_pauli(StateVector& s, int q, std::uint64_t which) {
    switch (which) {
        case 0: apply_pauli_x(s, q); break;
        case 1: apply_pauli_y(s, q); break;
        case 2: apply_pauli_z(s, q); break;
        default: break;
    }
}

// index 1..15 -> (pauli on control, pauli on target), 0 = I, 1 = X, 2 = Y, 3 = Z
inline void apply_pair_pauli(StateVector& s, int control, int target, std::uint64_t index) {
    const std::uint64_t on_control = index >> 2;
    const std::uint64_t on_target = index & 3;
    if (on_control) apply_single_pauli(s, control, on_control - 1);
    if (on_target) apply_single_pauli(s, target, on_target - 1);
}

struct FiredError {
    std::size_t site;
    std::uint64_t pick;
};

// Per-shot draw order: the measurement uniform comes first, then one uniform
// per gate site (plus a Pauli pick when a site fires). Drawing the
// measurement first lets the noiseless binomial shortcut consume an
// identical stream, so p1 = p2 = 0 reproduces noiseless estimates exactly.
inline bool noisy_shot(const std::vector<Gate>& gates,
                       const std::vector<std::vector<cdouble>>& prefix, double p0_clean,
                       int n_qubits, const NoiseParams& noise, std::uint64_t entry_seed,
                       long long shot, std::vector<FiredError>& fired, StateVector& scratch) {
    Rng rng(mix_seed(entry_seed, static_cast<std::uint64_t>(shot)));
    const double u_meas = rng.next_double();

    fired.clear();
    for (std::size_t g = 0; g < gates.size(); ++g) {
        const bool two_qubit = gates[g].kind == GateKind::Cnot;
        const double p_site = two_qubit ? noise.p2 : noise.p1;
        if (rng.next_double() < p_site)
            fired.push_back({g, rng.next_below(two_qubit ? 15u : 3u)});
    }

    if (fired.empty()) return u_meas < p0_clean;

    const std::size_t first = fired.front().site;
    scratch.n_qubits = n_qubits;
    scratch.amplitudes = prefix[first + 1];
    // the first error fires on the cached state; later ones fire during replay
    {
        const Gate& g = gates[first];
        if (g.kind == GateKind::Cnot)
            apply_pair_pauli(scratch, g.control, g.target, fired.front().pick + 1);
        else
            apply_single_pauli(scratch, g.target, fired.front().pick);
    }
    std::size_t next_fired = 1;
    for (std::size_t g = first + 1; g < gates.size(); ++g) {
        apply_gate_inplace(scratch, gates[g]);
        if (next_fired < fired.size() && fired[next_fired].site == g) {
            const Gate& gate = gates[g];
            if (gate.kind == GateKind::Cnot)
                apply_pair_pauli(scratch, gate.control, gate.target, fired[next_fired].pick + 1);
            else
                apply_single_pauli(scratch, gate.target, fired[next_fired].pick);
            ++next_fired;
        }
    }
    return u_meas < std::norm(scratch.amplitudes[0]);
}

} // namespace detail

// Noiseless shortcut: the exact all-zeros probability is computed once and a
// binomial count of `shots` per-shot Bernoulli draws is taken against it.
inline EntryEstimate binomial_estimate(double probability, long long shots,
                                       std::uint64_t entry_seed) {
    if (shots < 1) throw std::invalid_argument("binomial_estimate: shots must be >= 1");
    long long count = 0;
    for (long long s = 0; s < shots; ++s) {
        Rng rng(mix_seed(entry_seed, static_cast<std::uint64_t>(s)));
        if (rng.next_double() < probability) ++count;
    }
    return {static_cast<double>(count) / static_cast<double>(shots), shots};
}

// Shot-sampled kernel entry. Deterministic given entry_seed; shots are
// independent substreams, so results do not depend on scheduling.
inline EntryEstimate sample_kernel_entry(std::span<const double> x, std::span<const double> xp,
                                         const FeatureMapSpec& spec, const ShotPlan& plan,
                                         const std::optional<NoiseParams>& noise,
                                         std::uint64_t entry_seed) {
    spec.validate();
    plan.validate();
    if (x.size() != xp.size() || static_cast<int>(x.size()) != spec.n_qubits)
        throw std::invalid_argument("sample_kernel_entry: feature dimension mismatch");

    const bool noiseless = !noise || (noise->p1 == 0.0 && noise->p2 == 0.0);
    if (noise) noise->validate();
    if (noiseless) {
        const bool same = std::equal(x.begin(), x.end(), xp.begin());
        const double p = same ? 1.0 : exact_kernel(x, xp, spec);
        return binomial_estimate(p, plan.shots, entry_seed);
    }

    const auto gates = detail::compound_circuit(x, xp, spec);

    // States after each gate; replayed trajectories restart at the first
    // error site instead of re-running the full circuit.
    std::vector<std::vector<cdouble>> prefix;
    prefix.reserve(gates.size() + 1);
    StateVector state(spec.n_qubits);
    prefix.push_back(state.amplitudes);
    for (const Gate& g : gates) {
        apply_gate_inplace(state, g);
        prefix.push_back(state.amplitudes);
    }
    const double p0_clean = std::norm(prefix.back()[0]);

    long long count = 0;
    std::vector<detail::FiredError> fired;
    StateVector scratch(spec.n_qubits);
    for (long long s = 0; s < plan.shots; ++s)
        if (detail::noisy_shot(gates, prefix, p0_clean, spec.n_qubits, *noise, entry_seed, s,
                               fired, scratch))
            ++count;
    return {static_cast<double>(count) / static_cast<double>(plan.shots), plan.shots};
}

// ---------------------------------------------------------------------------
// Dense density-matrix oracle for the stochastic Pauli channel (n <= 4).

namespace detail {

struct Unitary2 {
    cdouble m00, m01, m10, m11;
};

inline Unitary2 gate_matrix(const Gate& g) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    switch (g.kind) {
        case GateKind::H:
            return {inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2};
        case GateKind::Rz:
            return {std::polar(1.0, -0.5 * g.angle), 0.0, 0.0, std::polar(1.0, 0.5 * g.angle)};
        case GateKind::Ry: {
            const double c = std::cos(0.5 * g.angle);
            const double s = std::sin(0.5 * g.angle);
            return {c, -s, s, c};
        }
        default:
            throw std::invalid_argument("gate_matrix: not a single-qubit gate");
    }
}

inline Unitary2 pauli_matrix(int which) {
    switch (which) {
        case 0: return {0.0, 1.0, 1.0, 0.0};                                  // X
        case 1: return {0.0, cdouble(0.0, -1.0), cdouble(0.0, 1.0), 0.0};     // Y
        default: return {1.0, 0.0, 0.0, -1.0};                                // Z
    }
}

class DensityMatrix {
public:
    explicit DensityMatrix(int n) : n_(n), dim_(std::size_t{1} << n), rho_(dim_ * dim_) {
        rho_[0] = 1.0; // |0...0><0...0|
    }

    double all_zeros_probability() const { return rho_[0].real(); }

    // rho <- U rho U^dagger for a single-qubit unitary on 1-based qubit q
    void apply_unitary(const Unitary2& u, int q) {
        const std::size_t mask = std::size_t{1} << (q - 1);
        // left: U rho (column-wise pair update over row index)
        for (std::size_t j = 0; j < dim_; ++j)
            for (std::size_t base = 0; base < dim_; base += 2 * mask)
                for (std::size_t low = 0; low < mask; ++low) {
                    cdouble& r0 = at(base + low, j);
                    cdouble& r1 = at(base + low + mask, j);
                    const cdouble t0 = r0;
                    r0 = u.m00 * t0 + u.m01 * r1;
                    r1 = u.m10 * t0 + u.m11 * r1;
                }
        // right: rho U^dagger (row-wise pair update over column index)
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t base = 0; base < dim_; base += 2 * mask)
                for (std::size_t low = 0; low < mask; ++low) {
                    cdouble& c0 = at(i, base + low);
                    cdouble& c1 = at(i, base + low + mask);
                    const cdouble t0 = c0;
                    c0 = t0 * std::conj(u.m00) + c1 * std::conj(u.m01);
                    c1 = t0 * std::conj(u.m10) + c1 * std::conj(u.m11);
                }
    }

    void apply_cnot(int control, int target) {
        const std::size_t cmask = std::size_t{1} << (control - 1);
        const std::size_t tmask = std::size_t{1} << (target - 1);
        for (std::size_t i = 0; i < dim_; ++i)
            if ((i & cmask) && !(i & tmask))
                for (std::size_t j = 0; j < dim_; ++j) std::swap(at(i, j), at(i | tmask, j));
        for (std::size_t j = 0; j < dim_; ++j)
            if ((j & cmask) && !(j & tmask))
                for (std::size_t i = 0; i < dim_; ++i) std::swap(at(i, j), at(i, j | tmask));
    }

    // convex Pauli mixture after a single-qubit gate
    void depolarize_single(int q, double p) {
        if (p <= 0.0) return;
        std::vector<cdouble> mixed(rho_.size());
        accumulate_scaled(mixed, rho_, 1.0 - p);
        for (int w = 0; w < 3; ++w) {
            DensityMatrix tmp = *this;
            tmp.apply_unitary(pauli_matrix(w), q);
            accumulate_scaled(mixed, tmp.rho_, p / 3.0);
        }
        rho_ = std::move(mixed);
    }

    // convex mixture over the 15 non-identity Pauli pairs after a CNOT
    void depolarize_pair(int control, int target, double p) {
        if (p <= 0.0) return;
        std::vector<cdouble> mixed(rho_.size());
        accumulate_scaled(mixed, rho_, 1.0 - p);
        for (int idx = 1; idx < 16; ++idx) {
            DensityMatrix tmp = *this;
            const int on_control = idx >> 2;
            const int on_target = idx & 3;
            if (on_control) tmp.apply_unitary(pauli_matrix(on_control - 1), control);
            if (on_target) tmp.apply_unitary(pauli_matrix(on_target - 1), target);
            accumulate_scaled(mixed, tmp.rho_, p / 15.0);
        }
        rho_ = std::move(mixed);
    }

private:
    cdouble& at(std::size_t i, std::size_t j) { return rho_[i * dim_ + j]; }

    static void accumulate_scaled(std::vector<cdouble>& out, const std::vector<cdouble>& in,
                                  double w) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * in[k];
    }

    int n_;
    std::size_t dim_;
    std::vector<cdouble> rho_;
};

} // namespace detail

// Exact all-zeros outcome probability of the compound circuit under the
// stochastic Pauli channel. Dense 4^n evolution, so capped at 4 qubits.
inline double density_oracle(std::span<const double> x, std::span<const double> xp,
                             const FeatureMapSpec& spec, const NoiseParams& noise) {
    spec.validate();
    noise.validate();
    if (spec.n_qubits > 4)
        throw capacity_error("density_oracle: dense density evolution capped at 4 qubits");
    if (x.size() != xp.size() || static_cast<int>(x.size()) != spec.n_qubits)
        throw std::invalid_argument("density_oracle: feature dimension mismatch");

    const auto gates = detail::compound_circuit(x, xp, spec);
    detail::DensityMatrix rho(spec.n_qubits);
    for (const Gate& g : gates) {
        if (g.kind == GateKind::Cnot) {
            rho.apply_cnot(g.control, g.target);
            rho.depolarize_pair(g.control, g.target, noise.p2);
        } else {
            rho.apply_unitary(detail::gate_matrix(g), g.target);
            rho.depolarize_single(g.target, noise.p1);
        }
    }
    return rho.all_zeros_probability();
}

} // namespace qkernel
