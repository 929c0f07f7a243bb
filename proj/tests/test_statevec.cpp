#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qkernel/statevec.hpp"
#include "support/oracles.hpp"

using namespace qkernel;

namespace {

std::vector<double> random_features(Rng& rng, int n, double scale = 3.0) {
    std::vector<double> x(n);
    for (auto& v : x) v = scale * (2.0 * rng.next_double() - 1.0);
    return x;
}

} // namespace

TEST_CASE("feature circuit layout", "[statevec]") {
    SECTION("n=1 has no entanglers and the declared gate order") {
        const auto gates = build_feature_circuit(std::vector<double>{0.7}, {1, 1.0});
        REQUIRE(gates.size() == 4);
        CHECK(gates[0].kind == GateKind::H);
        CHECK(gates[1].kind == GateKind::Rz);
        CHECK(gates[2].kind == GateKind::Ry);
        CHECK(gates[3].kind == GateKind::Rz);
    }
    SECTION("n=4 has 16 single-qubit gates and 3 CNOTs") {
        const auto gates = build_feature_circuit(std::vector<double>{0.1, 0.2, 0.3, 0.4}, {4, 1.0});
        std::size_t singles = 0;
        std::size_t cnots = 0;
        for (const auto& g : gates) (g.kind == GateKind::Cnot ? cnots : singles)++;
        CHECK(singles == 16);
        CHECK(cnots == 3);
    }
    SECTION("CNOT chain ascends: (1,2) before (2,3)") {
        const auto gates = build_feature_circuit(std::vector<double>{0.5, 1.0, 1.5}, {3, 1.0});
        std::vector<std::pair<int, int>> chain;
        for (const auto& g : gates)
            if (g.kind == GateKind::Cnot) chain.emplace_back(g.control, g.target);
        REQUIRE(chain.size() == 2);
        CHECK(chain[0] == std::pair{1, 2});
        CHECK(chain[1] == std::pair{2, 3});
        // the two orders give genuinely different states, so the convention
        // matters; the built circuit must match the ascending-order oracle
        const std::vector<double> x{0.5, 1.0, 1.5};
        const auto built = feature_state(x, {3, 1.0});
        const auto ascending = oracle::dense_circuit_state(gates, 3);
        auto swapped = gates;
        const auto first_cnot = std::find_if(swapped.begin(), swapped.end(), [](const Gate& g) {
            return g.kind == GateKind::Cnot;
        });
        std::iter_swap(first_cnot, first_cnot + 1);
        const auto descending = oracle::dense_circuit_state(swapped, 3);
        double diff_asc = 0.0;
        double diff_desc = 0.0;
        for (std::size_t i = 0; i < built.dim(); ++i) {
            diff_asc = std::max(diff_asc, std::abs(built.amplitudes[i] - ascending[i]));
            diff_desc = std::max(diff_desc, std::abs(built.amplitudes[i] - descending[i]));
        }
        CHECK(diff_asc < 1e-10);
        CHECK(diff_desc > 1e-3);
    }
    SECTION("dimension mismatch rejected") {
        CHECK_THROWS_AS(build_feature_circuit(std::vector<double>{1.0, 2.0}, {3, 1.0}),
                        std::invalid_argument);
        CHECK_THROWS_AS(
            build_feature_circuit(std::vector<double>{std::nan("")}, FeatureMapSpec{1, 1.0}),
            std::invalid_argument);
    }
}

TEST_CASE("single gate fixtures", "[statevec]") {
    SECTION("H on |0>") {
        StateVector s(1);
        apply_gate_inplace(s, Gate::h(1));
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(s.amplitudes[0] - cdouble{r, 0}) < 1e-15);
        CHECK(std::abs(s.amplitudes[1] - cdouble{r, 0}) < 1e-15);
    }
    SECTION("Rz(0) is the identity") {
        StateVector s(2);
        apply_gate_inplace(s, Gate::h(1));
        apply_gate_inplace(s, Gate::h(2));
        const StateVector t = apply_gate(s, Gate::rz(1, 0.0));
        for (std::size_t i = 0; i < s.dim(); ++i)
            CHECK(std::abs(s.amplitudes[i] - t.amplitudes[i]) < 1e-12);
    }
    SECTION("Ry(pi) maps (|0>-|1>)/sqrt2 to (|0>+|1>)/sqrt2") {
        StateVector s(1);
        const double r = 1.0 / std::sqrt(2.0);
        s.amplitudes = {cdouble{r, 0}, cdouble{-r, 0}};
        apply_gate_inplace(s, Gate::ry(1, std::numbers::pi));
        CHECK(std::abs(s.amplitudes[0] - cdouble{r, 0}) < 1e-12);
        CHECK(std::abs(s.amplitudes[1] - cdouble{r, 0}) < 1e-12);
    }
    SECTION("gate index out of range rejected") {
        StateVector s(2);
        CHECK_THROWS_AS(apply_gate(s, Gate::h(3)), std::invalid_argument);
        CHECK_THROWS_AS(apply_gate(s, Gate::h(0)), std::invalid_argument);
        CHECK_THROWS_AS(apply_gate(s, Gate::cnot(1, 1)), std::invalid_argument);
    }
}

TEST_CASE("feature state fixtures", "[statevec]") {
    SECTION("x = 0 at n=2 gives the uniform state") {
        const auto s = feature_state(std::vector<double>{0.0, 0.0}, {2, 1.0});
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(std::abs(s.amplitudes[i] - cdouble{0.5, 0.0}) < 1e-12);
    }
    SECTION("x = 0 at n=1 gives |+>") {
        const auto s = feature_state(std::vector<double>{0.0}, {1, 1.0});
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(std::abs(s.amplitudes[0] - cdouble{r, 0}) < 1e-12);
        CHECK(std::abs(s.amplitudes[1] - cdouble{r, 0}) < 1e-12);
    }
    SECTION("matches the dense matrix-product oracle") {
        const std::vector<double> x{0.5, 1.0, 1.5};
        const FeatureMapSpec spec{3, 1.3};
        const auto fast = feature_state(x, spec);
        const auto dense = oracle::dense_feature_state(x, spec);
        for (std::size_t i = 0; i < fast.dim(); ++i)
            CHECK(std::abs(fast.amplitudes[i] - dense[i]) < 1e-10);
    }
}

TEST_CASE("oracle equivalence over random circuits, n <= 3", "[statevec]") {
    Rng rng(2024);
    for (int n = 1; n <= 3; ++n) {
        for (int rep = 0; rep < 20; ++rep) {
            const FeatureMapSpec spec{n, 0.25 + 2.0 * rng.next_double()};
            const auto x = random_features(rng, n);
            const auto fast = feature_state(x, spec);
            const auto dense = oracle::dense_feature_state(x, spec);
            for (std::size_t i = 0; i < fast.dim(); ++i)
                REQUIRE(std::abs(fast.amplitudes[i] - dense[i]) < 1e-10);
        }
    }
}

TEST_CASE("norm preservation", "[statevec]") {
    Rng rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 1 + static_cast<int>(rng.next_below(5));
        const FeatureMapSpec spec{n, 0.5 + rng.next_double()};
        const auto s = feature_state(random_features(rng, n), spec);
        CHECK(std::abs(s.norm() - 1.0) < 1e-10);
    }
}

TEST_CASE("exact kernel", "[statevec]") {
    SECTION("self overlap is 1") {
        Rng rng(5);
        for (int n = 1; n <= 4; ++n) {
            const auto x = random_features(rng, n);
            CHECK(std::abs(exact_kernel(x, x, {n, 1.0}) - 1.0) < 1e-12);
        }
    }
    SECTION("orthogonal pair at n=1: x=0 vs x=pi") {
        const double k = exact_kernel(std::vector<double>{0.0}, std::vector<double>{std::numbers::pi},
                                      {1, 1.0});
        CHECK(std::abs(k) < 1e-12);
        CHECK(std::abs(oracle::dense_exact_kernel(std::vector<double>{0.0},
                                                  std::vector<double>{std::numbers::pi}, {1, 1.0})) <
              1e-12);
    }
    SECTION("symmetry and bounds over 100 random pairs at n=4") {
        Rng rng(77);
        for (int rep = 0; rep < 100; ++rep) {
            const auto x = random_features(rng, 4);
            const auto xp = random_features(rng, 4);
            const double a = exact_kernel(x, xp, {4, 1.0});
            const double b = exact_kernel(xp, x, {4, 1.0});
            REQUIRE(std::abs(a - b) < 1e-12);
            REQUIRE(a >= -1e-12);
            REQUIRE(a <= 1.0 + 1e-12);
        }
    }
    SECTION("lambda = 0 collapses every kernel value to 1") {
        Rng rng(31);
        for (int rep = 0; rep < 10; ++rep) {
            const auto x = random_features(rng, 3);
            const auto xp = random_features(rng, 3);
            CHECK(std::abs(exact_kernel(x, xp, {3, 0.0}) - 1.0) < 1e-12);
        }
    }
    SECTION("dimension mismatch rejected") {
        CHECK_THROWS_AS(exact_kernel(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0},
                                     FeatureMapSpec{1, 1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("state CSV dump", "[statevec]") {
    const auto s = feature_state(std::vector<double>{0.3}, {1, 1.0});
    std::ostringstream os;
    dump_state_csv(s, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "index,re,im");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        REQUIRE(c1 != std::string::npos);
        REQUIRE(c2 != std::string::npos);
        const auto re = parse_double(line.substr(c1 + 1, c2 - c1 - 1));
        const auto im = parse_double(line.substr(c2 + 1));
        CHECK(std::abs(cdouble(re, im) - s.amplitudes[rows]) == 0.0);
        ++rows;
    }
    CHECK(rows == 2);
}
