#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "qkernel/kernel.hpp"
#include "support/oracles.hpp"

using namespace qkernel;

namespace {

Matrix random_dataset(Rng& rng, std::size_t m, std::size_t n, double scale = 2.0) {
    Matrix x(m, n);
    for (auto& v : x.data) v = scale * (2.0 * rng.next_double() - 1.0);
    return x;
}

Matrix random_symmetric(Rng& rng, std::size_t n, double scale = 1.0) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = scale * (2.0 * rng.next_double() - 1.0);
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

struct ScopedThreads {
    explicit ScopedThreads(const char* v) { setenv("QKERNEL_THREADS", v, 1); }
    ~ScopedThreads() { unsetenv("QKERNEL_THREADS"); }
};

} // namespace

TEST_CASE("gram assembly and shot accounting", "[kernel]") {
    Rng rng(11);

    SECTION("m=20 at 500 shots totals 105000; m=40 totals 410000") {
        for (const auto [m, total] :
             {std::pair<std::size_t, unsigned long long>{20, 105000},
              std::pair<std::size_t, unsigned long long>{40, 410000}}) {
            const Matrix x = random_dataset(rng, m, 2);
            KernelBackend backend{BackendMode::Sampled, {2, 1.0}, ShotPlan{500, 9}, std::nullopt};
            const KernelMatrix k = gram(x, backend);
            CHECK(k.meta.total_shots == total);
            CHECK(k.meta.shots == 500);
        }
    }
    SECTION("cross shot totals: 20x10 -> 100000, 40x40 -> 800000") {
        const Matrix xtr20 = random_dataset(rng, 20, 2);
        const Matrix xte10 = random_dataset(rng, 10, 2);
        KernelBackend backend{BackendMode::Sampled, {2, 1.0}, ShotPlan{500, 9}, std::nullopt};
        CHECK(cross(xte10, xtr20, backend).meta.total_shots == 100000ull);
        const Matrix xtr40 = random_dataset(rng, 40, 2);
        const Matrix xte40 = random_dataset(rng, 40, 2);
        CHECK(cross(xte40, xtr40, backend).meta.total_shots == 800000ull);
    }
    SECTION("exact backend pins the diagonal and honors identical rows") {
        Matrix x = random_dataset(rng, 6, 3);
        for (std::size_t j = 0; j < 3; ++j) x(4, j) = x(1, j);
        const KernelMatrix k = gram(x, {BackendMode::Exact, {3, 1.0}, std::nullopt, std::nullopt});
        for (std::size_t i = 0; i < 6; ++i) CHECK(k.entries(i, i) == 1.0);
        CHECK(std::abs(k.entries(1, 4) - 1.0) < 1e-12);
        CHECK(k.meta.total_shots == 0);
        CHECK(k.meta.shots == 0);
    }
    SECTION("gram is exactly symmetric and within [0,1]") {
        const Matrix x = random_dataset(rng, 8, 3);
        KernelBackend backend{BackendMode::Noisy, {3, 1.0}, ShotPlan{50, 4}, NoiseParams{0.05, 0.1}};
        const KernelMatrix k = gram(x, backend);
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = 0; j < 8; ++j) {
                REQUIRE(k.entries(i, j) == k.entries(j, i));
                REQUIRE(k.entries(i, j) >= 0.0);
                REQUIRE(k.entries(i, j) <= 1.0);
            }
    }
    SECTION("exact gram is positive semidefinite") {
        for (int rep = 0; rep < 6; ++rep) {
            const std::size_t m = 5 + rng.next_below(10);
            const int n = 2 + static_cast<int>(rng.next_below(3));
            const Matrix x = random_dataset(rng, m, static_cast<std::size_t>(n));
            const KernelMatrix k =
                gram(x, {BackendMode::Exact, {n, 1.0}, std::nullopt, std::nullopt});
            const EigenSystem es = sym_eig(k.entries);
            REQUIRE(es.eigenvalues.back() >= -1e-8);
        }
    }
    SECTION("empty input rejected") {
        CHECK_THROWS_AS(gram(Matrix(), KernelBackend{}), std::invalid_argument);
    }
    SECTION("backend validation") {
        CHECK_THROWS_AS(
            gram(random_dataset(rng, 3, 2),
                 KernelBackend{BackendMode::Sampled, {2, 1.0}, std::nullopt, std::nullopt}),
            std::invalid_argument);
        CHECK_THROWS_AS(
            gram(random_dataset(rng, 3, 2),
                 KernelBackend{BackendMode::Noisy, {2, 1.0}, ShotPlan{10, 0}, std::nullopt}),
            std::invalid_argument);
    }
}

TEST_CASE("schedule independence of assembly", "[kernel]") {
    Rng rng(21);
    const Matrix x = random_dataset(rng, 10, 3);
    KernelBackend backend{BackendMode::Noisy, {3, 1.0}, ShotPlan{80, 31}, NoiseParams{0.02, 0.05}};
    Matrix serial;
    Matrix threaded;
    {
        ScopedThreads guard("1");
        serial = gram(x, backend).entries;
    }
    {
        ScopedThreads guard("8");
        threaded = gram(x, backend).entries;
    }
    REQUIRE(serial.data == threaded.data);
}

TEST_CASE("frobenius inner product and alignment", "[kernel]") {
    SECTION("fixtures") {
        CHECK(frobenius_inner(Matrix::identity(2), Matrix::identity(2)) == 2.0);
        Matrix ones(2, 2, 1.0);
        CHECK(frobenius_inner(Matrix::identity(2), ones) == 2.0);
        CHECK_THROWS_AS(frobenius_inner(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
    }
    SECTION("symmetry on random matrices") {
        Rng rng(5);
        const Matrix p = random_symmetric(rng, 5);
        const Matrix q = random_symmetric(rng, 5);
        CHECK(frobenius_inner(p, q) == frobenius_inner(q, p));
    }
    SECTION("alignment fixtures") {
        Rng rng(6);
        const Matrix k = random_symmetric(rng, 4);
        CHECK(std::abs(alignment(k, k) - 1.0) < 1e-12);
        Matrix scaled = k;
        for (auto& v : scaled.data) v *= 7.3;
        CHECK(std::abs(alignment(k, scaled) - 1.0) < 1e-12);

        Matrix ones(2, 2, 1.0);
        CHECK(std::abs(alignment(Matrix::identity(2), ones) - 0.70710678118654752) < 1e-5);
        CHECK_THROWS_AS(alignment(Matrix(2, 2), Matrix(2, 2)), std::invalid_argument);
    }
    SECTION("alignment of entrywise-nonnegative matrices lies in [0, 1]") {
        Rng rng(7);
        for (int rep = 0; rep < 20; ++rep) {
            Matrix a(4, 4);
            Matrix b(4, 4);
            for (auto& v : a.data) v = rng.next_double();
            for (auto& v : b.data) v = rng.next_double();
            const double al = alignment(a, b);
            REQUIRE(al >= 0.0);
            REQUIRE(al <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("deviation statistics", "[kernel]") {
    SECTION("identical matrices") {
        const Matrix k(3, 3, 0.5);
        const auto st = deviation_stats(k, k, 5);
        CHECK(st.mean_delta == 0.0);
        CHECK(st.frobenius == 0.0);
    }
    SECTION("worked fixture: mean -0.1, frobenius 0.28284") {
        Matrix ref(2, 2, 1.0);
        Matrix noisy(2, 2, 1.0);
        noisy(0, 1) = 0.8;
        noisy(1, 0) = 0.8;
        const auto st = deviation_stats(noisy, ref, 4);
        CHECK(std::abs(st.mean_delta - (-0.1)) < 1e-12);
        CHECK(std::abs(st.frobenius - 0.28284271247461906) < 1e-12);
        long long total = 0;
        for (auto c : st.histogram) total += c;
        CHECK(total == 4);
    }
    SECTION("shape mismatch rejected") {
        CHECK_THROWS_AS(deviation_stats(Matrix(2, 2), Matrix(3, 3)), std::invalid_argument);
    }
}

TEST_CASE("symmetric eigendecomposition", "[kernel]") {
    SECTION("diagonal fixture") {
        Matrix d(2, 2);
        d(0, 0) = 2.0;
        d(1, 1) = 1.0;
        const auto es = sym_eig(d);
        CHECK(es.eigenvalues[0] == 2.0);
        CHECK(es.eigenvalues[1] == 1.0);
        CHECK(std::abs(std::abs(es.eigenvectors(0, 0)) - 1.0) < 1e-12);
        CHECK(std::abs(std::abs(es.eigenvectors(1, 1)) - 1.0) < 1e-12);
    }
    SECTION("off-diagonal fixture has eigenvalues (1, -1)") {
        Matrix a(2, 2);
        a(0, 1) = 1.0;
        a(1, 0) = 1.0;
        const auto es = sym_eig(a);
        CHECK(std::abs(es.eigenvalues[0] - 1.0) < 1e-12);
        CHECK(std::abs(es.eigenvalues[1] + 1.0) < 1e-12);
    }
    SECTION("reconstruction, orthonormality, and residuals on random input") {
        Rng rng(17);
        const Matrix a = random_symmetric(rng, 10);
        const auto es = sym_eig(a);
        const double norm = frobenius_norm(a);

        for (std::size_t i = 0; i < 10; ++i) {
            double len = 0.0;
            for (std::size_t r = 0; r < 10; ++r) len += es.eigenvectors(r, i) * es.eigenvectors(r, i);
            REQUIRE(std::abs(std::sqrt(len) - 1.0) < 1e-10);
            for (std::size_t j = i + 1; j < 10; ++j) {
                double dot = 0.0;
                for (std::size_t r = 0; r < 10; ++r)
                    dot += es.eigenvectors(r, i) * es.eigenvectors(r, j);
                REQUIRE(std::abs(dot) < 1e-8);
            }
            // K u = mu u
            for (std::size_t r = 0; r < 10; ++r) {
                double kv = 0.0;
                for (std::size_t c = 0; c < 10; ++c) kv += a(r, c) * es.eigenvectors(c, i);
                REQUIRE(std::abs(kv - es.eigenvalues[i] * es.eigenvectors(r, i)) < 1e-8 * norm);
            }
        }

        Matrix rebuilt(10, 10);
        for (std::size_t k = 0; k < 10; ++k)
            for (std::size_t i = 0; i < 10; ++i)
                for (std::size_t j = 0; j < 10; ++j)
                    rebuilt(i, j) += es.eigenvalues[k] * es.eigenvectors(i, k) * es.eigenvectors(j, k);
        double err = 0.0;
        for (std::size_t t = 0; t < rebuilt.data.size(); ++t)
            err += (rebuilt.data[t] - a.data[t]) * (rebuilt.data[t] - a.data[t]);
        CHECK(std::sqrt(err) < 1e-8 * norm);
    }
    SECTION("asymmetric input rejected") {
        Matrix a(2, 2);
        a(0, 1) = 1.0;
        CHECK_THROWS_AS(sym_eig(a), std::invalid_argument);
    }
}

TEST_CASE("low rank reconstruction", "[kernel]") {
    Rng rng(23);
    SECTION("full rank reproduces the input") {
        const Matrix a = random_symmetric(rng, 7);
        const Matrix rebuilt = low_rank_reconstruct(a, 7);
        double err = 0.0;
        for (std::size_t t = 0; t < a.data.size(); ++t)
            err += (rebuilt.data[t] - a.data[t]) * (rebuilt.data[t] - a.data[t]);
        CHECK(std::sqrt(err) < 1e-8 * frobenius_norm(a));
    }
    SECTION("rank-1 outer product recovered at r=1") {
        Matrix k(2, 2);
        const double u[2] = {0.6, 0.8};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) k(i, j) = u[i] * u[j];
        const Matrix rebuilt = low_rank_reconstruct(k, 1);
        for (std::size_t t = 0; t < k.data.size(); ++t)
            CHECK(std::abs(rebuilt.data[t] - k.data[t]) < 1e-12);
    }
    SECTION("diag(2,0,1) at r=2 keeps eigenvalues 2 and 1") {
        Matrix k(3, 3);
        k(0, 0) = 2.0;
        k(2, 2) = 1.0;
        const Matrix rebuilt = low_rank_reconstruct(k, 2);
        CHECK(std::abs(rebuilt(0, 0) - 2.0) < 1e-12);
        CHECK(std::abs(rebuilt(1, 1)) < 1e-12);
        CHECK(std::abs(rebuilt(2, 2) - 1.0) < 1e-12);
    }
    SECTION("eckart-young: frobenius error non-increasing in r") {
        const Matrix a = random_symmetric(rng, 8);
        double prev = 1e300;
        for (std::size_t r = 1; r <= 8; ++r) {
            const Matrix rec = low_rank_reconstruct(a, r);
            double err = 0.0;
            for (std::size_t t = 0; t < a.data.size(); ++t)
                err += (rec.data[t] - a.data[t]) * (rec.data[t] - a.data[t]);
            err = std::sqrt(err);
            REQUIRE(err <= prev + 1e-10);
            prev = err;
        }
    }
    SECTION("psd clip zeroes negative eigenvalues") {
        Matrix a(2, 2);
        a(0, 0) = 1.0;
        a(1, 1) = -0.5;
        const Matrix clipped = low_rank_reconstruct(a, 2, true);
        const auto es = sym_eig(clipped);
        CHECK(es.eigenvalues.back() >= -1e-12);
    }
    SECTION("rank out of range rejected") {
        const Matrix a = random_symmetric(rng, 3);
        CHECK_THROWS_AS(low_rank_reconstruct(a, 0), std::invalid_argument);
        CHECK_THROWS_AS(low_rank_reconstruct(a, 4), std::invalid_argument);
    }
}

TEST_CASE("rank selection", "[kernel]") {
    SECTION("identical full-rank matrices select r = m") {
        Rng rng(31);
        Matrix a = random_symmetric(rng, 5);
        for (std::size_t i = 0; i < 5; ++i) a(i, i) += 3.0; // distinct positive spectrum
        const auto sel = select_rank(a, a);
        CHECK(sel.r_star == 5);
        CHECK(std::abs(sel.alignment_curve.back() - 1.0) < 1e-12);
    }
    SECTION("worked diag fixture selects r = 1") {
        Matrix ref(2, 2);
        ref(0, 0) = 1.0;
        Matrix noisy(2, 2);
        noisy(0, 0) = 1.0;
        noisy(1, 1) = 0.1;
        const auto sel = select_rank(noisy, ref);
        REQUIRE(sel.alignment_curve.size() == 2);
        CHECK(std::abs(sel.alignment_curve[0] - 1.0) < 1e-12);
        CHECK(sel.alignment_curve[1] < 1.0);
        CHECK(sel.r_star == 1);
    }
    SECTION("dominance: selected alignment beats the unfiltered one") {
        Rng rng(37);
        for (int rep = 0; rep < 10; ++rep) {
            const Matrix ref = random_symmetric(rng, 6);
            Matrix noisy = ref;
            for (auto& v : noisy.data) v += 0.05 * (2.0 * rng.next_double() - 1.0);
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = i + 1; j < 6; ++j) noisy(j, i) = noisy(i, j);
            const auto sel = select_rank(noisy, ref);
            REQUIRE(sel.alignment_curve[sel.r_star - 1] >= alignment(ref, noisy) - 1e-12);
        }
    }
    SECTION("synthetic rank-2 plus small noise mostly selects r = 2") {
        Rng rng(43);
        int hits = 0;
        const int trials = 40;
        for (int rep = 0; rep < trials; ++rep) {
            Matrix ref(6, 6);
            for (int comp = 0; comp < 2; ++comp) {
                std::vector<double> u(6);
                for (auto& v : u) v = rng.next_gaussian();
                const double w = comp == 0 ? 2.0 : 1.0;
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j) ref(i, j) += w * u[i] * u[j];
            }
            Matrix noisy = ref;
            const double scale = 0.01 * frobenius_norm(ref) / 6.0;
            for (std::size_t i = 0; i < 6; ++i)
                for (std::size_t j = i; j < 6; ++j) {
                    const double e = scale * rng.next_gaussian();
                    noisy(i, j) += e;
                    if (i != j) noisy(j, i) += e;
                }
            if (select_rank(noisy, ref).r_star == 2) ++hits;
        }
        CHECK(hits >= trials * 9 / 10);
    }
}

TEST_CASE("svd low rank", "[kernel]") {
    Rng rng(53);
    SECTION("full rank returns the input") {
        Matrix a(6, 4);
        for (auto& v : a.data) v = rng.next_gaussian();
        const Matrix o = svd_low_rank(a, 4);
        double err = 0.0;
        for (std::size_t t = 0; t < a.data.size(); ++t)
            err += (o.data[t] - a.data[t]) * (o.data[t] - a.data[t]);
        CHECK(std::sqrt(err) <= 1e-8 * frobenius_norm(a));
    }
    SECTION("rank-1 outer product recovered at r=1") {
        Matrix a(3, 2);
        const double u[3] = {1.0, -2.0, 0.5};
        const double v[2] = {0.7, 0.3};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) a(i, j) = u[i] * v[j];
        const Matrix o = svd_low_rank(a, 1);
        for (std::size_t t = 0; t < a.data.size(); ++t)
            CHECK(std::abs(o.data[t] - a.data[t]) < 1e-10);
    }
    SECTION("random 6x4 at r=2 matches the power-iteration oracle") {
        Matrix a(6, 4);
        for (auto& v : a.data) v = rng.next_gaussian();
        const Matrix mine = svd_low_rank(a, 2);
        const Matrix ref = oracle::power_iteration_low_rank(a, 2);
        double err = 0.0;
        for (std::size_t t = 0; t < a.data.size(); ++t)
            err += (mine.data[t] - ref.data[t]) * (mine.data[t] - ref.data[t]);
        CHECK(std::sqrt(err) < 1e-6);
    }
    SECTION("wide matrices use the other gram product") {
        Matrix a(3, 5);
        for (auto& v : a.data) v = rng.next_gaussian();
        const Matrix mine = svd_low_rank(a, 2);
        const Matrix ref = oracle::power_iteration_low_rank(a, 2);
        double err = 0.0;
        for (std::size_t t = 0; t < a.data.size(); ++t)
            err += (mine.data[t] - ref.data[t]) * (mine.data[t] - ref.data[t]);
        CHECK(std::sqrt(err) < 1e-6);
    }
    SECTION("rank out of range rejected") {
        Matrix a(6, 4, 1.0);
        CHECK_THROWS_AS(svd_low_rank(a, 0), std::invalid_argument);
        CHECK_THROWS_AS(svd_low_rank(a, 5), std::invalid_argument);
    }
}

TEST_CASE("kernel matrix file round trip", "[kernel]") {
    Rng rng(61);
    const Matrix x = random_dataset(rng, 5, 2);
    KernelBackend backend{BackendMode::Sampled, {2, 1.3}, ShotPlan{500, 77}, std::nullopt};
    const KernelMatrix k = gram(x, backend);

    std::ostringstream os;
    save_kernel_csv(k, os);
    const std::string text = os.str();
    CHECK(text.rfind("# qkernel v1; mode=sampled; n=2; shots=500; seed=77; lambda=1.3\n", 0) == 0);

    std::istringstream is(text);
    const LoadedKernel back = load_kernel_csv(is);
    CHECK_FALSE(back.is_cross);
    CHECK(back.meta.mode == BackendMode::Sampled);
    CHECK(back.meta.shots == 500);
    CHECK(back.meta.base_seed == 77);
    CHECK(back.meta.lambda == 1.3);
    CHECK(back.meta.total_shots == k.meta.total_shots);
    REQUIRE(back.entries.data == k.entries.data);

    const Matrix xt = random_dataset(rng, 3, 2);
    const CrossKernelMatrix c = cross(xt, x, backend);
    std::ostringstream os2;
    save_kernel_csv(c, os2);
    CHECK(os2.str().find("; rows=3; cols=5\n") != std::string::npos);
    std::istringstream is2(os2.str());
    const LoadedKernel back2 = load_kernel_csv(is2);
    CHECK(back2.is_cross);
    REQUIRE(back2.entries.data == c.entries.data);
}
