#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "qkernel/pipeline.hpp"
#include "support/oracles.hpp"

using namespace qkernel;

TEST_CASE("minmax scaler", "[pipeline]") {
    Matrix train(2, 1);
    train(0, 0) = 0.0;
    train(1, 0) = 10.0;
    const auto st = scaler_fit(train, ScalerMethod::MinMax, 0.0, std::numbers::pi);

    SECTION("train extremes map to the range ends") {
        const Matrix scaled = scaler_apply(st, train);
        CHECK(scaled(0, 0) == 0.0);
        CHECK(std::abs(scaled(1, 0) - std::numbers::pi) < 1e-15);
    }
    SECTION("midpoint maps linearly") {
        Matrix q(1, 1);
        q(0, 0) = 5.0;
        CHECK(std::abs(scaler_apply(st, q)(0, 0) - std::numbers::pi / 2.0) < 1e-15);
    }
    SECTION("out-of-range test values are clamped and counted") {
        Matrix q(2, 1);
        q(0, 0) = 12.0;
        q(1, 0) = -1.0;
        std::size_t clamped = 0;
        const Matrix scaled = scaler_apply(st, q, &clamped);
        CHECK(scaled(0, 0) == std::numbers::pi);
        CHECK(scaled(1, 0) == 0.0);
        CHECK(clamped == 2);
    }
    SECTION("constant feature maps to the midpoint") {
        Matrix c(3, 1, 4.2);
        const auto stc = scaler_fit(c, ScalerMethod::MinMax, 0.0, 2.0);
        const Matrix scaled = scaler_apply(stc, c);
        for (std::size_t i = 0; i < 3; ++i) CHECK(scaled(i, 0) == 1.0);
    }
    SECTION("determinism: applying twice gives identical output") {
        Matrix q(1, 1);
        q(0, 0) = 7.7;
        CHECK(scaler_apply(st, q).data == scaler_apply(st, q).data);
    }
    SECTION("empty fit rejected") {
        CHECK_THROWS_AS(scaler_fit(Matrix(1, 1), ScalerMethod::MinMax, 0.0, 1.0),
                        std::invalid_argument);
    }
}

TEST_CASE("pca", "[pipeline]") {
    SECTION("collinear 2-d points: first component explains all variance") {
        Matrix x(5, 2);
        for (int i = 0; i < 5; ++i) {
            x(i, 0) = i;
            x(i, 1) = 2.0 * i;
        }
        const auto st = pca_fit(x, 2);
        CHECK(std::abs(st.explained_variance_fraction[0] - 1.0) < 1e-10);
        CHECK(std::abs(st.explained_variance_fraction[1]) < 1e-10);
    }
    SECTION("axis-aligned data gives signed standard basis components") {
        Rng rng(15);
        Matrix x(40, 2);
        for (std::size_t i = 0; i < 40; ++i) {
            x(i, 0) = 3.0 * rng.next_gaussian();
            x(i, 1) = 0.2 * rng.next_gaussian();
        }
        const auto st = pca_fit(x, 2);
        CHECK(std::abs(std::abs(st.components(0, 0)) - 1.0) < 0.05);
        CHECK(st.components(0, 0) > 0.0); // sign convention
        CHECK(std::abs(std::abs(st.components(1, 1)) - 1.0) < 0.05);
    }
    SECTION("matches the power-iteration oracle on random 20x6 data") {
        Rng rng(16);
        Matrix x(20, 6);
        for (auto& v : x.data) v = rng.next_gaussian();
        // stretch a few directions so the spectrum is well separated
        for (std::size_t i = 0; i < 20; ++i) {
            x(i, 0) *= 5.0;
            x(i, 1) *= 3.0;
            x(i, 2) *= 2.0;
        }
        const auto st = pca_fit(x, 4);

        Matrix cov(6, 6);
        std::vector<double> mean(6, 0.0);
        for (std::size_t j = 0; j < 6; ++j) {
            for (std::size_t i = 0; i < 20; ++i) mean[j] += x(i, j);
            mean[j] /= 20.0;
        }
        for (std::size_t a = 0; a < 6; ++a)
            for (std::size_t b = 0; b < 6; ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < 20; ++i)
                    s += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
                cov(a, b) = s / 19.0;
            }
        const auto pe = oracle::power_iteration_eig(cov, 4);
        for (std::size_t k = 0; k < 4; ++k) {
            double dot = 0.0;
            for (std::size_t j = 0; j < 6; ++j) dot += st.components(j, k) * pe.vectors(j, k);
            const double sign = dot < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < 6; ++j)
                REQUIRE(std::abs(st.components(j, k) - sign * pe.vectors(j, k)) < 1e-6);
        }
    }
    SECTION("projector idempotence through reconstruct-project") {
        Rng rng(17);
        Matrix x(15, 5);
        for (auto& v : x.data) v = rng.next_gaussian();
        const auto st = pca_fit(x, 3);
        const Matrix z1 = pca_apply(st, x);
        const Matrix z2 = pca_apply(st, pca_reconstruct(st, z1));
        for (std::size_t t = 0; t < z1.data.size(); ++t)
            REQUIRE(std::abs(z1.data[t] - z2.data[t]) < 1e-8);
    }
    SECTION("component orthonormality") {
        Rng rng(18);
        Matrix x(30, 7);
        for (auto& v : x.data) v = rng.next_gaussian();
        const auto st = pca_fit(x, 5, true);
        for (std::size_t a = 0; a < 5; ++a)
            for (std::size_t b = a; b < 5; ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < 7; ++j) dot += st.components(j, a) * st.components(j, b);
                REQUIRE(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-10);
            }
        double cum = 0.0;
        double prev = 1e300;
        for (double f : st.explained_variance_fraction) {
            REQUIRE(f <= prev);
            prev = f;
            cum += f;
        }
        REQUIRE(cum <= 1.0 + 1e-12);
    }
    SECTION("dimension too large rejected") {
        Matrix x(5, 2, 1.0);
        CHECK_THROWS_AS(pca_fit(x, 3), std::invalid_argument);
    }
}

TEST_CASE("box-cox transform", "[pipeline]") {
    SECTION("fixtures") {
        CHECK(std::abs(boxcox(std::vector<double>{2.0}, 1.0)[0] - 1.0) < 1e-15);
        CHECK(std::abs(boxcox(std::vector<double>{std::numbers::e}, 0.0)[0] - 1.0) < 1e-15);
        CHECK(std::abs(boxcox(std::vector<double>{4.0}, 0.5)[0] - 2.0) < 1e-12);
    }
    SECTION("round trip at the paper-relevant xi values") {
        Rng rng(19);
        std::vector<double> y(20);
        for (auto& v : y) v = 0.1 + 50.0 * rng.next_double();
        for (double xi : {0.0, 0.15084028, 0.5, 1.0}) {
            const auto t = boxcox(y, xi);
            const auto back = boxcox_inverse(t, xi);
            for (std::size_t i = 0; i < y.size(); ++i)
                REQUIRE(std::abs(back[i] - y[i]) <= 1e-12 * std::abs(y[i]));
        }
    }
    SECTION("xi -> 0 continuity") {
        for (double y : {0.1, 1.0, 10.0, 100.0}) {
            const double t = boxcox(std::vector<double>{y}, 1e-9)[0];
            REQUIRE(std::abs(t - std::log(y)) <= 1e-6);
        }
    }
    SECTION("non-positive input rejected with the offending index") {
        try {
            boxcox(std::vector<double>{1.0, 0.0, 2.0}, 0.5);
            FAIL("expected rejection");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("index 1") != std::string::npos);
        }
    }
}

TEST_CASE("gaussian kernel", "[pipeline]") {
    SECTION("fixtures") {
        Matrix a(1, 2);
        a(0, 0) = 0.3;
        a(0, 1) = 0.7;
        CHECK(gaussian_kernel_matrix(a, a, 1.0)(0, 0) == 1.0);

        Matrix b(1, 2);
        b(0, 0) = 0.3 + 1.0;
        b(0, 1) = 0.7;
        CHECK(std::abs(gaussian_kernel_matrix(a, b, 1.0)(0, 0) - 0.36787944117144233) < 1e-5);
    }
    SECTION("symmetric psd on random data") {
        Rng rng(20);
        Matrix x(12, 3);
        for (auto& v : x.data) v = rng.next_gaussian();
        const Matrix k = gaussian_kernel_matrix(x, x, 0.25);
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = 0; j < 12; ++j) REQUIRE(std::abs(k(i, j) - k(j, i)) < 1e-15);
        Matrix sym = k;
        for (std::size_t i = 0; i < 12; ++i)
            for (std::size_t j = i + 1; j < 12; ++j) sym(j, i) = sym(i, j);
        const auto es = sym_eig(sym);
        REQUIRE(es.eigenvalues.back() >= -1e-8);
    }
    SECTION("bad gamma rejected") {
        CHECK_THROWS_AS(gaussian_kernel_matrix(Matrix(1, 1), Matrix(1, 1), 0.0),
                        std::invalid_argument);
    }
}

TEST_CASE("metrics", "[pipeline]") {
    SECTION("perfect predictions") {
        const std::vector<int> y{1, -1, 1};
        CHECK(accuracy(y, y) == 1.0);
        const std::vector<double> t{1.0, 2.0, 3.0};
        CHECK(rmse(t, t) == 0.0);
        CHECK(r_squared(t, t) == 1.0);
    }
    SECTION("mean predictor has R^2 = 0") {
        const std::vector<double> y{1.0, 2.0, 3.0};
        const std::vector<double> pred{2.0, 2.0, 2.0};
        CHECK(std::abs(r_squared(y, pred)) < 1e-15);
    }
    SECTION("rmse fixture") {
        CHECK(std::abs(rmse(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0, 1.0}) - 1.0) <
              1e-15);
    }
    SECTION("constant y_true rejected for R^2") {
        CHECK_THROWS_AS(r_squared(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 2.0}),
                        std::invalid_argument);
    }
    SECTION("length mismatch rejected") {
        CHECK_THROWS_AS(accuracy(std::vector<int>{1}, std::vector<int>{1, -1}),
                        std::invalid_argument);
    }
}

TEST_CASE("svr grid search", "[pipeline]") {
    SECTION("single cell returns that cell") {
        const Matrix k = Matrix::identity(3);
        const std::vector<double> y{1.0, 0.0, -1.0};
        const auto res = grid_search_svr(k, y, k, y, std::vector<double>{0.1},
                                         std::vector<double>{2.0});
        CHECK(res.best_epsilon == 0.1);
        CHECK(res.best_C == 2.0);
        CHECK(res.surface.size() == 1);
    }
    SECTION("identity-kernel toy: smallest C reaching zero training RMSE wins") {
        const Matrix k = Matrix::identity(4);
        const std::vector<double> y{0.6, -0.2, 0.4, -0.8};
        // max |y_i - mean| = 0.8; any C >= that interpolates exactly
        const std::vector<double> cgrid{0.2, 0.5, 0.8, 1.0, 2.0};
        const auto res = grid_search_svr(k, y, k, y, std::vector<double>{0.0}, cgrid);
        CHECK(res.best_score < 1e-6);
        CHECK(res.best_C == 0.8);
    }
    SECTION("best score equals the surface minimum") {
        Rng rng(23);
        Matrix a(6, 6);
        for (auto& v : a.data) v = rng.next_gaussian();
        const Matrix k = matmul(a, transpose(a));
        std::vector<double> y(6);
        for (auto& v : y) v = rng.next_gaussian();
        const auto eps = std::vector<double>{0.0, 0.1, 0.2};
        const auto cs = std::vector<double>{0.5, 1.0, 2.0};
        const auto res = grid_search_svr(k, y, k, y, eps, cs);
        double best = 1e300;
        for (const auto& cell : res.surface)
            if (!cell.failed) best = std::min(best, cell.score);
        CHECK(res.best_score == best);
        CHECK(res.surface.size() == 9);
    }
    SECTION("empty grid rejected") {
        CHECK_THROWS_AS(grid_search_svr(Matrix::identity(2), std::vector<double>{1.0, 2.0},
                                        Matrix::identity(2), std::vector<double>{1.0, 2.0},
                                        std::vector<double>{}, std::vector<double>{1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("svc grid search", "[pipeline]") {
    SECTION("separable toy problem: smallest adequate C wins") {
        Matrix k(4, 4);
        for (int i = 0; i < 4; ++i) k(i, i) = 1.0;
        k(0, 1) = k(1, 0) = 0.9;
        k(2, 3) = k(3, 2) = 0.9;
        const std::vector<int> y{1, 1, -1, -1};
        const auto res = grid_search_svc(k, y, k, y, std::vector<double>{0.1, 0.5, 1.0, 5.0});
        CHECK(res.best_score == 1.0);
        CHECK(res.best_C == 0.1);
    }
    SECTION("exhaustiveness") {
        Rng rng(29);
        Matrix a(6, 6);
        for (auto& v : a.data) v = rng.next_gaussian();
        const Matrix k = matmul(a, transpose(a));
        const std::vector<int> y{1, -1, 1, -1, 1, -1};
        const auto res = grid_search_svc(k, y, k, y, std::vector<double>{0.5, 1.0, 2.0});
        double best = -1.0;
        for (const auto& cell : res.surface)
            if (!cell.failed) best = std::max(best, cell.score);
        CHECK(res.best_score == best);
    }
}

TEST_CASE("default grids match the documented resolution", "[pipeline]") {
    const auto eps = default_epsilon_grid();
    const auto cs = default_c_grid();
    REQUIRE(eps.size() == 51);
    CHECK(eps.front() == 0.0);
    CHECK(std::abs(eps.back() - 0.5) < 1e-12);
    REQUIRE(cs.size() == 100);
    CHECK(std::abs(cs.front() - 0.1) < 1e-12);
    CHECK(std::abs(cs.back() - 10.0) < 1e-12);
}
