#include <doctest.h>

#include <cmath>

#include "diqnn/error.hpp"
#include "diqnn/matrix.hpp"
#include "diqnn/rng.hpp"

using namespace diqnn;

TEST_CASE("dot, norms, axpy on hand cases") {
    Vec u{1.0, 2.0, 3.0}, v{3.0, 2.0, 1.0};
    CHECK(dot(u, v) == 10.0);
    CHECK(norm2(Vec{3.0, 4.0}) == 5.0);
    CHECK(norm1(Vec{-1.0, 2.0, -3.0}) == 6.0);
    Vec y{1.0, 1.0, 1.0};
    axpy(2.0, u, y);
    CHECK(y == Vec{3.0, 5.0, 7.0});
}

TEST_CASE("cosine examples") {
    CHECK(cosine(Vec{1.0, 0.0}, Vec{0.0, 1.0}) == 0.0);
    CHECK(cosine(Vec{1.0, 1.0}, Vec{2.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine(Vec{1.0, 2.0, 3.0}, Vec{3.0, 2.0, 1.0}) ==
          doctest::Approx(10.0 / 14.0).epsilon(1e-15));
    CHECK_THROWS_AS(cosine(Vec{0.0, 0.0}, Vec{1.0, 0.0}), DegenerateInput);
    CHECK_THROWS_AS(cosine(Vec{1.0}, Vec{1.0, 0.0}), DimensionError);
}

TEST_CASE("cosine is symmetric and scale invariant") {
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        Vec u(5), v(5);
        for (auto& x : u) x = rng.normal();
        for (auto& x : v) x = rng.normal();
        const double a = 0.1 + 5.0 * rng.uniform();
        const double b = 0.1 + 5.0 * rng.uniform();
        Vec ua = u, vb = v;
        scale(ua, a);
        scale(vb, b);
        CHECK(std::abs(cosine(u, v) - cosine(v, u)) < 1e-12);
        CHECK(std::abs(cosine(ua, vb) - cosine(u, v)) < 1e-12);
    }
}

TEST_CASE("matvec, transpose, outer on hand cases") {
    const Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    CHECK(matvec(a, Vec{1.0, 1.0}) == Vec{3.0, 7.0, 11.0});
    const Matrix t = transpose(a);
    CHECK(t.rows() == 2);
    CHECK(t(0, 2) == 5.0);
    const Matrix o = outer(Vec{1.0, 2.0}, Vec{3.0, 4.0});
    CHECK(o(0, 0) == 3.0);
    CHECK(o(1, 0) == 6.0);
    CHECK(o(1, 1) == 8.0);
    CHECK(frobenius_norm(Matrix::identity(4)) == 2.0);
    CHECK_THROWS_AS(matvec(a, Vec{1.0}), DimensionError);
}

TEST_CASE("matmul agrees with the naive triple loop") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t n = 1 + rng.below(40), p = 1 + rng.below(40),
                          m = 1 + rng.below(40);
        Matrix a(n, p), b(p, m);
        for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
        for (std::size_t i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
        const Matrix c = matmul(a, b);
        const Matrix cnt = matmul_nt(a, transpose(b));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                double s = 0.0;
                for (std::size_t k = 0; k < p; ++k) s += a(i, k) * b(k, j);
                CHECK(c(i, j) == doctest::Approx(s).epsilon(1e-12));
                CHECK(cnt(i, j) == doctest::Approx(s).epsilon(1e-12));
            }
    }
}

TEST_CASE("weighted gram accumulation equals explicit outer products") {
    Rng rng(11);
    Matrix x(6, 4);
    Vec w(6);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    for (auto& v : w) v = rng.normal();
    Matrix expected(4, 4);
    for (std::size_t s = 0; s < 6; ++s) {
        const Matrix o = outer(x.row(s), x.row(s));
        expected = expected + w[s] * o;
    }
    Matrix got(4, 4);
    accumulate_weighted_gram(x, w, {got.data(), got.size()});
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK(got.data()[i] == doctest::Approx(expected.data()[i]).epsilon(1e-12));
}

TEST_CASE("asymmetry measures the largest mismatch") {
    Matrix a = Matrix::from_rows({{1.0, 2.0}, {2.5, 1.0}});
    CHECK(asymmetry(a) == 0.5);
    CHECK(asymmetry(Matrix::identity(3)) == 0.0);
}

TEST_CASE("matrix literal and finiteness checks") {
    CHECK_THROWS_AS(Matrix::from_rows({{1.0}, {1.0, 2.0}}), DimensionError);
    Matrix m(1, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(m.require_finite("test"), ContractViolation);
}
