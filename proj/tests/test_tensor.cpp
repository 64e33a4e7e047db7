#include <cmath>
#include <vector>

#include "doctest.h"
#include "tn/tensor.hpp"

using namespace tn;

namespace {

Tensor random_matrix(Rng& rng, std::size_t m, std::size_t n) {
    return rng_normal(rng, {m, n}, 0.0, 1.0);
}

double frob(const Tensor& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * t[i];
    return std::sqrt(acc);
}

void check_svd(const Tensor& m) {
    SvdResult r = svd(m);
    const std::size_t rows = m.shape()[0], cols = m.shape()[1];
    const std::size_t k = r.s.size();
    REQUIRE(k == std::min(rows, cols));
    REQUIRE(r.u.shape() == std::vector<std::size_t>{rows, k});
    REQUIRE(r.vt.shape() == std::vector<std::size_t>{k, cols});

    for (std::size_t i = 0; i + 1 < k; ++i) CHECK(r.s[i] >= r.s[i + 1]);
    for (double s : r.s) CHECK(s >= 0.0);

    // Orthonormal columns of u and rows of vt.
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double uu = 0.0, vv = 0.0;
            for (std::size_t i = 0; i < rows; ++i) uu += r.u[i * k + a] * r.u[i * k + b];
            for (std::size_t j = 0; j < cols; ++j)
                vv += r.vt[a * cols + j] * r.vt[b * cols + j];
            const double want = a == b ? 1.0 : 0.0;
            CHECK(std::abs(uu - want) < 1e-10);
            CHECK(std::abs(vv - want) < 1e-10);
        }

    // Reconstruction within 1e-9 relative.
    double err = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < k; ++q)
                acc += r.u[i * k + q] * r.s[q] * r.vt[q * cols + j];
            const double d = acc - m[i * cols + j];
            err += d * d;
        }
    const double scale = std::max(frob(m), 1e-30);
    CHECK(std::sqrt(err) / scale < 1e-9);

    // Sign convention: largest-|entry| of each left singular vector >= 0.
    for (std::size_t q = 0; q < k; ++q) {
        double best = 0.0;
        for (std::size_t i = 0; i < rows; ++i)
            if (std::abs(r.u[i * k + q]) > std::abs(best)) best = r.u[i * k + q];
        CHECK(best >= 0.0);
    }
}

}  // namespace

TEST_CASE("reshape keeps row-major order and round-trips") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor f = reshape(t, {6});
    for (std::size_t i = 0; i < 6; ++i) CHECK(f[i] == double(i + 1));
    Tensor back = reshape(f, {2, 3});
    CHECK(back.at({1, 2}) == 6.0);
    CHECK_THROWS(reshape(t, {4}));
}

TEST_CASE("transpose permutes correctly") {
    Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor tt = transpose(t);
    CHECK(tt.shape() == std::vector<std::size_t>{3, 2});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(tt.at({j, i}) == t.at({i, j}));
    // identity perm, and double transpose
    Rng rng(1);
    Tensor r = rng_normal(rng, {2, 3, 4}, 0.0, 1.0);
    Tensor same = transpose(r, {0, 1, 2});
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(same[i] == r[i]);
    Tensor twice = transpose(transpose(r, {2, 0, 1}), {1, 2, 0});
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(twice[i] == r[i]);
    CHECK_THROWS(transpose(r, {0, 0, 1}));
}

TEST_CASE("matmul basics and naive oracle") {
    Tensor m({2, 2}, {1, 2, 3, 4});
    Tensor im = matmul(Tensor::identity(2), m);
    for (std::size_t i = 0; i < 4; ++i) CHECK(im[i] == m[i]);

    // (1 x chi) ones * identity * (chi x 1) ones = chi
    const std::size_t chi = 5;
    Tensor ones_row = Tensor::full({1, chi}, 1.0);
    Tensor ones_col = Tensor::full({chi, 1}, 1.0);
    Tensor prod = matmul(matmul(ones_row, Tensor::identity(chi)), ones_col);
    CHECK(prod[0] == doctest::Approx(double(chi)));

    // associativity on random 4x4
    Rng rng(2);
    Tensor a = random_matrix(rng, 4, 4), b = random_matrix(rng, 4, 4),
           c = random_matrix(rng, 4, 4);
    Tensor lhs = matmul(matmul(a, b), c), rhs = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < 16; ++i)
        CHECK(std::abs(lhs[i] - rhs[i]) < 1e-12);

    // naive triple-loop oracle up to 32x32
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t m1 = 1 + rng.next_below(32), k1 = 1 + rng.next_below(32),
                          n1 = 1 + rng.next_below(32);
        Tensor x = random_matrix(rng, m1, k1), y = random_matrix(rng, k1, n1);
        Tensor z = matmul(x, y);
        for (std::size_t i = 0; i < m1; ++i)
            for (std::size_t j = 0; j < n1; ++j) {
                double acc = 0.0;
                for (std::size_t q = 0; q < k1; ++q)
                    acc += x[i * k1 + q] * y[q * n1 + j];
                CHECK(std::abs(z[i * n1 + j] - acc) < 1e-12);
            }
    }
    CHECK_THROWS(matmul(random_matrix(rng, 2, 3), random_matrix(rng, 4, 2)));
}

TEST_CASE("batched matmul multiplies slice by slice") {
    Rng rng(3);
    Tensor a = rng_normal(rng, {3, 2, 4}, 0.0, 1.0);
    Tensor b = rng_normal(rng, {3, 4, 5}, 0.0, 1.0);
    Tensor c = matmul(a, b);
    REQUIRE(c.shape() == std::vector<std::size_t>{3, 2, 5});
    for (std::size_t t = 0; t < 3; ++t) {
        Tensor at({2, 4}), bt({4, 5});
        std::copy(a.data() + t * 8, a.data() + (t + 1) * 8, at.data());
        std::copy(b.data() + t * 20, b.data() + (t + 1) * 20, bt.data());
        Tensor ct = matmul(at, bt);
        for (std::size_t i = 0; i < 10; ++i)
            CHECK(c[t * 10 + i] == doctest::Approx(ct[i]).epsilon(1e-13));
    }
}

TEST_CASE("svd of simple matrices") {
    SvdResult id = svd(Tensor::identity(3));
    for (double s : id.s) CHECK(s == doctest::Approx(1.0));

    // rank-1 outer product of unit vectors -> s = (1, 0)
    Tensor outer({2, 2}, {0.6 * 0.8, 0.6 * 0.6, 0.8 * 0.8, 0.8 * 0.6});
    SvdResult r1 = svd(outer);
    CHECK(r1.s[0] == doctest::Approx(1.0));
    CHECK(r1.s[1] == doctest::Approx(0.0).scale(1));
}

TEST_CASE("svd properties on random matrices") {
    Rng rng(4);
    check_svd(random_matrix(rng, 5, 3));
    check_svd(random_matrix(rng, 3, 5));  // wide
    check_svd(random_matrix(rng, 64, 64));
    check_svd(random_matrix(rng, 17, 9));
    // rank-deficient: duplicate a column
    Tensor m = random_matrix(rng, 6, 4);
    for (std::size_t i = 0; i < 6; ++i) m[i * 4 + 3] = m[i * 4 + 2];
    check_svd(m);
    // zero matrix: orthonormal completion for zero singular values
    check_svd(Tensor::zeros({4, 3}));
}

TEST_CASE("svd is deterministic") {
    Rng rng(5);
    Tensor m = random_matrix(rng, 8, 6);
    SvdResult a = svd(m), b = svd(m);
    for (std::size_t i = 0; i < a.u.size(); ++i) CHECK(a.u[i] == b.u[i]);
    for (std::size_t i = 0; i < a.s.size(); ++i) CHECK(a.s[i] == b.s[i]);
}

TEST_CASE("rng determinism and child streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c1 = Rng(42).child("role-a"), c2 = Rng(42).child("role-a"),
        c3 = Rng(42).child("role-b");
    bool same = true, diff = false;
    for (int i = 0; i < 32; ++i) {
        const std::uint64_t x = c1.next_u64();
        same = same && (x == c2.next_u64());
        diff = diff || (x != c3.next_u64());
    }
    CHECK(same);
    CHECK(diff);
}

TEST_CASE("rng draw statistics and bounds") {
    Rng rng(6);
    const int n = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.next_normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 5.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 5.0 * std::sqrt(2.0 / n));

    Tensor u = rng_uniform(rng, {1000}, 0.001, 0.01);
    for (std::size_t i = 0; i < u.size(); ++i) {
        CHECK(u[i] >= 0.001);
        CHECK(u[i] < 0.01);
    }
    Tensor z = rng_normal(rng, {10}, 3.5, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 3.5);

    for (int i = 0; i < 1000; ++i) CHECK(rng.next_below(7) < 7);
}

TEST_CASE("tensor constructors validate shapes") {
    CHECK_THROWS(Tensor({2, 0}));
    CHECK_THROWS(Tensor({2, 3}, {1.0, 2.0}));
    Tensor z = Tensor::zeros({2, 2});
    for (std::size_t i = 0; i < 4; ++i) CHECK(z[i] == 0.0);
    Tensor f = Tensor::full({3}, 2.5);
    CHECK(f[2] == 2.5);
    Tensor id = Tensor::identity(3);
    CHECK(id.at({1, 1}) == 1.0);
    CHECK(id.at({1, 2}) == 0.0);
}
