// AVX2/FMA kernel variants. Compiled with -mavx2 -mfma; only dispatched to
// when the CPU reports support.
#include "tn/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace tn::kern::avx2 {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d av = _mm256_set1_pd(arow[p]);
            const double* brow = b + p * n;
            std::size_t j = 0;
            for (; j < n4; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
                _mm256_storeu_pd(crow + j, cv);
            }
            for (; j < n; ++j) crow[j] += arow[p] * brow[j];
        }
    }
}

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void matvec(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        __m256d acc = _mm256_setzero_pd();
        std::size_t j = 0;
        for (; j < n4; j += 4)
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(arow + j),
                                  _mm256_loadu_pd(x + j), acc);
        double s = hsum(acc);
        for (; j < n; ++j) s += arow[j] * x[j];
        y[i] = s;
    }
}

void vecmat(const double* x, const double* a, double* y,
            std::size_t m, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] = 0.0;
    const std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < m; ++i) {
        const __m256d xv = _mm256_set1_pd(x[i]);
        const double* arow = a + i * n;
        std::size_t j = 0;
        for (; j < n4; j += 4) {
            __m256d yv = _mm256_loadu_pd(y + j);
            yv = _mm256_fmadd_pd(xv, _mm256_loadu_pd(arow + j), yv);
            _mm256_storeu_pd(y + j, yv);
        }
        for (; j < n; ++j) y[j] += x[i] * arow[j];
    }
}

double dot(const double* a, const double* b, std::size_t len) {
    const std::size_t n4 = len & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i < n4; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                              _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < len; ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t len) {
    const std::size_t n4 = len & ~std::size_t(3);
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        __m256d yv = _mm256_loadu_pd(y + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), yv);
        _mm256_storeu_pd(y + i, yv);
    }
    for (; i < len; ++i) y[i] += alpha * x[i];
}

}  // namespace tn::kern::avx2

#endif  // x86_64
