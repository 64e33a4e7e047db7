#include "tn/kernels.hpp"

namespace tn::kern {

namespace scalar {
void matmul(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
void matvec(const double*, const double*, double*, std::size_t, std::size_t);
void vecmat(const double*, const double*, double*, std::size_t, std::size_t);
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void matmul(const double*, const double*, double*, std::size_t, std::size_t, std::size_t);
void matvec(const double*, const double*, double*, std::size_t, std::size_t);
void vecmat(const double*, const double*, double*, std::size_t, std::size_t);
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
}  // namespace avx2
#endif

namespace {
thread_local std::uint64_t g_madds = 0;
thread_local std::uint64_t g_max_call = 0;

Isa& isa_slot() {
    static Isa isa = detect_isa();
    return isa;
}
}  // namespace

Isa detect_isa() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Isa::avx2;
#endif
    return Isa::scalar;
}

Isa active_isa() { return isa_slot(); }

void set_isa(Isa isa) {
#if !defined(__x86_64__) && !defined(_M_X64)
    isa = Isa::scalar;
#endif
    isa_slot() = isa;
}

const char* isa_name(Isa isa) {
    return isa == Isa::avx2 ? "avx2" : "scalar";
}

void reset_madds() {
    g_madds = 0;
    g_max_call = 0;
}
std::uint64_t madds() { return g_madds; }
std::uint64_t max_call_madds() { return g_max_call; }
void count_madds(std::uint64_t n) {
    g_madds += n;
    if (n > g_max_call) g_max_call = n;
}

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n) {
    count_madds(static_cast<std::uint64_t>(m) * k * n);
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_slot() == Isa::avx2) {
        avx2::matmul(a, b, c, m, k, n);
        return;
    }
#endif
    scalar::matmul(a, b, c, m, k, n);
}

void matvec(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n) {
    count_madds(static_cast<std::uint64_t>(m) * n);
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_slot() == Isa::avx2) {
        avx2::matvec(a, x, y, m, n);
        return;
    }
#endif
    scalar::matvec(a, x, y, m, n);
}

void vecmat(const double* x, const double* a, double* y,
            std::size_t m, std::size_t n) {
    count_madds(static_cast<std::uint64_t>(m) * n);
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_slot() == Isa::avx2) {
        avx2::vecmat(x, a, y, m, n);
        return;
    }
#endif
    scalar::vecmat(x, a, y, m, n);
}

double dot(const double* a, const double* b, std::size_t len) {
    count_madds(len);
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_slot() == Isa::avx2) return avx2::dot(a, b, len);
#endif
    return scalar::dot(a, b, len);
}

void axpy(double alpha, const double* x, double* y, std::size_t len) {
    count_madds(len);
#if defined(__x86_64__) || defined(_M_X64)
    if (isa_slot() == Isa::avx2) {
        avx2::axpy(alpha, x, y, len);
        return;
    }
#endif
    scalar::axpy(alpha, x, y, len);
}

}  // namespace tn::kern
