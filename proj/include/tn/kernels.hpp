#pragma once

#include <cstddef>
#include <cstdint>

// Low-level arithmetic kernels. Scalar reference implementations plus an
// AVX2/FMA variant selected at runtime; both produce identical results up
// to floating-point rounding and are equivalence-tested against each other.
namespace tn::kern {

enum class Isa { scalar, avx2 };

// Best ISA supported by the running CPU.
Isa detect_isa();

// Currently active ISA (defaults to detect_isa()).
Isa active_isa();

// Force a specific ISA, e.g. to test scalar/SIMD equivalence.
void set_isa(Isa isa);

const char* isa_name(Isa isa);

// C(m x n) = A(m x k) * B(k x n), row-major, C overwritten.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n);

// y(m) = A(m x n) * x(n), row-major.
void matvec(const double* a, const double* x, double* y,
            std::size_t m, std::size_t n);

// y(n) = x(m)^T * A(m x n), row-major.
void vecmat(const double* x, const double* a, double* y,
            std::size_t m, std::size_t n);

double dot(const double* a, const double* b, std::size_t len);

// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t len);

// Multiply-add counter. Every kernel call above adds its madd count to a
// thread-local tally; used by the contraction cost tests.
void reset_madds();
std::uint64_t madds();
// Largest single kernel call since the last reset.
std::uint64_t max_call_madds();
void count_madds(std::uint64_t n);

}  // namespace tn::kern
