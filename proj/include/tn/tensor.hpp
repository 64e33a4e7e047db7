#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tn {

/// Dense row-major tensor of 64-bit reals. All operations are pure: they
/// return new tensors and never mutate their inputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::initializer_list<std::size_t> idx);
    double at(std::initializer_list<std::size_t> idx) const;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor identity(std::size_t n);

private:
    std::size_t offset(std::initializer_list<std::size_t> idx) const;

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Deterministic PRNG: std::mt19937_64 engine with hand-rolled uniform and
/// normal transforms, so the draw stream is identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of precision.
    double next_double();
    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t next_below(std::uint64_t bound);
    /// Standard normal via Box-Muller (caches the second deviate).
    double next_normal();

    /// Child generator for an independent role; same (seed, role) always
    /// yields the same child stream.
    Rng child(const std::string& role) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct SvdResult {
    Tensor u;                // m x k
    std::vector<double> s;   // k, non-increasing, >= 0
    Tensor vt;               // k x n
};

Tensor reshape(const Tensor& t, std::vector<std::size_t> new_shape);
Tensor transpose(const Tensor& t, const std::vector<std::size_t>& perm);
/// Rank-2 transpose convenience.
Tensor transpose(const Tensor& t);

/// Rank-2 x rank-2 matrix product, or batched product when both operands
/// are rank-3 with a matching leading batch axis.
Tensor matmul(const Tensor& a, const Tensor& b);

/// SVD of a rank-2 tensor via one-sided Jacobi. Sign convention: the
/// largest-magnitude entry of each left singular vector is non-negative.
/// Throws on non-convergence after 100 sweeps.
SvdResult svd(const Tensor& m);

Tensor rng_normal(Rng& rng, std::vector<std::size_t> shape, double mean, double std);
Tensor rng_uniform(Rng& rng, std::vector<std::size_t> shape, double lo, double hi);

}  // namespace tn
