#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "tn/tensor.hpp"

namespace tn::motzkin {

using BigInt = boost::multiprecision::cpp_int;

// Token codes: u -> 0 (step +1), f -> 1 (step 0), d -> 2 (step -1).
enum Token : std::uint8_t { Up = 0, Flat = 1, Down = 2 };

using Chain = std::vector<std::uint8_t>;

struct LabeledDataset {
    std::vector<std::pair<Chain, int>> items;  // (chain, label in {0,1})
    int n = 0;
    double mu = 1.0;
    std::uint64_t seed = 0;
};

/// True iff every prefix height stays >= 0 and the walk ends at height 0.
bool is_valid(const Chain& chain);

/// Number of valid Motzkin walks of length n.
BigInt motzkin_number(int n);

/// All valid chains of length n in lexicographic token-code order. n <= 20.
std::vector<Chain> enumerate_valid(int n);

/// Uniform sample of invalid chains by rejection; duplicates allowed.
std::vector<Chain> sample_invalid(int n, std::size_t count, Rng& rng);

/// Valid chains sampled without replacement plus uniform invalid chains,
/// labeled and shuffled; fully determined by (n, train_fraction, mu, seed).
LabeledDataset build_dataset(int n, double train_fraction, double mu, std::uint64_t seed);

/// Exact pairwise mutual information (nats) under the uniform distribution
/// over valid chains. Returns an n x n matrix; diagonal holds the marginal
/// entropy. n <= 16.
Tensor mutual_information(int n);

/// Stationary-estimator variant: the joint is still the exact per-pair
/// joint, but the reference product uses the position-pooled token
/// distribution q(a) = (1/n) sum_i p_i(a), as in the usual "MI vs token
/// distance" curves for stationary processes. Unlike mutual_information,
/// this picks up the boundary effects: the ends of a walk deviate most from
/// the bulk statistics, so the curve peaks at maximal separation. Diagonal
/// entries are 0. n <= 16.
Tensor mutual_information_stationary(int n);

Chain encode_chain(const std::string& text);
std::string decode_chain(const Chain& chain);

/// Pack a chain into its base-3 integer code (token 0 most significant).
std::uint64_t chain_index(const Chain& chain);
Chain chain_from_index(std::uint64_t index, int n);

/// 3^n as a 64-bit integer; n <= 40.
std::uint64_t pow3(int n);

void write_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset read_dataset(const std::string& path);

}  // namespace tn::motzkin
