#pragma once

#include <utility>
#include <vector>

#include "tn/motzkin.hpp"
#include "tn/tensor.hpp"

namespace tn::mps {

using motzkin::Chain;

/// Dense-core MPS. Core 0 and core n-1 have shape (v, chi); the inner
/// cores have shape (v, chi, chi), physical index first.
struct DenseMPS {
    int n = 0;
    int v = 3;
    int chi = 1;
    std::vector<Tensor> cores;
};

struct LogAmplitude {
    double log_abs;  // ln |amplitude|
    int sign;        // -1, 0, +1; 0 iff the amplitude is exactly zero
};

enum class NormMode { exact, constant_one, l2_params };

struct LossGrad {
    double loss = 0.0;
    std::vector<Tensor> grads;  // one per core
};

/// Caps and scale logs from one directional pass of the norm contraction.
/// cap[k] is the rescaled cap after absorbing cores 0..k (left pass) or
/// cores k..n-1 (right pass); log[k] is the accumulated scale.
struct NormEnv {
    std::vector<Tensor> left_cap;
    std::vector<double> left_log;
    std::vector<Tensor> right_cap;
    std::vector<double> right_log;
    double log_norm_sq = 0.0;
    double max_cap_asymmetry = 0.0;  // max ||C - C^T|| / ||C|| over all caps
};

/// Inner cores identity-plus-noise, outer cores ones/sqrt(chi)-plus-noise;
/// at zero noise every sequence has amplitude exactly 1.
DenseMPS init_dense(int n, int v, int chi, double sigma_inner,
                    double sigma_outer, Rng& rng);

std::size_t param_count(const DenseMPS& m);

/// <s|psi> by left-to-right contraction with per-step max-norm rescaling.
LogAmplitude amplitude(const DenseMPS& m, const Chain& chain);

/// ln <psi|psi> via the cap contraction (cost Theta(n * v * chi^3)).
double log_norm_sq(const DenseMPS& m);

/// Cap algorithm with both directional passes kept, for gradients and for
/// the cap-symmetry checks.
NormEnv norm_env(const DenseMPS& m);

/// ln p(chain) = 2 ln|<s|psi>| - ln <psi|psi>, clamped to <= -1e-12.
/// Returns -infinity when the amplitude is exactly zero.
double log_prob(const DenseMPS& m, const Chain& chain);

/// Sum of exp(log_prob) over the given chains, sequential in input order.
/// Consecutive chains sharing a prefix reuse the partial contraction.
double sigma_mass(const DenseMPS& m, const std::vector<Chain>& chains);

/// Binary cross-entropy loss with analytic environment gradients.
LossGrad loss_and_grad(const DenseMPS& m,
                       const std::vector<std::pair<Chain, int>>& batch,
                       double alpha, NormMode norm_mode);

/// Test oracles: exhaustive sums over all v^n chains. n <= 10.
double brute_force_norm_sq(const DenseMPS& m);
/// Probabilities indexed by chain_index (base-3 code of the chain).
std::vector<double> brute_force_distribution(const DenseMPS& m);

}  // namespace tn::mps
