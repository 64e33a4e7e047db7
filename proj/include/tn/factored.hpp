#pragma once

#include <utility>
#include <vector>

#include "tn/mps.hpp"
#include "tn/tensor.hpp"

namespace tn::factored {

using mps::Chain;
using mps::NormMode;

enum class PositionKind { outer_left, inner, outer_right };

/// A site core expressed as a vertical stack of h subcores (bottom first).
///
/// Non-skip layouts (bottom to top):
///   inner:  (v, chi_h, chi_h, cv0), (chi_h, chi_h, cv_{j-1}, cv_j), ...,
///           (chi_h, chi_h, cv_{h-2})
///   outer:  (v, chi_h, cv0), (chi_h, cv_{j-1}, cv_j), ..., (chi_h, cv_{h-2})
/// Skip layouts carry a leading physical index of dimension v on every
/// subcore above the bottom as well (copy-tensor semantics: the effective
/// core slice t contracts slice t of every subcore).
///
/// Vertical bond extents may differ per level (truncation happens per SVD
/// split), so shapes are authoritative; chi_v records the requested value.
struct FactoredCore {
    PositionKind kind = PositionKind::inner;
    int h = 1;
    bool skip = false;
    int v = 3;
    int chi_h = 1;
    std::vector<Tensor> subcores;
};

struct FactoredMPS {
    int n = 0;
    int v = 3;
    int chi_h = 1;
    int h = 1;
    int chi_v = 0;  // requested vertical bond; 0 = full rank at every split
    bool skip = false;
    std::vector<FactoredCore> cores;
};

struct FactoredLossGrad {
    double loss = 0.0;
    std::vector<std::vector<Tensor>> grads;  // [core][subcore]
};

/// Bottom-up pairwise vertical contraction into an effective dense core of
/// shape (v, chi_h^h) for outer cores or (v, chi_h^h, chi_h^h) for inner.
Tensor contract_vertical(const FactoredCore& core);

/// Split a dense core into h non-skip subcores by iterated SVD. chi_v = 0
/// keeps the full rank at every split (exact round trip); chi_v < rank
/// discards the smallest singular values; chi_v > rank appends values drawn
/// uniform from [sv_fill_lo, sv_fill_hi] along fresh directions.
/// split_spectra, when given, receives the full singular spectrum of every
/// split (before truncation or extension), in split order.
std::vector<Tensor> factorize_core(const Tensor& dense_core, PositionKind kind,
                                   int v, int chi_h, int h, int chi_v,
                                   double sv_fill_lo, double sv_fill_hi, Rng& rng,
                                   std::vector<std::vector<double>>* split_spectra = nullptr);

/// Dense-equivalent initialization: init_dense at bond chi_h^h, then
/// factorize every core. Skip cores replicate the upper subcores across the
/// physical index (plus noise) so copy-tensor contraction reproduces the
/// same effective core.
FactoredMPS init_factored(int n, int v, int chi_h, int h, int chi_v, bool skip,
                          double sigma_inner, double sigma_outer,
                          double sv_fill_lo, double sv_fill_hi, Rng& rng);

/// Negative control: plain uniform subcore entries, no factorization.
FactoredMPS init_factored_random(int n, int v, int chi_h, int h, int chi_v,
                                 bool skip, double lo, double hi, Rng& rng);

/// Best rank-k approximation; second member is the Eckart-Young error
/// sqrt(sum of squared discarded singular values).
std::pair<Tensor, double> truncate_rank(const Tensor& m, std::size_t k);

mps::DenseMPS to_dense(const FactoredMPS& f);

std::size_t param_count(const FactoredCore& core);
std::size_t param_count(const FactoredMPS& f);

/// Dense loss on the vertically contracted model, back-propagated through
/// the multilinear contraction onto every subcore.
FactoredLossGrad loss_and_grad_factored(const FactoredMPS& f,
                                        const std::vector<std::pair<Chain, int>>& batch,
                                        double alpha, NormMode norm_mode);

}  // namespace tn::factored
