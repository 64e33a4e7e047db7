#pragma once

#include <utility>
#include <vector>

#include "tn/motzkin.hpp"
#include "tn/tensor.hpp"

namespace tn::mlp {

using motzkin::Chain;

/// Embedding -> concatenate -> affine -> ReLU -> affine -> sigmoid.
struct MlpModel {
    int n = 0;
    int v = 3;
    int d_e = 16;
    int d_h = 256;
    Tensor embedding;  // (v, d_e)
    Tensor w1;         // (n*d_e, d_h)
    Tensor b1;         // (d_h)
    Tensor w2;         // (d_h, 1)
    Tensor b2;         // (1)
};

struct MlpLossGrad {
    double loss = 0.0;
    MlpModel grads;  // same shapes as the model
};

/// Glorot-uniform weights, zero biases.
MlpModel init_mlp(int n, int v, int d_e, int d_h, Rng& rng);

std::size_t param_count(const MlpModel& m);

/// Belief that the chain is valid, strictly in (0, 1).
double mlp_forward(const MlpModel& m, const Chain& chain);

/// Binary cross-entropy with manual backprop.
MlpLossGrad mlp_loss_and_grad(const MlpModel& m,
                              const std::vector<std::pair<Chain, int>>& batch);

}  // namespace tn::mlp
