#include "tn/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "tn/kernels.hpp"

namespace tn::mlp {

namespace {

std::size_t uz(int x) { return static_cast<std::size_t>(x); }

constexpr double kProbClamp = 1e-12;

Tensor glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out,
              std::vector<std::size_t> shape) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return rng_uniform(rng, std::move(shape), -limit, limit);
}

struct Forward {
    std::vector<double> input;   // n*d_e concatenated embeddings
    std::vector<double> pre1;    // hidden pre-activation
    std::vector<double> hidden;  // ReLU output
    double logit = 0.0;
    double p = 0.5;
};

Forward forward_pass(const MlpModel& m, const Chain& chain) {
    if (static_cast<int>(chain.size()) != m.n)
        throw std::invalid_argument("mlp_forward: chain length mismatch");
    const std::size_t de = uz(m.d_e), dh = uz(m.d_h);
    Forward f;
    f.input.resize(uz(m.n) * de);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (chain[i] >= m.v) throw std::invalid_argument("mlp_forward: bad token");
        const double* row = m.embedding.data() + chain[i] * de;
        std::copy(row, row + de, f.input.begin() + i * de);
    }
    f.pre1.resize(dh);
    kern::vecmat(f.input.data(), m.w1.data(), f.pre1.data(), f.input.size(), dh);
    for (std::size_t j = 0; j < dh; ++j) f.pre1[j] += m.b1[j];
    f.hidden.resize(dh);
    for (std::size_t j = 0; j < dh; ++j) f.hidden[j] = f.pre1[j] > 0.0 ? f.pre1[j] : 0.0;
    f.logit = kern::dot(f.hidden.data(), m.w2.data(), dh) + m.b2[0];
    f.p = 1.0 / (1.0 + std::exp(-f.logit));
    if (f.p < kProbClamp) f.p = kProbClamp;
    if (f.p > 1.0 - kProbClamp) f.p = 1.0 - kProbClamp;
    return f;
}

}  // namespace

MlpModel init_mlp(int n, int v, int d_e, int d_h, Rng& rng) {
    if (n < 1 || v < 1 || d_e < 1 || d_h < 1)
        throw std::invalid_argument("init_mlp: dims must be positive");
    MlpModel m;
    m.n = n;
    m.v = v;
    m.d_e = d_e;
    m.d_h = d_h;
    const std::size_t in = uz(n) * uz(d_e);
    m.embedding = glorot(rng, uz(v), uz(d_e), {uz(v), uz(d_e)});
    m.w1 = glorot(rng, in, uz(d_h), {in, uz(d_h)});
    m.b1 = Tensor::zeros({uz(d_h)});
    m.w2 = glorot(rng, uz(d_h), 1, {uz(d_h), 1});
    m.b2 = Tensor::zeros({1});
    return m;
}

std::size_t param_count(const MlpModel& m) {
    return m.embedding.size() + m.w1.size() + m.b1.size() + m.w2.size() + m.b2.size();
}

double mlp_forward(const MlpModel& m, const Chain& chain) {
    return forward_pass(m, chain).p;
}

MlpLossGrad mlp_loss_and_grad(const MlpModel& m,
                              const std::vector<std::pair<Chain, int>>& batch) {
    if (batch.empty()) throw std::invalid_argument("mlp_loss_and_grad: empty batch");
    const std::size_t de = uz(m.d_e), dh = uz(m.d_h);

    MlpLossGrad out;
    out.grads.n = m.n;
    out.grads.v = m.v;
    out.grads.d_e = m.d_e;
    out.grads.d_h = m.d_h;
    out.grads.embedding = Tensor::zeros(m.embedding.shape());
    out.grads.w1 = Tensor::zeros(m.w1.shape());
    out.grads.b1 = Tensor::zeros(m.b1.shape());
    out.grads.w2 = Tensor::zeros(m.w2.shape());
    out.grads.b2 = Tensor::zeros(m.b2.shape());

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    std::vector<double> dhidden(dh), dinput;
    for (const auto& [chain, label] : batch) {
        Forward f = forward_pass(m, chain);
        const double y = static_cast<double>(label);
        out.loss += -(y * std::log(f.p) + (1.0 - y) * std::log(1.0 - f.p)) * inv_b;
        // d loss / d logit for sigmoid + BCE.
        const double dlogit = (f.p - y) * inv_b;

        kern::axpy(dlogit, f.hidden.data(), out.grads.w2.data(), dh);
        out.grads.b2[0] += dlogit;
        for (std::size_t j = 0; j < dh; ++j)
            dhidden[j] = (f.pre1[j] > 0.0) ? dlogit * m.w2[j] : 0.0;
        kern::axpy(1.0, dhidden.data(), out.grads.b1.data(), dh);
        for (std::size_t i = 0; i < f.input.size(); ++i)
            if (f.input[i] != 0.0)
                kern::axpy(f.input[i], dhidden.data(), out.grads.w1.data() + i * dh, dh);
        dinput.assign(f.input.size(), 0.0);
        for (std::size_t i = 0; i < f.input.size(); ++i)
            dinput[i] = kern::dot(m.w1.data() + i * dh, dhidden.data(), dh);
        for (std::size_t pos = 0; pos < chain.size(); ++pos)
            kern::axpy(1.0, dinput.data() + pos * de,
                       out.grads.embedding.data() + chain[pos] * de, de);
    }
    return out;
}

}  // namespace tn::mlp
