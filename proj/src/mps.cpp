#include "tn/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tn/kernels.hpp"

namespace tn::mps {

namespace {

constexpr double kLpClamp = -1e-12;

std::size_t uz(int x) { return static_cast<std::size_t>(x); }

double max_abs(const double* p, std::size_t len) {
    double m = 0.0;
    for (std::size_t i = 0; i < len; ++i) m = std::max(m, std::abs(p[i]));
    return m;
}

/// Rescale buffer to unit max-norm; returns ln(scale), or false if zero.
bool rescale(double* p, std::size_t len, double& log_acc) {
    const double m = max_abs(p, len);
    if (m == 0.0) return false;
    const double inv = 1.0 / m;
    for (std::size_t i = 0; i < len; ++i) p[i] *= inv;
    log_acc += std::log(m);
    return true;
}

void check_chain(const DenseMPS& m, const Chain& chain) {
    if (static_cast<int>(chain.size()) != m.n)
        throw std::invalid_argument("chain length does not match model");
    for (std::uint8_t tok : chain)
        if (tok >= m.v) throw std::invalid_argument("token code out of range");
}

struct LeftState {
    std::vector<double> vec;
    double log = 0.0;
    bool zero = false;
};

void left_start(const DenseMPS& m, std::uint8_t t, LeftState& st) {
    const std::size_t chi = uz(m.chi);
    const double* row = m.cores[0].data() + t * chi;
    st.vec.assign(row, row + chi);
    st.log = 0.0;
    st.zero = !rescale(st.vec.data(), chi, st.log);
}

void left_step(const DenseMPS& m, std::size_t k, std::uint8_t t,
               const LeftState& in, LeftState& out) {
    const std::size_t chi = uz(m.chi);
    out.log = in.log;
    out.zero = in.zero;
    out.vec.resize(chi);
    if (in.zero) {
        std::fill(out.vec.begin(), out.vec.end(), 0.0);
        return;
    }
    const double* g = m.cores[k].data() + t * chi * chi;
    kern::vecmat(in.vec.data(), g, out.vec.data(), chi, chi);
    if (!rescale(out.vec.data(), chi, out.log)) out.zero = true;
}

LogAmplitude left_finish(const DenseMPS& m, std::uint8_t t, const LeftState& in) {
    const std::size_t chi = uz(m.chi);
    if (in.zero) return {-std::numeric_limits<double>::infinity(), 0};
    const double* row = m.cores[uz(m.n) - 1].data() + t * chi;
    const double d = kern::dot(in.vec.data(), row, chi);
    if (d == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
    return {in.log + std::log(std::abs(d)), d > 0.0 ? 1 : -1};
}

double frob(const Tensor& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * t[i];
    return std::sqrt(acc);
}

double asymmetry(const Tensor& c) {
    const std::size_t chi = c.shape()[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < chi; ++i)
        for (std::size_t j = 0; j < chi; ++j) {
            const double d = c[i * chi + j] - c[j * chi + i];
            acc += d * d;
        }
    const double f = frob(c);
    return f > 0.0 ? std::sqrt(acc) / f : 0.0;
}

Tensor cap_from_outer(const Tensor& outer_core) {
    // (v, chi)^T (v, chi) -> symmetric (chi, chi); cost v*chi^2.
    return matmul(transpose(outer_core), outer_core);
}

Tensor left_cap_step(const Tensor& cap, const Tensor& g, int v, int chi) {
    // newC = sum_t G[t]^T (C G[t]); both steps cost v*chi^3.
    const std::size_t c = uz(chi), nv = uz(v);
    Tensor b({nv, c, c});
    for (std::size_t t = 0; t < nv; ++t)
        kern::matmul(cap.data(), g.data() + t * c * c, b.data() + t * c * c, c, c, c);
    Tensor gm = reshape(g, {nv * c, c});
    Tensor bm = reshape(b, {nv * c, c});
    return matmul(transpose(gm), bm);
}

Tensor right_cap_step(const Tensor& cap, const Tensor& g, int v, int chi) {
    // newR = sum_t G[t] R G[t]^T
    const std::size_t c = uz(chi), nv = uz(v);
    Tensor d({nv, c, c});
    for (std::size_t t = 0; t < nv; ++t)
        kern::matmul(g.data() + t * c * c, cap.data(), d.data() + t * c * c, c, c, c);
    Tensor m1 = reshape(transpose(d, {1, 0, 2}), {c, nv * c});
    Tensor m2 = reshape(transpose(g, {0, 2, 1}), {nv * c, c});
    return matmul(m1, m2);
}

/// Left cap pass; optionally records the rescaled caps. Returns logN.
double left_pass(const DenseMPS& m, std::vector<Tensor>* caps,
                 std::vector<double>* logs, double* max_asym) {
    const std::size_t n = uz(m.n);
    double log_acc = 0.0;
    double asym = 0.0;
    Tensor cap = cap_from_outer(m.cores[0]);
    if (!rescale(cap.data(), cap.size(), log_acc))
        throw std::runtime_error("log_norm_sq: model norm is zero");
    asym = std::max(asym, asymmetry(cap));
    if (caps) caps->push_back(cap);
    if (logs) logs->push_back(log_acc);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        cap = left_cap_step(cap, m.cores[k], m.v, m.chi);
        if (!std::isfinite(cap[0]))
            throw std::runtime_error("log_norm_sq: non-finite intermediate");
        if (!rescale(cap.data(), cap.size(), log_acc))
            throw std::runtime_error("log_norm_sq: model norm is zero");
        asym = std::max(asym, asymmetry(cap));
        if (caps) caps->push_back(cap);
        if (logs) logs->push_back(log_acc);
    }
    // Final contraction, one less index: u_t = C a_t, then <a_t, u_t>.
    const std::size_t chi = uz(m.chi), nv = uz(m.v);
    const Tensor& last = m.cores[n - 1];
    std::vector<double> u(chi);
    double total = 0.0;
    for (std::size_t t = 0; t < nv; ++t) {
        const double* row = last.data() + t * chi;
        kern::matvec(cap.data(), row, u.data(), chi, chi);
        total += kern::dot(row, u.data(), chi);
    }
    if (!(total > 0.0))
        throw std::runtime_error("log_norm_sq: non-positive norm");
    if (max_asym) *max_asym = asym;
    return log_acc + std::log(total);
}

}  // namespace

DenseMPS init_dense(int n, int v, int chi, double sigma_inner,
                    double sigma_outer, Rng& rng) {
    if (n < 2) throw std::invalid_argument("init_dense: n must be >= 2");
    if (v < 1 || chi < 1) throw std::invalid_argument("init_dense: bad dims");
    DenseMPS m;
    m.n = n;
    m.v = v;
    m.chi = chi;
    m.cores.reserve(uz(n));
    const std::size_t c = uz(chi), nv = uz(v);
    const double outer_val = 1.0 / std::sqrt(static_cast<double>(chi));

    auto outer_core = [&] {
        Tensor t = rng_normal(rng, {nv, c}, 0.0, sigma_outer);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] += outer_val;
        return t;
    };
    m.cores.push_back(outer_core());
    for (int k = 1; k + 1 < n; ++k) {
        Tensor t = rng_normal(rng, {nv, c, c}, 0.0, sigma_inner);
        for (std::size_t tok = 0; tok < nv; ++tok)
            for (std::size_t i = 0; i < c; ++i) t[tok * c * c + i * c + i] += 1.0;
        m.cores.push_back(std::move(t));
    }
    m.cores.push_back(outer_core());
    return m;
}

std::size_t param_count(const DenseMPS& m) {
    std::size_t acc = 0;
    for (const Tensor& c : m.cores) acc += c.size();
    return acc;
}

LogAmplitude amplitude(const DenseMPS& m, const Chain& chain) {
    check_chain(m, chain);
    LeftState st, nxt;
    left_start(m, chain[0], st);
    for (std::size_t k = 1; k + 1 < uz(m.n); ++k) {
        left_step(m, k, chain[k], st, nxt);
        std::swap(st, nxt);
    }
    return left_finish(m, chain[uz(m.n) - 1], st);
}

double log_norm_sq(const DenseMPS& m) {
    return left_pass(m, nullptr, nullptr, nullptr);
}

NormEnv norm_env(const DenseMPS& m) {
    NormEnv env;
    double left_asym = 0.0;
    env.log_norm_sq = left_pass(m, &env.left_cap, &env.left_log, &left_asym);
    env.max_cap_asymmetry = left_asym;

    // Right pass: right_cap[k] covers cores k..n-1, stored back to front.
    const std::size_t n = uz(m.n);
    double log_acc = 0.0;
    Tensor cap = cap_from_outer(m.cores[n - 1]);
    rescale(cap.data(), cap.size(), log_acc);
    std::vector<Tensor> rcaps{cap};
    std::vector<double> rlogs{log_acc};
    for (std::size_t k = n - 1; k-- > 1;) {
        cap = right_cap_step(cap, m.cores[k], m.v, m.chi);
        if (!rescale(cap.data(), cap.size(), log_acc))
            throw std::runtime_error("norm_env: model norm is zero");
        env.max_cap_asymmetry = std::max(env.max_cap_asymmetry, asymmetry(cap));
        rcaps.push_back(cap);
        rlogs.push_back(log_acc);
    }
    // rcaps[i] covers cores (n-1-i)..n-1; index by start core, entry 0 unused.
    env.right_cap.assign(n, Tensor());
    env.right_log.assign(n, 0.0);
    for (std::size_t i = 0; i < rcaps.size(); ++i) {
        env.right_cap[n - 1 - i] = std::move(rcaps[i]);
        env.right_log[n - 1 - i] = rlogs[i];
    }
    return env;
}

double log_prob(const DenseMPS& m, const Chain& chain) {
    const LogAmplitude a = amplitude(m, chain);
    if (a.sign == 0) return -std::numeric_limits<double>::infinity();
    const double lp = 2.0 * a.log_abs - log_norm_sq(m);
    return std::min(lp, kLpClamp);
}

double sigma_mass(const DenseMPS& m, const std::vector<Chain>& chains) {
    if (chains.empty()) return 0.0;
    const double log_n = log_norm_sq(m);
    const std::size_t n = uz(m.n);
    const std::size_t n_states = n - 1;  // left states for positions 0..n-2

    std::vector<LeftState> states(n_states);
    Chain prev;
    double total = 0.0;
    for (const Chain& chain : chains) {
        check_chain(m, chain);
        std::size_t first_diff = 0;
        if (!prev.empty()) {
            while (first_diff < n && prev[first_diff] == chain[first_diff])
                ++first_diff;
        }
        for (std::size_t k = first_diff; k < n_states; ++k) {
            if (k == 0) left_start(m, chain[0], states[0]);
            else left_step(m, k, chain[k], states[k - 1], states[k]);
        }
        const LogAmplitude a = left_finish(m, chain[n - 1], states[n_states - 1]);
        if (a.sign != 0) total += std::exp(2.0 * a.log_abs - log_n);
        prev = chain;
    }
    return total;
}

LossGrad loss_and_grad(const DenseMPS& m,
                       const std::vector<std::pair<Chain, int>>& batch,
                       double alpha, NormMode norm_mode) {
    if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
    const std::size_t n = uz(m.n), chi = uz(m.chi);

    LossGrad out;
    out.grads.reserve(n);
    for (const Tensor& c : m.cores) out.grads.emplace_back(Tensor::zeros(c.shape()));

    // Norm term shared across the batch.
    NormEnv env;
    double ln_norm = 0.0;
    double l2_sum = 0.0;
    switch (norm_mode) {
        case NormMode::exact:
            env = norm_env(m);
            ln_norm = env.log_norm_sq;
            break;
        case NormMode::constant_one:
            ln_norm = 0.0;
            break;
        case NormMode::l2_params:
            for (const Tensor& c : m.cores)
                for (std::size_t i = 0; i < c.size(); ++i) l2_sum += c[i] * c[i];
            if (l2_sum <= 0.0)
                throw std::runtime_error("loss_and_grad: zero l2 norm");
            ln_norm = std::log(l2_sum);
            break;
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    double sum_c = 0.0;

    std::vector<LeftState> ls(n - 1);        // after cores 0..n-2
    std::vector<std::vector<double>> rvec(n);  // normalized right vectors 1..n-1
    std::vector<double> rlog(n, 0.0);

    for (const auto& [chain, label] : batch) {
        check_chain(m, chain);
        left_start(m, chain[0], ls[0]);
        for (std::size_t k = 1; k + 1 < n; ++k) left_step(m, k, chain[k], ls[k - 1], ls[k]);
        const LogAmplitude a = left_finish(m, chain[n - 1], ls[n - 2]);

        double lp;
        if (a.sign == 0) lp = -std::numeric_limits<double>::infinity();
        else lp = std::min(2.0 * a.log_abs - ln_norm, kLpClamp);

        const double elp = std::exp(lp);
        const double li = label ? -lp : -std::log1p(-elp);
        loss += li * inv_b;
        // d(item loss)/d(lp)
        const double dlp = label ? -1.0 : elp / (1.0 - elp);
        const double ci = dlp * inv_b;
        sum_c += ci;
        if (a.sign == 0) continue;  // zero amplitude: no gradient flow

        // Right vectors for this chain.
        rvec[n - 1].assign(m.cores[n - 1].data() + chain[n - 1] * chi,
                           m.cores[n - 1].data() + (chain[n - 1] + 1) * chi);
        rlog[n - 1] = 0.0;
        rescale(rvec[n - 1].data(), chi, rlog[n - 1]);
        for (std::size_t k = n - 1; k-- > 1;) {
            rvec[k].resize(chi);
            const double* g = m.cores[k].data() + chain[k] * chi * chi;
            kern::matvec(g, rvec[k + 1].data(), rvec[k].data(), chi, chi);
            rlog[k] = rlog[k + 1];
            rescale(rvec[k].data(), chi, rlog[k]);
        }

        const double two_ci = 2.0 * ci;
        const double sgn = static_cast<double>(a.sign);
        // Core 0: d ln|A| / d a0[t0] = r_1 / A.
        {
            const double f = sgn * std::exp(rlog[1] - a.log_abs) * two_ci;
            kern::axpy(f, rvec[1].data(), out.grads[0].data() + chain[0] * chi, chi);
        }
        // Inner cores: outer(l_{k-1}, r_{k+1}) / A.
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double f =
                sgn * std::exp(ls[k - 1].log + rlog[k + 1] - a.log_abs) * two_ci;
            double* gk = out.grads[k].data() + chain[k] * chi * chi;
            for (std::size_t i = 0; i < chi; ++i)
                kern::axpy(f * ls[k - 1].vec[i], rvec[k + 1].data(), gk + i * chi, chi);
        }
        // Last core: l_{n-2} / A.
        {
            const double f = sgn * std::exp(ls[n - 2].log - a.log_abs) * two_ci;
            kern::axpy(f, ls[n - 2].vec.data(),
                       out.grads[n - 1].data() + chain[n - 1] * chi, chi);
        }
    }

    loss += alpha * ln_norm;
    // lp = 2 ln|A| - ln_norm, so the ln_norm coefficient is alpha - sum_c.
    const double coeff = alpha - sum_c;
    if (coeff != 0.0 && norm_mode == NormMode::exact) {
        const std::size_t nv = uz(m.v);
        const double ln2 = env.log_norm_sq;
        std::vector<double> tmp(chi);
        // Core 0: 2 R_1 a_t / N.
        {
            const double f = 2.0 * coeff * std::exp(env.right_log[1] - ln2);
            for (std::size_t t = 0; t < nv; ++t) {
                kern::matvec(env.right_cap[1].data(),
                             m.cores[0].data() + t * chi, tmp.data(), chi, chi);
                kern::axpy(f, tmp.data(), out.grads[0].data() + t * chi, chi);
            }
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double f = 2.0 * coeff *
                std::exp(env.left_log[k - 1] + env.right_log[k + 1] - ln2);
            for (std::size_t t = 0; t < nv; ++t) {
                Tensor lg({chi, chi});
                kern::matmul(env.left_cap[k - 1].data(),
                             m.cores[k].data() + t * chi * chi, lg.data(), chi, chi, chi);
                Tensor lgr({chi, chi});
                kern::matmul(lg.data(), env.right_cap[k + 1].data(), lgr.data(),
                             chi, chi, chi);
                kern::axpy(f, lgr.data(), out.grads[k].data() + t * chi * chi, chi * chi);
            }
        }
        {
            const double f = 2.0 * coeff * std::exp(env.left_log[n - 2] - ln2);
            for (std::size_t t = 0; t < nv; ++t) {
                kern::matvec(env.left_cap[n - 2].data(),
                             m.cores[n - 1].data() + t * chi, tmp.data(), chi, chi);
                kern::axpy(f, tmp.data(), out.grads[n - 1].data() + t * chi, chi);
            }
        }
    } else if (coeff != 0.0 && norm_mode == NormMode::l2_params) {
        const double f = 2.0 * coeff / l2_sum;
        for (std::size_t k = 0; k < n; ++k)
            kern::axpy(f, m.cores[k].data(), out.grads[k].data(), m.cores[k].size());
    }

    out.loss = loss;
    return out;
}

double brute_force_norm_sq(const DenseMPS& m) {
    if (m.n > 10) throw std::invalid_argument("brute_force_norm_sq: n must be <= 10");
    const std::size_t n = uz(m.n), chi = uz(m.chi);
    std::uint64_t total = 1;
    for (int i = 0; i < m.n; ++i) total *= static_cast<std::uint64_t>(m.v);
    double acc = 0.0;
    std::vector<double> vec(chi), nxt(chi);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        // Plain unscaled contraction, independent of the amplitude path.
        std::uint64_t rem = idx;
        std::vector<std::uint8_t> toks(n);
        for (std::size_t i = n; i-- > 0;) {
            toks[i] = static_cast<std::uint8_t>(rem % m.v);
            rem /= static_cast<std::uint64_t>(m.v);
        }
        const double* row = m.cores[0].data() + toks[0] * chi;
        std::copy(row, row + chi, vec.begin());
        for (std::size_t k = 1; k + 1 < n; ++k) {
            const double* g = m.cores[k].data() + toks[k] * chi * chi;
            for (std::size_t j = 0; j < chi; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < chi; ++i) s += vec[i] * g[i * chi + j];
                nxt[j] = s;
            }
            std::swap(vec, nxt);
        }
        const double* last = m.cores[n - 1].data() + toks[n - 1] * chi;
        double amp = 0.0;
        for (std::size_t i = 0; i < chi; ++i) amp += vec[i] * last[i];
        acc += amp * amp;
    }
    return acc;
}

std::vector<double> brute_force_distribution(const DenseMPS& m) {
    if (m.n > 10) throw std::invalid_argument("brute_force_distribution: n must be <= 10");
    std::uint64_t total = 1;
    for (int i = 0; i < m.n; ++i) total *= static_cast<std::uint64_t>(m.v);
    std::vector<double> probs(total);
    double norm = 0.0;
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        Chain c(uz(m.n));
        std::uint64_t rem = idx;
        for (std::size_t i = c.size(); i-- > 0;) {
            c[i] = static_cast<std::uint8_t>(rem % m.v);
            rem /= static_cast<std::uint64_t>(m.v);
        }
        const LogAmplitude a = amplitude(m, c);
        const double p = (a.sign == 0) ? 0.0 : std::exp(2.0 * a.log_abs);
        probs[idx] = p;
        norm += p;
    }
    if (norm <= 0.0) throw std::runtime_error("brute_force_distribution: zero norm");
    for (double& p : probs) p /= norm;
    return probs;
}

}  // namespace tn::mps
