#include "tn/factored.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tn/kernels.hpp"

namespace tn::factored {

namespace {

std::size_t uz(int x) { return static_cast<std::size_t>(x); }

std::size_t ipow(std::size_t base, int exp) {
    std::size_t p = 1;
    for (int i = 0; i < exp; ++i) p *= base;
    return p;
}

bool is_outer(PositionKind k) { return k != PositionKind::inner; }

// ---------------------------------------------------------------------------
// Labeled contraction (reference path and subcore gradients). Iterates the
// full joint assignment of all labels; fine at subcore scale.

struct Fac {
    const Tensor* t;
    std::vector<int> labels;
};

Tensor contract_labeled(const std::vector<Fac>& facs,
                        const std::vector<int>& out_labels) {
    std::vector<int> labels;
    std::map<int, std::size_t> dims;
    for (const Fac& f : facs) {
        if (f.t->rank() != f.labels.size())
            throw std::invalid_argument("contract_labeled: label rank mismatch");
        for (std::size_t a = 0; a < f.labels.size(); ++a) {
            auto it = dims.find(f.labels[a]);
            if (it == dims.end()) {
                dims[f.labels[a]] = f.t->shape()[a];
                labels.push_back(f.labels[a]);
            } else if (it->second != f.t->shape()[a]) {
                throw std::invalid_argument("contract_labeled: extent mismatch");
            }
        }
    }
    std::vector<std::size_t> out_shape;
    for (int l : out_labels) out_shape.push_back(dims.at(l));
    Tensor out = Tensor::zeros(out_shape.empty() ? std::vector<std::size_t>{1}
                                                 : out_shape);

    const std::size_t nl = labels.size();
    std::vector<std::size_t> idx(nl, 0);
    std::map<int, std::size_t> pos;
    for (std::size_t i = 0; i < nl; ++i) pos[labels[i]] = i;

    std::vector<std::vector<std::size_t>> fac_axes;
    for (const Fac& f : facs) {
        std::vector<std::size_t> ax;
        for (int l : f.labels) ax.push_back(pos.at(l));
        fac_axes.push_back(std::move(ax));
    }
    std::vector<std::size_t> out_axes;
    for (int l : out_labels) out_axes.push_back(pos.at(l));

    std::uint64_t total = 1;
    for (int l : labels) total *= dims.at(l);
    for (std::uint64_t c = 0; c < total; ++c) {
        double prod = 1.0;
        for (std::size_t fi = 0; fi < facs.size(); ++fi) {
            std::size_t off = 0;
            const Tensor& t = *facs[fi].t;
            for (std::size_t a = 0; a < fac_axes[fi].size(); ++a)
                off = off * t.shape()[a] + idx[fac_axes[fi][a]];
            prod *= t[off];
        }
        std::size_t off = 0;
        for (std::size_t a = 0; a < out_axes.size(); ++a)
            off = off * out_shape[a] + idx[out_axes[a]];
        out[off] += prod;
        for (std::size_t a = nl; a-- > 0;) {
            if (++idx[a] < dims.at(labels[a])) break;
            idx[a] = 0;
        }
    }
    return out;
}

constexpr int kP = 0;
int lblL(int j) { return 100 + j; }
int lblR(int j) { return 200 + j; }
int lblU(int j) { return 300 + j; }

std::vector<int> subcore_labels(const FactoredCore& core, int j) {
    std::vector<int> l;
    const bool outer = is_outer(core.kind);
    if (j == 0) {
        l.push_back(kP);
        l.push_back(lblL(0));
        if (!outer) l.push_back(lblR(0));
        if (core.h > 1) l.push_back(lblU(0));
        return l;
    }
    if (core.skip) l.push_back(kP);
    l.push_back(lblL(j));
    if (!outer) l.push_back(lblR(j));
    l.push_back(lblU(j - 1));
    if (j < core.h - 1) l.push_back(lblU(j));
    return l;
}

std::vector<int> effective_labels(const FactoredCore& core) {
    std::vector<int> l{kP};
    for (int j = 0; j < core.h; ++j) l.push_back(lblL(j));
    if (!is_outer(core.kind))
        for (int j = 0; j < core.h; ++j) l.push_back(lblR(j));
    return l;
}

// Unmerged view of an effective core (or its gradient): (v, ch x h [, ch x h]).
Tensor effective_view(const FactoredCore& core, const Tensor& eff) {
    std::vector<std::size_t> dims{uz(core.v)};
    const int sides = is_outer(core.kind) ? 1 : 2;
    for (int s = 0; s < sides; ++s)
        for (int j = 0; j < core.h; ++j) dims.push_back(uz(core.chi_h));
    return reshape(eff, dims);
}

// ---------------------------------------------------------------------------
// Vertical contraction, bottom-up pairwise (matmuls, so madds are counted).

// Step matrix for subcore j >= 1 with the physical index (if any) fixed:
// rows = down bond, cols = (horizontal block, up bond if present).
Tensor step_matrix(const FactoredCore& core, int j, int t) {
    const Tensor& s = core.subcores[uz(j)];
    Tensor base = s;
    if (core.skip) {
        // Slice the leading physical index.
        const std::size_t block = s.size() / uz(core.v);
        std::vector<std::size_t> shp(s.shape().begin() + 1, s.shape().end());
        std::vector<double> d(s.data() + uz(t) * block, s.data() + (uz(t) + 1) * block);
        base = Tensor(shp, std::move(d));
    }
    const bool outer = is_outer(core.kind);
    const bool top = (j == core.h - 1);
    if (!outer) {
        // (ch, ch, d [, u]) -> (d, ch, ch [, u])
        base = top ? transpose(base, {2, 0, 1}) : transpose(base, {2, 0, 1, 3});
    } else {
        base = top ? transpose(base, {1, 0}) : transpose(base, {1, 0, 2});
    }
    const std::size_t d = base.shape()[0];
    return reshape(base, {d, base.size() / d});
}

Tensor bottom_matrix(const FactoredCore& core, int t /*-1 = keep v*/) {
    const Tensor& s = core.subcores[0];
    if (t < 0) {
        const std::size_t cv = s.shape().back();
        return reshape(s, {s.size() / cv, cv});
    }
    const std::size_t block = s.size() / uz(core.v);
    std::vector<std::size_t> shp(s.shape().begin() + 1, s.shape().end());
    std::vector<double> d(s.data() + uz(t) * block, s.data() + (uz(t) + 1) * block);
    const std::size_t cv = shp.back();
    return Tensor({block / cv, cv}, std::move(d));
}

// Runs the two-matrix loop; p starts as (rows, cv0).
Tensor stack_contract(Tensor p, const FactoredCore& core, int t) {
    for (int j = 1; j < core.h; ++j) {
        Tensor s = step_matrix(core, j, t);
        p = matmul(reshape(p, {p.size() / s.shape()[0], s.shape()[0]}), s);
    }
    return p;
}

// Interleaved (v, l0, r0, l1, r1, ...) -> grouped (v, L, R) for inner cores.
Tensor regroup_inner(const Tensor& flat, int v, int ch, int h) {
    std::vector<std::size_t> dims{uz(v)};
    for (int j = 0; j < 2 * h; ++j) dims.push_back(uz(ch));
    std::vector<std::size_t> perm{0};
    for (int j = 0; j < h; ++j) perm.push_back(uz(1 + 2 * j));
    for (int j = 0; j < h; ++j) perm.push_back(uz(2 + 2 * j));
    const std::size_t chi = ipow(uz(ch), h);
    return reshape(transpose(reshape(flat, dims), perm), {uz(v), chi, chi});
}

}  // namespace

Tensor contract_vertical(const FactoredCore& core) {
    const bool outer = is_outer(core.kind);
    const std::size_t chi = ipow(uz(core.chi_h), core.h);
    if (core.h == 1) {
        return outer ? reshape(core.subcores[0], {uz(core.v), chi})
                     : reshape(core.subcores[0], {uz(core.v), chi, chi});
    }
    Tensor flat;
    if (!core.skip) {
        flat = stack_contract(bottom_matrix(core, -1), core, -1);
    } else {
        // Copy-tensor semantics: contract slice t of every subcore.
        std::vector<double> data;
        data.reserve(uz(core.v) * (outer ? chi : chi * chi));
        for (int t = 0; t < core.v; ++t) {
            Tensor pt = stack_contract(bottom_matrix(core, t), core, t);
            data.insert(data.end(), pt.data(), pt.data() + pt.size());
        }
        const std::size_t len = data.size();
        flat = Tensor({len}, std::move(data));
    }
    if (outer) return reshape(flat, {uz(core.v), chi});
    return regroup_inner(flat, core.v, core.chi_h, core.h);
}

// ---------------------------------------------------------------------------
// Factorization by iterated SVD.

namespace {

// Extend an orthonormal column set of u (m x k) to m x cv. New columns are
// random, orthogonalized against everything so far while the space allows.
Tensor widen_orthonormal(const Tensor& u, std::size_t cv, Rng& rng) {
    const std::size_t m = u.shape()[0], k = u.shape()[1];
    Tensor out({m, cv});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) out[i * cv + j] = u[i * k + j];
    for (std::size_t j = k; j < cv; ++j) {
        for (int attempt = 0; attempt < 64; ++attempt) {
            std::vector<double> v(m);
            for (auto& x : v) x = rng.next_normal();
            if (j < m) {  // orthogonalize while the space allows
                for (std::size_t c = 0; c < j; ++c) {
                    double proj = 0.0;
                    for (std::size_t i = 0; i < m; ++i) proj += v[i] * out[i * cv + c];
                    for (std::size_t i = 0; i < m; ++i) v[i] -= proj * out[i * cv + c];
                }
            }
            double nrm = 0.0;
            for (double x : v) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 1e-8) {
                for (std::size_t i = 0; i < m; ++i) out[i * cv + j] = v[i] / nrm;
                break;
            }
        }
    }
    return out;
}

struct Split {
    Tensor u;  // rows x cv
    Tensor w;  // cv x cols (diag(s) absorbed upward)
};

Split split_matrix(const Tensor& mat, int chi_v, double lo, double hi, Rng& rng,
                   std::vector<std::vector<double>>* spectra) {
    SvdResult r = svd(mat);
    if (spectra) spectra->push_back(r.s);
    const std::size_t rows = mat.shape()[0], cols = mat.shape()[1];
    const std::size_t k = r.s.size();
    const std::size_t cv = (chi_v <= 0) ? k : uz(chi_v);

    Tensor u({rows, cv});
    Tensor vt({cv, cols});
    std::vector<double> s(cv);
    if (cv <= k) {
        // Keep the top singular values; discard the rest.
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cv; ++j) u[i * cv + j] = r.u[i * k + j];
        for (std::size_t j = 0; j < cv; ++j) {
            s[j] = r.s[j];
            for (std::size_t i = 0; i < cols; ++i) vt[j * cols + i] = r.vt[j * cols + i];
        }
    } else {
        Rng urng = rng.child("svd-extend-u");
        Rng vrng = rng.child("svd-extend-v");
        u = widen_orthonormal(r.u, cv, urng);
        Tensor v_ext = widen_orthonormal(transpose(r.vt), cv, vrng);
        vt = transpose(v_ext);
        for (std::size_t j = 0; j < k; ++j) s[j] = r.s[j];
        for (std::size_t j = k; j < cv; ++j) s[j] = lo + (hi - lo) * rng.next_double();
    }
    Split out;
    out.u = std::move(u);
    out.w = Tensor({cv, cols});
    for (std::size_t j = 0; j < cv; ++j)
        for (std::size_t i = 0; i < cols; ++i)
            out.w[j * cols + i] = s[j] * vt[j * cols + i];
    return out;
}

}  // namespace

std::vector<Tensor> factorize_core(const Tensor& dense_core, PositionKind kind,
                                   int v, int chi_h, int h, int chi_v,
                                   double sv_fill_lo, double sv_fill_hi, Rng& rng,
                                   std::vector<std::vector<double>>* split_spectra) {
    const bool outer = is_outer(kind);
    const std::size_t ch = uz(chi_h), chi = ipow(ch, h);
    const std::size_t expect = outer ? uz(v) * chi : uz(v) * chi * chi;
    if (dense_core.size() != expect)
        throw std::invalid_argument("factorize_core: core size does not match chi_h^h");
    if (h == 1) {
        return {outer ? reshape(dense_core, {uz(v), ch})
                      : reshape(dense_core, {uz(v), ch, ch})};
    }

    std::vector<Tensor> subcores;
    Tensor mat;
    if (!outer) {
        // (v, l0..l_{h-1}, r0..r_{h-1}) -> rows (v, l0, r0), cols the rest.
        std::vector<std::size_t> dims{uz(v)};
        for (int j = 0; j < 2 * h; ++j) dims.push_back(ch);
        std::vector<std::size_t> perm{0, 1, uz(h) + 1};
        for (int j = 2; j <= h; ++j) perm.push_back(uz(j));
        for (int j = h + 2; j <= 2 * h; ++j) perm.push_back(uz(j));
        mat = reshape(transpose(reshape(dense_core, dims), perm),
                      {uz(v) * ch * ch, ipow(ch, 2 * (h - 1))});
    } else {
        mat = reshape(dense_core, {uz(v) * ch, ipow(ch, h - 1)});
    }

    for (int j = 0; j < h - 1; ++j) {
        Split sp = split_matrix(mat, chi_v, sv_fill_lo, sv_fill_hi, rng, split_spectra);
        const std::size_t cv = sp.u.shape()[1];
        if (j == 0) {
            subcores.push_back(outer ? reshape(sp.u, {uz(v), ch, cv})
                                     : reshape(sp.u, {uz(v), ch, ch, cv}));
        } else {
            const std::size_t d = mat.shape()[0] / (outer ? ch : ch * ch);
            subcores.push_back(outer ? reshape(sp.u, {ch, d, cv})
                                     : reshape(sp.u, {ch, ch, d, cv}));
        }
        const int m = h - 1 - j;  // levels remaining above this split
        if (m == 1) {
            // Top subcore: (cv, l, r) -> (l, r, cv) / (cv, l) -> (l, cv).
            if (outer) {
                subcores.push_back(transpose(reshape(sp.w, {cv, ch}), {1, 0}));
            } else {
                subcores.push_back(
                    transpose(reshape(sp.w, {cv, ch, ch}), {1, 2, 0}));
            }
        } else {
            // Re-matricize: rows (l_{j+1} [, r_{j+1}], d), cols the rest.
            if (outer) {
                std::vector<std::size_t> dims{cv};
                for (int q = 0; q < m; ++q) dims.push_back(ch);
                std::vector<std::size_t> perm{1, 0};
                for (int q = 2; q <= m; ++q) perm.push_back(uz(q));
                mat = reshape(transpose(reshape(sp.w, dims), perm),
                              {ch * cv, ipow(ch, m - 1)});
            } else {
                std::vector<std::size_t> dims{cv};
                for (int q = 0; q < 2 * m; ++q) dims.push_back(ch);
                std::vector<std::size_t> perm{1, uz(m) + 1, 0};
                for (int q = 2; q <= m; ++q) perm.push_back(uz(q));
                for (int q = m + 2; q <= 2 * m; ++q) perm.push_back(uz(q));
                mat = reshape(transpose(reshape(sp.w, dims), perm),
                              {ch * ch * cv, ipow(ch, 2 * (m - 1))});
            }
        }
    }
    return subcores;
}

FactoredMPS init_factored(int n, int v, int chi_h, int h, int chi_v, bool skip,
                          double sigma_inner, double sigma_outer,
                          double sv_fill_lo, double sv_fill_hi, Rng& rng) {
    const std::size_t chi = ipow(uz(chi_h), h);
    Rng dense_rng = rng.child("dense-parent");
    Rng fact_rng = rng.child("factorize");
    Rng lift_rng = rng.child("skip-lift");
    mps::DenseMPS parent = mps::init_dense(n, v, static_cast<int>(chi), sigma_inner,
                                           sigma_outer, dense_rng);
    FactoredMPS f;
    f.n = n;
    f.v = v;
    f.chi_h = chi_h;
    f.h = h;
    f.chi_v = chi_v;
    f.skip = skip;
    f.cores.reserve(uz(n));
    for (int k = 0; k < n; ++k) {
        FactoredCore core;
        core.kind = (k == 0) ? PositionKind::outer_left
                  : (k == n - 1) ? PositionKind::outer_right
                                 : PositionKind::inner;
        core.h = h;
        core.skip = skip;
        core.v = v;
        core.chi_h = chi_h;
        core.subcores = factorize_core(parent.cores[uz(k)], core.kind, v, chi_h,
                                       h, chi_v, sv_fill_lo, sv_fill_hi, fact_rng);
        if (skip && h > 1) {
            // Lift: replicate each upper subcore across the physical index,
            // plus noise; copy-tensor contraction then reproduces the parent.
            const double sigma =
                (core.kind == PositionKind::inner) ? sigma_inner : sigma_outer;
            for (int j = 1; j < h; ++j) {
                const Tensor& s = core.subcores[uz(j)];
                std::vector<std::size_t> shp{uz(v)};
                shp.insert(shp.end(), s.shape().begin(), s.shape().end());
                Tensor lifted = rng_normal(lift_rng, shp, 0.0, sigma);
                for (std::size_t t = 0; t < uz(v); ++t)
                    for (std::size_t i = 0; i < s.size(); ++i)
                        lifted[t * s.size() + i] += s[i];
                core.subcores[uz(j)] = std::move(lifted);
            }
        }
        f.cores.push_back(std::move(core));
    }
    return f;
}

FactoredMPS init_factored_random(int n, int v, int chi_h, int h, int chi_v,
                                 bool skip, double lo, double hi, Rng& rng) {
    if (chi_v < 1)
        throw std::invalid_argument("init_factored_random: chi_v must be >= 1");
    FactoredMPS f = init_factored(n, v, chi_h, h, chi_v, skip, 0.0, 0.0,
                                  0.001, 0.01, rng);
    Rng draw = rng.child("uniform-subcores");
    for (FactoredCore& core : f.cores)
        for (Tensor& s : core.subcores)
            for (std::size_t i = 0; i < s.size(); ++i)
                s[i] = lo + (hi - lo) * draw.next_double();
    return f;
}

std::pair<Tensor, double> truncate_rank(const Tensor& m, std::size_t k) {
    if (m.rank() != 2) throw std::invalid_argument("truncate_rank: expected rank-2");
    SvdResult r = svd(m);
    if (k < 1 || k > r.s.size())
        throw std::invalid_argument("truncate_rank: k out of range");
    const std::size_t rows = m.shape()[0], cols = m.shape()[1], kk = r.s.size();
    Tensor approx({rows, cols});
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < k; ++q)
                acc += r.u[i * kk + q] * r.s[q] * r.vt[q * cols + j];
            approx[i * cols + j] = acc;
        }
    double err2 = 0.0;
    for (std::size_t q = k; q < kk; ++q) err2 += r.s[q] * r.s[q];
    return {std::move(approx), std::sqrt(err2)};
}

mps::DenseMPS to_dense(const FactoredMPS& f) {
    mps::DenseMPS m;
    m.n = f.n;
    m.v = f.v;
    m.chi = static_cast<int>(ipow(uz(f.chi_h), f.h));
    m.cores.reserve(f.cores.size());
    for (const FactoredCore& c : f.cores) m.cores.push_back(contract_vertical(c));
    return m;
}

std::size_t param_count(const FactoredCore& core) {
    std::size_t acc = 0;
    for (const Tensor& s : core.subcores) acc += s.size();
    return acc;
}

std::size_t param_count(const FactoredMPS& f) {
    std::size_t acc = 0;
    for (const FactoredCore& c : f.cores) acc += param_count(c);
    return acc;
}

FactoredLossGrad loss_and_grad_factored(const FactoredMPS& f,
                                        const std::vector<std::pair<Chain, int>>& batch,
                                        double alpha, NormMode norm_mode) {
    mps::DenseMPS eff = to_dense(f);
    mps::LossGrad dense = mps::loss_and_grad(eff, batch, alpha, norm_mode);

    FactoredLossGrad out;
    out.loss = dense.loss;
    out.grads.reserve(f.cores.size());
    for (std::size_t k = 0; k < f.cores.size(); ++k) {
        const FactoredCore& core = f.cores[k];
        std::vector<Tensor> core_grads;
        if (core.h == 1) {
            core_grads.push_back(reshape(dense.grads[k], core.subcores[0].shape()));
        } else {
            Tensor gview = effective_view(core, dense.grads[k]);
            const std::vector<int> glabels = effective_labels(core);
            for (int j = 0; j < core.h; ++j) {
                std::vector<Fac> facs{{&gview, glabels}};
                for (int q = 0; q < core.h; ++q) {
                    if (q == j) continue;
                    facs.push_back({&core.subcores[uz(q)], subcore_labels(core, q)});
                }
                core_grads.push_back(
                    contract_labeled(facs, subcore_labels(core, j)));
            }
        }
        out.grads.push_back(std::move(core_grads));
    }
    return out;
}

}  // namespace tn::factored
