#include "tn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "tn/kernels.hpp"

namespace tn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t p = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("tensor extent must be >= 1");
        p *= e;
    }
    return p;
}

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != data_.size())
        throw std::invalid_argument("tensor shape does not match data length");
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape_.size())
        throw std::invalid_argument("index rank mismatch");
    std::size_t off = 0;
    std::size_t axis = 0;
    for (std::size_t i : idx) {
        if (i >= shape_[axis]) throw std::out_of_range("tensor index out of range");
        off = off * shape_[axis] + i;
        ++axis;
    }
    return off;
}

double& Tensor::at(std::initializer_list<std::size_t> idx) { return data_[offset(idx)]; }
double Tensor::at(std::initializer_list<std::size_t> idx) const { return data_[offset(idx)]; }

Tensor Tensor::zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
}

// ---------------------------------------------------------------------------
// Rng (xoshiro256** seeded via splitmix64)

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound must be > 0");
    const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound) - 1;
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v > limit);
    return v % bound;
}

double Rng::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

Rng Rng::child(const std::string& role) const {
    std::uint64_t mix = seed_ ^ (fnv1a64(role) * 0x9E3779B97F4A7C15ULL);
    std::uint64_t sm = mix;
    return Rng(splitmix64(sm));
}

// ---------------------------------------------------------------------------
// Shape ops

Tensor reshape(const Tensor& t, std::vector<std::size_t> new_shape) {
    if (shape_product(new_shape) != t.size())
        throw std::invalid_argument("reshape: shape product mismatch");
    return Tensor(std::move(new_shape),
                  std::vector<double>(t.data(), t.data() + t.size()));
}

Tensor transpose(const Tensor& t, const std::vector<std::size_t>& perm) {
    const std::size_t r = t.rank();
    if (perm.size() != r) throw std::invalid_argument("transpose: bad permutation size");
    std::vector<bool> seen(r, false);
    for (std::size_t p : perm) {
        if (p >= r || seen[p]) throw std::invalid_argument("transpose: invalid permutation");
        seen[p] = true;
    }
    std::vector<std::size_t> out_shape(r);
    for (std::size_t i = 0; i < r; ++i) out_shape[i] = t.shape()[perm[i]];
    Tensor out(out_shape);

    // Strides of the input axes as they appear in the output index order.
    std::vector<std::size_t> in_strides(r, 1);
    for (std::size_t i = r; i-- > 1;)
        in_strides[i - 1] = in_strides[i] * t.shape()[i];
    std::vector<std::size_t> strides(r);
    for (std::size_t i = 0; i < r; ++i) strides[i] = in_strides[perm[i]];

    std::vector<std::size_t> idx(r, 0);
    std::size_t in_off = 0;
    const std::size_t total = t.size();
    for (std::size_t o = 0; o < total; ++o) {
        out[o] = t[in_off];
        for (std::size_t axis = r; axis-- > 0;) {
            ++idx[axis];
            in_off += strides[axis];
            if (idx[axis] < out_shape[axis]) break;
            in_off -= strides[axis] * out_shape[axis];
            idx[axis] = 0;
        }
    }
    return out;
}

Tensor transpose(const Tensor& t) {
    if (t.rank() != 2) throw std::invalid_argument("transpose: expected rank-2 tensor");
    return transpose(t, {1, 0});
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() == 2 && b.rank() == 2) {
        if (a.shape()[1] != b.shape()[0])
            throw std::invalid_argument("matmul: inner extent mismatch");
        Tensor c({a.shape()[0], b.shape()[1]});
        kern::matmul(a.data(), b.data(), c.data(),
                     a.shape()[0], a.shape()[1], b.shape()[1]);
        return c;
    }
    if (a.rank() == 3 && b.rank() == 3) {
        if (a.shape()[0] != b.shape()[0])
            throw std::invalid_argument("matmul: batch extent mismatch");
        if (a.shape()[2] != b.shape()[1])
            throw std::invalid_argument("matmul: inner extent mismatch");
        const std::size_t nb = a.shape()[0];
        const std::size_t m = a.shape()[1], k = a.shape()[2], n = b.shape()[2];
        Tensor c({nb, m, n});
        for (std::size_t i = 0; i < nb; ++i)
            kern::matmul(a.data() + i * m * k, b.data() + i * k * n,
                         c.data() + i * m * n, m, k, n);
        return c;
    }
    throw std::invalid_argument("matmul: expected two rank-2 or two rank-3 tensors");
}

// ---------------------------------------------------------------------------
// SVD: one-sided Jacobi on the columns, for m >= n. The wrapper below
// handles wide matrices by decomposing the transpose.

namespace {

constexpr int kMaxSweeps = 100;

void jacobi_svd_tall(const Tensor& m_in, Tensor& u, std::vector<double>& s, Tensor& vt) {
    const std::size_t m = m_in.shape()[0], n = m_in.shape()[1];
    // Column-major working copies keep the rotations cache-friendly.
    std::vector<double> a(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) a[j * m + i] = m_in[i * n + j];
    std::vector<double> v(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) v[j * n + j] = 1.0;

    double frob2 = 0.0;
    for (double x : a) frob2 += x * x;
    const double off_tol = 1e-12 * std::sqrt(frob2);

    bool converged = (n < 2) || frob2 == 0.0;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        double off_mass = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* ap = a.data() + p * m;
                double* aq = a.data() + q * m;
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += ap[i] * ap[i];
                    aqq += aq[i] * aq[i];
                    apq += ap[i] * aq[i];
                }
                off_mass += apq * apq;
                if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq)) continue;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double tp = ap[i];
                    ap[i] = cs * tp - sn * aq[i];
                    aq[i] = sn * tp + cs * aq[i];
                }
                double* vp = v.data() + p * n;
                double* vq = v.data() + q * n;
                for (std::size_t i = 0; i < n; ++i) {
                    const double tp = vp[i];
                    vp[i] = cs * tp - sn * vq[i];
                    vq[i] = sn * tp + cs * vq[i];
                }
            }
        }
        converged = std::sqrt(off_mass) < off_tol;
    }
    if (!converged)
        throw std::runtime_error("svd: Jacobi did not converge in 100 sweeps");

    // Column norms are the singular values; sort non-increasing.
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        const double* col = a.data() + j * m;
        for (std::size_t i = 0; i < m; ++i) acc += col[i] * col[i];
        norms[j] = std::sqrt(acc);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

    u = Tensor({m, n});
    s.assign(n, 0.0);
    vt = Tensor({n, n});
    const double s_max = norms[order[0]];
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        s[jj] = norms[j];
        const double* vcol = v.data() + j * n;
        for (std::size_t i = 0; i < n; ++i) vt[jj * n + i] = vcol[i];
        const double* col = a.data() + j * m;
        if (norms[j] > s_max * 1e-14 && norms[j] > 0.0) {
            const double inv = 1.0 / norms[j];
            for (std::size_t i = 0; i < m; ++i) u[i * n + jj] = col[i] * inv;
        }
    }
    // Columns whose singular value vanished get an orthonormal completion
    // from the standard basis so u keeps orthonormal columns.
    for (std::size_t jj = 0; jj < n; ++jj) {
        if (s[jj] > s_max * 1e-14 && s[jj] > 0.0) continue;
        s[jj] = (s[jj] < 0.0) ? 0.0 : s[jj];
        for (std::size_t cand = 0; cand < m; ++cand) {
            std::vector<double> e(m, 0.0);
            e[cand] = 1.0;
            for (std::size_t c = 0; c < n; ++c) {
                if (c == jj) continue;
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += e[i] * u[i * n + c];
                for (std::size_t i = 0; i < m; ++i) e[i] -= proj * u[i * n + c];
            }
            double nrm = 0.0;
            for (double x : e) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 1e-6) {
                for (std::size_t i = 0; i < m; ++i) u[i * n + jj] = e[i] / nrm;
                break;
            }
        }
    }
    // Sign convention: largest-magnitude entry of each left singular vector
    // is non-negative, so repeated factorizations are reproducible.
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double mag = std::abs(u[i * n + j]);
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (u[arg * n + j] < 0.0) {
            for (std::size_t i = 0; i < m; ++i) u[i * n + j] = -u[i * n + j];
            for (std::size_t i = 0; i < n; ++i) vt[j * n + i] = -vt[j * n + i];
        }
    }
}

}  // namespace

SvdResult svd(const Tensor& m_in) {
    if (m_in.rank() != 2) throw std::invalid_argument("svd: expected rank-2 tensor");
    for (std::size_t i = 0; i < m_in.size(); ++i)
        if (!std::isfinite(m_in[i]))
            throw std::invalid_argument("svd: non-finite entry");
    const std::size_t m = m_in.shape()[0], n = m_in.shape()[1];
    SvdResult r;
    if (m >= n) {
        jacobi_svd_tall(m_in, r.u, r.s, r.vt);
    } else {
        Tensor ut, vtt;
        std::vector<double> s;
        jacobi_svd_tall(transpose(m_in), ut, s, vtt);
        // m_in = (vtt)^T diag(s) (ut)^T; re-fix signs against the new u.
        r.u = transpose(vtt);
        r.s = std::move(s);
        r.vt = transpose(ut);
        const std::size_t k = r.s.size();
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t arg = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double mag = std::abs(r.u[i * k + j]);
                if (mag > best) {
                    best = mag;
                    arg = i;
                }
            }
            if (r.u[arg * k + j] < 0.0) {
                for (std::size_t i = 0; i < m; ++i) r.u[i * k + j] = -r.u[i * k + j];
                for (std::size_t i = 0; i < n; ++i) r.vt[j * n + i] = -r.vt[j * n + i];
            }
        }
    }
    return r;
}

Tensor rng_normal(Rng& rng, std::vector<std::size_t> shape, double mean, double std) {
    if (std < 0.0) throw std::invalid_argument("rng_normal: std must be >= 0");
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = mean + std * rng.next_normal();
    return t;
}

Tensor rng_uniform(Rng& rng, std::vector<std::size_t> shape, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("rng_uniform: lo must be <= hi");
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rng.next_double();
    return t;
}

}  // namespace tn
