#include "tn/motzkin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tn::motzkin {

namespace {

constexpr int kEnumGuard = 20;

std::size_t to_size(const BigInt& v) {
    if (v > BigInt(~std::uint64_t(0) >> 1))
        throw std::overflow_error("count does not fit in 64 bits");
    return static_cast<std::size_t>(v.convert_to<std::uint64_t>());
}

void enumerate_rec(int n, int pos, int height, Chain& prefix,
                   std::vector<Chain>& out) {
    if (pos == n) {
        if (height == 0) out.push_back(prefix);
        return;
    }
    const int remaining = n - pos;
    for (std::uint8_t tok = 0; tok < 3; ++tok) {
        const int step = (tok == Up) ? 1 : (tok == Down) ? -1 : 0;
        const int h = height + step;
        if (h < 0 || h > remaining - 1) continue;  // cannot return to 0
        prefix[pos] = tok;
        enumerate_rec(n, pos + 1, h, prefix, out);
    }
}

}  // namespace

bool is_valid(const Chain& chain) {
    int height = 0;
    for (std::uint8_t tok : chain) {
        height += (tok == Up) ? 1 : (tok == Down) ? -1 : 0;
        if (height < 0) return false;
    }
    return height == 0;
}

BigInt motzkin_number(int n) {
    if (n < 0) throw std::invalid_argument("motzkin_number: n must be >= 0");
    std::vector<BigInt> m(static_cast<std::size_t>(n) + 1);
    m[0] = 1;
    if (n >= 1) m[1] = 1;
    for (int i = 2; i <= n; ++i) {
        BigInt acc = m[i - 1];
        for (int k = 0; k <= i - 2; ++k) acc += m[k] * m[i - 2 - k];
        m[i] = acc;
    }
    return m[n];
}

std::vector<Chain> enumerate_valid(int n) {
    if (n < 0 || n > kEnumGuard)
        throw std::invalid_argument("enumerate_valid: n must be in [0, 20]");
    std::vector<Chain> out;
    out.reserve(to_size(motzkin_number(n)));
    Chain prefix(static_cast<std::size_t>(n), 0);
    enumerate_rec(n, 0, 0, prefix, out);
    return out;
}

std::uint64_t pow3(int n) {
    if (n < 0 || n > 40) throw std::invalid_argument("pow3: n must be in [0, 40]");
    std::uint64_t p = 1;
    for (int i = 0; i < n; ++i) p *= 3;
    return p;
}

std::uint64_t chain_index(const Chain& chain) {
    std::uint64_t idx = 0;
    for (std::uint8_t tok : chain) idx = idx * 3 + tok;
    return idx;
}

Chain chain_from_index(std::uint64_t index, int n) {
    Chain c(static_cast<std::size_t>(n));
    for (int i = n; i-- > 0;) {
        c[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(index % 3);
        index /= 3;
    }
    return c;
}

std::vector<Chain> sample_invalid(int n, std::size_t count, Rng& rng) {
    const std::uint64_t total = pow3(n);
    const BigInt invalid_count = BigInt(total) - motzkin_number(n);
    if (BigInt(count) > invalid_count)
        throw std::invalid_argument("sample_invalid: not enough invalid chains");
    std::vector<Chain> out;
    out.reserve(count);
    while (out.size() < count) {
        Chain c = chain_from_index(rng.next_below(total), n);
        if (!is_valid(c)) out.push_back(std::move(c));
    }
    return out;
}

LabeledDataset build_dataset(int n, double train_fraction, double mu,
                             std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction > 1.0)
        throw std::invalid_argument("build_dataset: train_fraction must be in (0, 1]");
    if (mu < 0.0 || mu > 1.0)
        throw std::invalid_argument("build_dataset: mu must be in [0, 1]");

    std::vector<Chain> valid = enumerate_valid(n);
    const std::size_t total = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(valid.size())));
    const std::size_t n_valid = static_cast<std::size_t>(
        std::llround(mu * static_cast<double>(total)));
    if (n_valid > valid.size())
        throw std::invalid_argument("build_dataset: not enough valid chains");

    Rng rng(seed);
    Rng valid_rng = rng.child("valid-sample");
    Rng invalid_rng = rng.child("invalid-sample");
    Rng shuffle_rng = rng.child("shuffle");

    // Partial Fisher-Yates picks n_valid chains without replacement.
    std::vector<std::size_t> order(valid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < n_valid; ++i) {
        const std::size_t j = i + valid_rng.next_below(order.size() - i);
        std::swap(order[i], order[j]);
    }

    LabeledDataset ds;
    ds.n = n;
    ds.mu = mu;
    ds.seed = seed;
    ds.items.reserve(total);
    for (std::size_t i = 0; i < n_valid; ++i)
        ds.items.emplace_back(valid[order[i]], 1);
    for (Chain& c : sample_invalid(n, total - n_valid, invalid_rng))
        ds.items.emplace_back(std::move(c), 0);
    for (std::size_t i = ds.items.size(); i-- > 1;)
        std::swap(ds.items[i], ds.items[shuffle_rng.next_below(i + 1)]);
    return ds;
}

Tensor mutual_information(int n) {
    if (n < 1 || n > 16)
        throw std::invalid_argument("mutual_information: n must be in [1, 16]");
    const std::vector<Chain> valid = enumerate_valid(n);
    const double total = static_cast<double>(valid.size());
    const std::size_t un = static_cast<std::size_t>(n);

    std::vector<std::uint64_t> marg(un * 3, 0);
    std::vector<std::uint64_t> joint(un * un * 9, 0);
    for (const Chain& c : valid) {
        for (std::size_t i = 0; i < un; ++i) {
            ++marg[i * 3 + c[i]];
            for (std::size_t j = i + 1; j < un; ++j)
                ++joint[(i * un + j) * 9 + c[i] * 3 + c[j]];
        }
    }

    Tensor mi({un, un});
    for (std::size_t i = 0; i < un; ++i) {
        double h = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double p = static_cast<double>(marg[i * 3 + a]) / total;
            if (p > 0.0) h -= p * std::log(p);
        }
        mi[i * un + i] = h;
        for (std::size_t j = i + 1; j < un; ++j) {
            double acc = 0.0;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const std::uint64_t cnt = joint[(i * un + j) * 9 + a * 3 + b];
                    if (cnt == 0) continue;
                    const double pab = static_cast<double>(cnt) / total;
                    const double pa = static_cast<double>(marg[i * 3 + a]) / total;
                    const double pb = static_cast<double>(marg[j * 3 + b]) / total;
                    acc += pab * std::log(pab / (pa * pb));
                }
            }
            mi[i * un + j] = acc;
            mi[j * un + i] = acc;
        }
    }
    return mi;
}

Tensor mutual_information_stationary(int n) {
    if (n < 1 || n > 16)
        throw std::invalid_argument("mutual_information_stationary: n must be in [1, 16]");
    const std::vector<Chain> valid = enumerate_valid(n);
    const double total = static_cast<double>(valid.size());
    const std::size_t un = static_cast<std::size_t>(n);

    std::vector<std::uint64_t> marg(un * 3, 0);
    std::vector<std::uint64_t> joint(un * un * 9, 0);
    for (const Chain& c : valid) {
        for (std::size_t i = 0; i < un; ++i) {
            ++marg[i * 3 + c[i]];
            for (std::size_t j = i + 1; j < un; ++j)
                ++joint[(i * un + j) * 9 + c[i] * 3 + c[j]];
        }
    }

    double q[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < un; ++i)
        for (int a = 0; a < 3; ++a)
            q[a] += static_cast<double>(marg[i * 3 + a]) / (total * double(n));

    Tensor mi = Tensor::zeros({un, un});
    for (std::size_t i = 0; i < un; ++i) {
        for (std::size_t j = i + 1; j < un; ++j) {
            double acc = 0.0;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const std::uint64_t cnt = joint[(i * un + j) * 9 + a * 3 + b];
                    if (cnt == 0) continue;
                    const double pab = static_cast<double>(cnt) / total;
                    acc += pab * std::log(pab / (q[a] * q[b]));
                }
            }
            mi[i * un + j] = acc;
            mi[j * un + i] = acc;
        }
    }
    return mi;
}

Chain encode_chain(const std::string& text) {
    Chain c;
    c.reserve(text.size());
    for (char ch : text) {
        switch (ch) {
            case 'u': c.push_back(Up); break;
            case 'f': c.push_back(Flat); break;
            case 'd': c.push_back(Down); break;
            default:
                throw std::invalid_argument(
                    std::string("encode_chain: bad character '") + ch + "'");
        }
    }
    return c;
}

std::string decode_chain(const Chain& chain) {
    std::string s;
    s.reserve(chain.size());
    for (std::uint8_t tok : chain) {
        if (tok > 2) throw std::invalid_argument("decode_chain: bad token code");
        s.push_back("ufd"[tok]);
    }
    return s;
}

void write_dataset(const LabeledDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
    for (const auto& [chain, label] : ds.items)
        out << decode_chain(chain) << '\t' << label << '\n';
    if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

LabeledDataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
    LabeledDataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        std::string text = (tab == std::string::npos) ? line : line.substr(0, tab);
        int label = 1;
        if (tab != std::string::npos) {
            const std::string lab = line.substr(tab + 1);
            if (lab == "0") label = 0;
            else if (lab == "1") label = 1;
            else throw std::runtime_error("read_dataset: bad label at line " +
                                          std::to_string(lineno));
        }
        Chain c = encode_chain(text);
        if (ds.items.empty()) ds.n = static_cast<int>(c.size());
        else if (static_cast<int>(c.size()) != ds.n)
            throw std::runtime_error("read_dataset: inconsistent length at line " +
                                     std::to_string(lineno));
        ds.items.emplace_back(std::move(c), label);
    }
    return ds;
}

}  // namespace tn::motzkin
