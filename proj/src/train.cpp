#include "tn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tn/kernels.hpp"

namespace tn::train {

namespace {

std::size_t uz(int x) { return static_cast<std::size_t>(x); }

double finalize_mean(double acc, int count) {
    return count > 0 ? acc / count : 0.0;
}

std::vector<Chain> sorted_chains(std::vector<Chain> chains) {
    std::sort(chains.begin(), chains.end());
    return chains;
}

}  // namespace

const char* model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::dense: return "dense";
        case ModelKind::factored: return "factored";
        case ModelKind::skip: return "skip";
        case ModelKind::mlp: return "mlp";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "dense") return ModelKind::dense;
    if (name == "factored") return ModelKind::factored;
    if (name == "skip") return ModelKind::skip;
    if (name == "mlp") return ModelKind::mlp;
    throw std::invalid_argument("unknown model kind: " + name);
}

std::vector<Tensor*> model_params(Model& m) {
    std::vector<Tensor*> out;
    if (auto* d = std::get_if<mps::DenseMPS>(&m)) {
        for (Tensor& t : d->cores) out.push_back(&t);
    } else if (auto* f = std::get_if<factored::FactoredMPS>(&m)) {
        for (auto& core : f->cores)
            for (Tensor& t : core.subcores) out.push_back(&t);
    } else if (auto* p = std::get_if<mlp::MlpModel>(&m)) {
        out = {&p->embedding, &p->w1, &p->b1, &p->w2, &p->b2};
    }
    return out;
}

std::vector<const Tensor*> model_params(const Model& m) {
    std::vector<const Tensor*> out;
    for (Tensor* t : model_params(const_cast<Model&>(m))) out.push_back(t);
    return out;
}

void sgd_step(Tensor& param, const Tensor& grad, double lr) {
    if (param.shape() != grad.shape())
        throw std::invalid_argument("sgd_step: shape mismatch");
    kern::axpy(-lr, grad.data(), param.data(), param.size());
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_auc: size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: need both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tie groups; accumulate positive ranks.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q)
            if (labels[order[q]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u = rank_sum_pos -
                     0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    double auc = u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    if (auc < 0.5) auc = 1.0 - auc;
    return auc;
}

namespace {

// Log-prob scores with prefix reuse across consecutive chains.
std::vector<double> dense_scores(const mps::DenseMPS& m,
                                 const std::vector<Chain>& chains) {
    std::vector<double> out;
    out.reserve(chains.size());
    if (chains.empty()) return out;
    const double log_n = mps::log_norm_sq(m);
    const std::size_t n = uz(m.n);

    struct State {
        std::vector<double> vec;
        double log;
        bool zero;
    };
    // Reuse the sigma_mass machinery shape: recompute from first difference.
    Chain prev;
    std::vector<mps::LogAmplitude> dummy;
    std::vector<std::vector<double>> vecs(n - 1);
    std::vector<double> logs(n - 1, 0.0);
    std::vector<bool> zero(n - 1, false);
    const std::size_t chi = uz(m.chi);

    for (const Chain& chain : chains) {
        std::size_t first_diff = 0;
        if (!prev.empty())
            while (first_diff < n && prev[first_diff] == chain[first_diff]) ++first_diff;
        for (std::size_t k = first_diff; k + 1 < n; ++k) {
            if (k == 0) {
                const double* row = m.cores[0].data() + chain[0] * chi;
                vecs[0].assign(row, row + chi);
                logs[0] = 0.0;
                zero[0] = false;
            } else {
                vecs[k].resize(chi);
                const double* g = m.cores[k].data() + chain[k] * chi * chi;
                kern::vecmat(vecs[k - 1].data(), g, vecs[k].data(), chi, chi);
                logs[k] = logs[k - 1];
                zero[k] = zero[k - 1];
            }
            double mx = 0.0;
            for (double x : vecs[k]) mx = std::max(mx, std::abs(x));
            if (mx == 0.0) {
                zero[k] = true;
            } else {
                const double inv = 1.0 / mx;
                for (double& x : vecs[k]) x *= inv;
                logs[k] += std::log(mx);
            }
        }
        double lp;
        if (zero[n - 2]) {
            lp = -std::numeric_limits<double>::infinity();
        } else {
            const double* row = m.cores[n - 1].data() + chain[n - 1] * chi;
            const double d = kern::dot(vecs[n - 2].data(), row, chi);
            lp = (d == 0.0) ? -std::numeric_limits<double>::infinity()
                            : 2.0 * (logs[n - 2] + std::log(std::abs(d))) - log_n;
        }
        out.push_back(std::min(lp, -1e-12));
        prev = chain;
    }
    return out;
}

}  // namespace

std::vector<double> score_chains(const Model& m, const std::vector<Chain>& chains) {
    if (const auto* d = std::get_if<mps::DenseMPS>(&m)) return dense_scores(*d, chains);
    if (const auto* f = std::get_if<factored::FactoredMPS>(&m))
        return dense_scores(factored::to_dense(*f), chains);
    const auto& p = std::get<mlp::MlpModel>(m);
    std::vector<double> out;
    out.reserve(chains.size());
    for (const Chain& c : chains) out.push_back(mlp::mlp_forward(p, c));
    return out;
}

MetricsRecord evaluate(const Model& m, int n,
                       const std::vector<Chain>* train_valid_chains,
                       std::uint64_t seed) {
    MetricsRecord rec;
    rec.seed = seed;
    const std::vector<Chain> valid = motzkin::enumerate_valid(n);
    const bool is_tensor = !std::holds_alternative<mlp::MlpModel>(m);

    std::optional<mps::DenseMPS> dense;
    if (const auto* d = std::get_if<mps::DenseMPS>(&m)) dense = *d;
    else if (const auto* f = std::get_if<factored::FactoredMPS>(&m))
        dense = factored::to_dense(*f);

    if (is_tensor) {
        rec.sigma_v = mps::sigma_mass(*dense, valid);
        rec.sigma_t = train_valid_chains
                          ? mps::sigma_mass(*dense, *train_valid_chains)
                          : std::numeric_limits<double>::quiet_NaN();
    } else {
        rec.sigma_v = std::numeric_limits<double>::quiet_NaN();
        rec.sigma_t = std::numeric_limits<double>::quiet_NaN();
    }

    // Negatives: exhaustive for n <= 10, else an equal-sized uniform sample.
    std::vector<Chain> negatives;
    if (n <= 10) {
        const std::uint64_t total = motzkin::pow3(n);
        negatives.reserve(static_cast<std::size_t>(total) - valid.size());
        for (std::uint64_t idx = 0; idx < total; ++idx) {
            Chain c = motzkin::chain_from_index(idx, n);
            if (!motzkin::is_valid(c)) negatives.push_back(std::move(c));
        }
    } else {
        Rng rng = Rng(seed).child("auc-negatives");
        negatives = sorted_chains(motzkin::sample_invalid(n, valid.size(), rng));
    }

    std::vector<double> scores = score_chains(m, valid);
    std::vector<double> neg_scores = score_chains(m, negatives);
    std::vector<int> labels(scores.size(), 1);
    scores.insert(scores.end(), neg_scores.begin(), neg_scores.end());
    labels.insert(labels.end(), neg_scores.size(), 0);
    rec.auc = roc_auc(scores, labels);
    return rec;
}

double perplexity(const mps::DenseMPS& m, int n) {
    if (n > 12) throw std::invalid_argument("perplexity: n must be <= 12");
    const std::uint64_t total = motzkin::pow3(n);
    std::vector<Chain> chains;
    chains.reserve(static_cast<std::size_t>(total));
    for (std::uint64_t idx = 0; idx < total; ++idx)
        chains.push_back(motzkin::chain_from_index(idx, n));
    const std::vector<double> lps = dense_scores(m, chains);
    double h = 0.0;
    for (double lp : lps) {
        if (std::isinf(lp)) continue;  // p = 0 contributes nothing
        h -= std::exp(lp) * lp;
    }
    return std::exp(h);
}

namespace {

Model init_model(const TrainConfig& c, Rng& rng) {
    switch (c.model_kind) {
        case ModelKind::dense:
            return mps::init_dense(c.n, c.v, c.chi, c.sigma_inner, c.sigma_outer, rng);
        case ModelKind::factored:
        case ModelKind::skip: {
            const bool skip = c.model_kind == ModelKind::skip;
            if (c.random_subcore_init)
                return factored::init_factored_random(c.n, c.v, c.chi_h, c.h, c.chi_v,
                                                      skip, -0.05, 0.05, rng);
            return factored::init_factored(c.n, c.v, c.chi_h, c.h, c.chi_v, skip,
                                           c.sigma_inner, c.sigma_outer,
                                           c.sv_fill_lo, c.sv_fill_hi, rng);
        }
        case ModelKind::mlp:
            return mlp::init_mlp(c.n, c.v, c.d_e, c.d_h, rng);
    }
    throw std::logic_error("init_model: bad kind");
}

// One SGD step on one batch; returns the batch loss.
double train_step(Model& model, const std::vector<std::pair<Chain, int>>& batch,
                  const TrainConfig& c) {
    if (auto* d = std::get_if<mps::DenseMPS>(&model)) {
        mps::LossGrad lg = mps::loss_and_grad(*d, batch, c.alpha, c.norm_mode);
        for (std::size_t k = 0; k < d->cores.size(); ++k)
            sgd_step(d->cores[k], lg.grads[k], c.learning_rate);
        return lg.loss;
    }
    if (auto* f = std::get_if<factored::FactoredMPS>(&model)) {
        factored::FactoredLossGrad lg =
            factored::loss_and_grad_factored(*f, batch, c.alpha, c.norm_mode);
        for (std::size_t k = 0; k < f->cores.size(); ++k)
            for (std::size_t j = 0; j < f->cores[k].subcores.size(); ++j)
                sgd_step(f->cores[k].subcores[j], lg.grads[k][j], c.learning_rate);
        return lg.loss;
    }
    auto& p = std::get<mlp::MlpModel>(model);
    mlp::MlpLossGrad lg = mlp::mlp_loss_and_grad(p, batch);
    sgd_step(p.embedding, lg.grads.embedding, c.learning_rate);
    sgd_step(p.w1, lg.grads.w1, c.learning_rate);
    sgd_step(p.b1, lg.grads.b1, c.learning_rate);
    sgd_step(p.w2, lg.grads.w2, c.learning_rate);
    sgd_step(p.b2, lg.grads.b2, c.learning_rate);
    return lg.loss;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
    if (config.learning_rate <= 0 || config.epochs <= 0 || config.batch_size <= 0)
        throw std::invalid_argument("train: lr, epochs and batch_size must be positive");
    if (config.mu < 0.0 || config.mu > 1.0)
        throw std::invalid_argument("train: mu must be in [0, 1]");

    const auto t0 = std::chrono::steady_clock::now();
    Rng root(config.seed);
    Rng init_rng = root.child("init");

    TrainResult result;
    result.dataset = motzkin::build_dataset(config.n, config.train_fraction,
                                            config.mu, root.child("dataset").seed());
    result.model = init_model(config, init_rng);

    // Sigma_T is measured over the valid (label-1) training chains.
    std::vector<Chain> train_valid;
    for (const auto& [chain, label] : result.dataset.items)
        if (label == 1) train_valid.push_back(chain);
    train_valid = sorted_chains(std::move(train_valid));

    auto items = result.dataset.items;
    const std::size_t b = uz(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle = root.child("shuffle-epoch-" + std::to_string(epoch));
        for (std::size_t i = items.size(); i-- > 1;)
            std::swap(items[i], items[shuffle.next_below(i + 1)]);

        double loss_acc = 0.0;
        int steps = 0;
        for (std::size_t off = 0; off < items.size(); off += b) {
            const std::size_t end = std::min(off + b, items.size());
            std::vector<std::pair<Chain, int>> batch(items.begin() + off,
                                                     items.begin() + end);
            const double loss = train_step(result.model, batch, config);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << " step "
                    << steps << " (model " << model_kind_name(config.model_kind)
                    << ", seed " << config.seed << ")";
                throw std::runtime_error(msg.str());
            }
            loss_acc += loss;
            ++steps;
        }

        if ((epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs) {
            MetricsRecord rec = evaluate(result.model, config.n, &train_valid,
                                         config.seed);
            rec.epoch = epoch + 1;
            rec.train_loss = finalize_mean(loss_acc, steps);
            rec.seed = config.seed;
            // Reproducible-output convention: suppress the one nondeterministic
            // column when SOURCE_DATE_EPOCH is set.
            rec.wall_ms = std::getenv("SOURCE_DATE_EPOCH")
                              ? 0
                              : std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
            result.metrics.push_back(rec);
        }
    }
    return result;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
    std::ostringstream out;
    out << "epoch,train_loss,sigma_t,sigma_v,auc,wall_ms,seed\n";
    char buf[512];
    for (const MetricsRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%lld,%llu\n",
                      r.epoch, r.train_loss, r.sigma_t, r.sigma_v, r.auc,
                      r.wall_ms, static_cast<unsigned long long>(r.seed));
        out << buf;
    }
    return out.str();
}

SweepResult sweep(const std::vector<SweepCell>& cells,
                  const std::vector<std::uint64_t>& seeds, int jobs) {
    if (cells.empty() || seeds.empty())
        throw std::invalid_argument("sweep: empty grid or seed list");
    struct Task {
        std::size_t cell;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (std::uint64_t s : seeds) tasks.push_back({c, s});

    SweepResult result;
    result.runs.resize(tasks.size());
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next >= tasks.size()) return;
                i = next++;
            }
            const Task& t = tasks[i];
            SweepRun run;
            run.cell = cells[t.cell].name;
            run.seed = t.seed;
            try {
                TrainConfig cfg = cells[t.cell].config;
                cfg.seed = t.seed;
                TrainResult tr = train(cfg);
                run.final_record = tr.metrics.back();
                run.ok = true;
            } catch (const std::exception& e) {
                run.ok = false;
                run.error = e.what();
            }
            result.runs[i] = std::move(run);
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    for (std::size_t c = 0; c < cells.size(); ++c) {
        SweepSummary s;
        s.cell = cells[c].name;
        std::vector<double> auc, sv, st;
        for (const SweepRun& r : result.runs) {
            if (r.cell != s.cell || !r.ok) continue;
            auc.push_back(r.final_record.auc);
            sv.push_back(r.final_record.sigma_v);
            st.push_back(r.final_record.sigma_t);
        }
        auto mean_sd = [](const std::vector<double>& xs, double& mean, double& sd) {
            mean = sd = 0.0;
            if (xs.empty()) return;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            for (double x : xs) sd += (x - mean) * (x - mean);
            sd = std::sqrt(sd / static_cast<double>(xs.size()));
        };
        s.runs = static_cast<int>(auc.size());
        mean_sd(auc, s.auc_mean, s.auc_sd);
        mean_sd(sv, s.sigma_v_mean, s.sigma_v_sd);
        mean_sd(st, s.sigma_t_mean, s.sigma_t_sd);
        result.summaries.push_back(std::move(s));
    }
    return result;
}

}  // namespace tn::train
