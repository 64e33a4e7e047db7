#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tn/factored.hpp"
#include "tn/mlp.hpp"
#include "tn/motzkin.hpp"
#include "tn/mps.hpp"

namespace tn::train {

using motzkin::Chain;

enum class ModelKind { dense, factored, skip, mlp };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct TrainConfig {
    ModelKind model_kind = ModelKind::dense;
    int n = 16;
    int v = 3;
    // dense
    int chi = 8;
    // factored / skip (skip defaults: h=3, chi_h=2, chi_v=4)
    int chi_h = 3;
    int h = 2;
    int chi_v = 8;
    bool random_subcore_init = false;  // negative control
    // mlp
    int d_e = 16;
    int d_h = 256;
    // init
    double sigma_inner = 0.01;
    double sigma_outer = 0.01;
    double sv_fill_lo = 0.001;
    double sv_fill_hi = 0.01;
    // optimization
    double learning_rate = 0.05;
    int epochs = 50;
    int batch_size = 32;
    double alpha = 0.0;
    mps::NormMode norm_mode = mps::NormMode::exact;
    // data
    double mu = 1.0;
    double train_fraction = 0.25;
    std::uint64_t seed = 0;
    int eval_every = 5;
};

struct MetricsRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double sigma_t = 0.0;
    double sigma_v = 0.0;
    double auc = 0.5;
    long long wall_ms = 0;
    std::uint64_t seed = 0;
};

using Model = std::variant<mps::DenseMPS, factored::FactoredMPS, mlp::MlpModel>;

/// Mutable views of every parameter tensor of a model.
std::vector<Tensor*> model_params(Model& m);
std::vector<const Tensor*> model_params(const Model& m);

/// p <- p - lr * g, elementwise.
void sgd_step(Tensor& param, const Tensor& grad, double lr);

/// Mann-Whitney AUC with average ranks for ties; values below 0.5 are
/// reported as 1 - AUC. Requires both classes present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Scores for classification: log-probability for tensor models, sigmoid
/// belief for the MLP. Tensor scores reuse shared prefixes of consecutive
/// chains, so sorted inputs evaluate fastest.
std::vector<double> score_chains(const Model& m, const std::vector<Chain>& chains);

/// Sigma_T over the valid training chains (when given), Sigma_V over all
/// valid chains, and AUC against invalid negatives (exhaustive for n <= 10,
/// else an equal-sized seeded uniform sample).
MetricsRecord evaluate(const Model& m, int n,
                       const std::vector<Chain>* train_valid_chains,
                       std::uint64_t seed);

/// exp of the model entropy over all 3^n chains. n <= 12.
double perplexity(const mps::DenseMPS& m, int n);

struct TrainResult {
    std::vector<MetricsRecord> metrics;
    Model model;
    motzkin::LabeledDataset dataset;
};

/// Deterministic SGD training; identical (config, seed) gives identical
/// metrics and parameters. Aborts with a diagnostic on non-finite loss.
TrainResult train(const TrainConfig& config);

std::string metrics_csv(const std::vector<MetricsRecord>& records);

struct SweepCell {
    std::string name;
    TrainConfig config;  // seed field is overridden per run
};

struct SweepRun {
    std::string cell;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    MetricsRecord final_record;
};

struct SweepSummary {
    std::string cell;
    int runs = 0;
    double auc_mean = 0.0, auc_sd = 0.0;
    double sigma_v_mean = 0.0, sigma_v_sd = 0.0;
    double sigma_t_mean = 0.0, sigma_t_sd = 0.0;
};

struct SweepResult {
    std::vector<SweepRun> runs;
    std::vector<SweepSummary> summaries;
};

/// Runs every (cell, seed) pair; a failing cell is recorded, not fatal.
SweepResult sweep(const std::vector<SweepCell>& cells,
                  const std::vector<std::uint64_t>& seeds, int jobs);

}  // namespace tn::train
