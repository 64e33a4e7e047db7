// Experiment driver: dataset generation, training, evaluation, sweeps,
// mutual-information export, factorization inspection.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "tn/checkpoint.hpp"
#include "tn/config.hpp"
#include "tn/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tn;

namespace {

// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

train::TrainConfig resolve_config(const std::string& config_path,
                                  const std::vector<std::string>& sets) {
    train::TrainConfig config;
    try {
        if (!config_path.empty()) config = cfg::parse_config_file(config_path);
        for (const std::string& kv : sets) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            cfg::apply_key(config, kv.substr(0, eq), kv.substr(eq + 1));
        }
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    return config;
}

std::string config_echo(const train::TrainConfig& config) {
    std::ostringstream out;
    for (const auto& [key, value] : cfg::config_to_map(config))
        out << key << "=" << value << "\n";
    return out.str();
}

int effective_jobs(int jobs_flag) {
    if (jobs_flag > 0) return jobs_flag;
    if (const char* env = std::getenv("TN_JOBS")) {
        const int j = std::atoi(env);
        if (j > 0) return j;
    }
    return 1;
}

// --- data ------------------------------------------------------------------

int cmd_data(int n, double train_fraction, double mu, std::uint64_t seed,
             const std::string& out) {
    motzkin::LabeledDataset ds = motzkin::build_dataset(n, train_fraction, mu, seed);
    motzkin::write_dataset(ds, out);
    std::size_t valid = 0;
    for (const auto& [chain, label] : ds.items) valid += label;
    json side;
    side["n"] = n;
    side["train_fraction"] = train_fraction;
    side["mu"] = mu;
    side["seed"] = seed;
    side["lines"] = ds.items.size();
    side["valid_count"] = valid;
    side["invalid_count"] = ds.items.size() - valid;
    write_file(out + ".provenance.json", side.dump(2) + "\n");
    std::cout << "wrote " << ds.items.size() << " lines to " << out << "\n";
    return 0;
}

// --- train -----------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& out_dir) {
    const train::TrainConfig config = resolve_config(config_path, sets);
    fs::create_directories(out_dir);
    train::TrainResult result = train::train(config);
    write_file(out_dir + "/metrics.csv", train::metrics_csv(result.metrics));
    write_file(out_dir + "/config.resolved", config_echo(config));
    ckpt::save_checkpoint(out_dir + "/model.tnmps", result.model, config);
    const train::MetricsRecord& last = result.metrics.back();
    std::cout << "final epoch " << last.epoch << ": loss " << fmt(last.train_loss)
              << " sigma_v " << fmt(last.sigma_v) << " auc " << fmt(last.auc) << "\n";
    return 0;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const std::string& checkpoint, int n, std::uint64_t seed,
             const std::string& dataset_path, bool with_perplexity) {
    ckpt::Checkpoint ck = ckpt::load_checkpoint(checkpoint);
    if (n <= 0) n = ck.config.n;

    std::vector<motzkin::Chain> train_valid;
    if (!dataset_path.empty()) {
        motzkin::LabeledDataset ds = motzkin::read_dataset(dataset_path);
        for (const auto& [chain, label] : ds.items)
            if (label == 1) train_valid.push_back(chain);
        std::sort(train_valid.begin(), train_valid.end());
    }
    train::MetricsRecord rec = train::evaluate(
        ck.model, n, dataset_path.empty() ? nullptr : &train_valid, seed);

    json out;
    if (!dataset_path.empty()) out["sigma_t"] = rec.sigma_t;
    if (!std::holds_alternative<mlp::MlpModel>(ck.model)) out["sigma_v"] = rec.sigma_v;
    out["auc"] = rec.auc;
    if (with_perplexity) {
        if (n > 12) throw std::runtime_error("perplexity requires n <= 12");
        mps::DenseMPS dense;
        if (const auto* d = std::get_if<mps::DenseMPS>(&ck.model)) dense = *d;
        else if (const auto* f = std::get_if<factored::FactoredMPS>(&ck.model))
            dense = factored::to_dense(*f);
        else throw std::runtime_error("perplexity is defined for tensor models only");
        out["perplexity"] = train::perplexity(dense, n);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

// --- sweep -----------------------------------------------------------------

std::string json_scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return fmt(v.get<double>());
    throw UsageError("grid values must be scalars");
}

int cmd_sweep(const std::string& grid_path, const std::string& seeds_arg,
              const std::string& out_dir, int jobs_flag) {
    std::ifstream in(grid_path);
    if (!in) throw UsageError("cannot open grid file: " + grid_path);
    json grid_doc;
    try {
        in >> grid_doc;
    } catch (const std::exception& e) {
        throw UsageError(std::string("grid parse error: ") + e.what());
    }

    train::TrainConfig base;
    try {
        if (grid_doc.contains("base"))
            for (const auto& [key, value] : grid_doc["base"].items())
                cfg::apply_key(base, key, json_scalar_to_string(value));
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }

    // Cross product over grid axes, in declaration order.
    std::vector<train::SweepCell> cells{{"", base}};
    if (grid_doc.contains("grid")) {
        for (const auto& [key, values] : grid_doc["grid"].items()) {
            if (!values.is_array() || values.empty())
                throw UsageError("grid axis '" + key + "' must be a non-empty array");
            std::vector<train::SweepCell> next;
            for (const train::SweepCell& cell : cells) {
                for (const json& v : values) {
                    train::SweepCell c = cell;
                    const std::string s = json_scalar_to_string(v);
                    try {
                        cfg::apply_key(c.config, key, s);
                    } catch (const std::exception& e) {
                        throw UsageError(e.what());
                    }
                    if (!c.name.empty()) c.name += ",";
                    c.name += key + "=" + s;
                    next.push_back(std::move(c));
                }
            }
            cells = std::move(next);
        }
    }
    if (cells.size() == 1 && cells[0].name.empty()) cells[0].name = "base";

    std::vector<std::uint64_t> seeds;
    if (!seeds_arg.empty()) {
        std::istringstream ss(seeds_arg);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) seeds.push_back(std::stoull(part));
    } else if (grid_doc.contains("seeds")) {
        for (const json& s : grid_doc["seeds"]) seeds.push_back(s.get<std::uint64_t>());
    }
    if (seeds.empty()) throw UsageError("no seeds given (--seeds or grid \"seeds\")");

    train::SweepResult result = train::sweep(cells, seeds, effective_jobs(jobs_flag));

    fs::create_directories(out_dir);
    std::ostringstream runs;
    runs << "cell,seed,ok,error,epoch,train_loss,sigma_t,sigma_v,auc\n";
    for (const train::SweepRun& r : result.runs) {
        std::string err = r.error;
        for (char& c : err) if (c == ',' || c == '\n') c = ';';
        runs << '"' << r.cell << "\"," << r.seed << "," << (r.ok ? 1 : 0) << ",\""
             << err << "\"," << r.final_record.epoch << ","
             << fmt(r.final_record.train_loss) << "," << fmt(r.final_record.sigma_t)
             << "," << fmt(r.final_record.sigma_v) << "," << fmt(r.final_record.auc)
             << "\n";
    }
    write_file(out_dir + "/runs.csv", runs.str());

    json summary;
    for (const train::SweepSummary& s : result.summaries) {
        json cell;
        cell["runs"] = s.runs;
        cell["auc"] = {{"mean", s.auc_mean}, {"sd", s.auc_sd}};
        cell["sigma_v"] = {{"mean", s.sigma_v_mean}, {"sd", s.sigma_v_sd}};
        cell["sigma_t"] = {{"mean", s.sigma_t_mean}, {"sd", s.sigma_t_sd}};
        summary[s.cell] = cell;
    }
    write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
    std::cout << "ran " << result.runs.size() << " cells x seeds; outputs in "
              << out_dir << "\n";
    return 0;
}

// --- mi ----------------------------------------------------------------------

int cmd_mi(int n, const std::string& out) {
    Tensor mi = motzkin::mutual_information(n);
    Tensor mi_st = motzkin::mutual_information_stationary(n);
    std::ostringstream csv;
    csv << "i,j,mi_nats,mi_stationary_nats\n";
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const std::size_t uj = static_cast<std::size_t>(j);
            csv << i << "," << j << "," << fmt(mi.at({ui, uj})) << ","
                << fmt(mi_st.at({ui, uj})) << "\n";
        }
    if (out.empty() || out == "-") std::cout << csv.str();
    else write_file(out, csv.str());
    return 0;
}

// --- factorize ---------------------------------------------------------------

int cmd_factorize(const std::string& checkpoint, int chi_h, int height, int chi_v,
                  const std::string& report_path, const std::string& out_path,
                  std::uint64_t seed) {
    ckpt::Checkpoint ck = ckpt::load_checkpoint(checkpoint);
    const auto* dense = std::get_if<mps::DenseMPS>(&ck.model);
    if (!dense) throw std::runtime_error("factorize expects a dense-model checkpoint");
    std::size_t chi = 1;
    for (int i = 0; i < height; ++i) chi *= static_cast<std::size_t>(chi_h);
    if (static_cast<std::size_t>(dense->chi) != chi)
        throw std::runtime_error("factorize: model chi " + std::to_string(dense->chi) +
                                 " != chi_h^height " + std::to_string(chi));

    Rng rng = Rng(seed).child("factorize");
    factored::FactoredMPS f;
    f.n = dense->n;
    f.v = dense->v;
    f.chi_h = chi_h;
    f.h = height;
    f.chi_v = chi_v;
    f.skip = false;

    json report;
    report["n"] = dense->n;
    report["chi_h"] = chi_h;
    report["height"] = height;
    report["chi_v"] = chi_v;
    json cores = json::array();
    double max_err = 0.0;
    for (int k = 0; k < dense->n; ++k) {
        factored::FactoredCore core;
        core.kind = (k == 0) ? factored::PositionKind::outer_left
                  : (k == dense->n - 1) ? factored::PositionKind::outer_right
                                        : factored::PositionKind::inner;
        core.h = height;
        core.skip = false;
        core.v = dense->v;
        core.chi_h = chi_h;
        std::vector<std::vector<double>> spectra;
        core.subcores = factored::factorize_core(
            dense->cores[static_cast<std::size_t>(k)], core.kind, dense->v, chi_h,
            height, chi_v, 0.001, 0.01, rng, &spectra);

        Tensor round_trip = factored::contract_vertical(core);
        const Tensor& parent = dense->cores[static_cast<std::size_t>(k)];
        double err2 = 0.0;
        for (std::size_t i = 0; i < parent.size(); ++i) {
            const double d = round_trip[i] - parent[i];
            err2 += d * d;
        }
        const double err = std::sqrt(err2);
        max_err = std::max(max_err, err);

        json cj;
        cj["core"] = k;
        cj["splits"] = spectra;
        cj["round_trip_frobenius_error"] = err;
        cores.push_back(std::move(cj));
        f.cores.push_back(std::move(core));
    }
    report["cores"] = std::move(cores);
    report["max_round_trip_frobenius_error"] = max_err;

    if (!report_path.empty()) write_file(report_path, report.dump(2) + "\n");
    if (!out_path.empty()) {
        train::TrainConfig cfg2 = ck.config;
        cfg2.model_kind = train::ModelKind::factored;
        cfg2.chi_h = chi_h;
        cfg2.h = height;
        cfg2.chi_v = chi_v;
        ckpt::save_checkpoint(out_path, train::Model(std::move(f)), cfg2);
    }
    std::cout << "max round-trip frobenius error " << fmt(max_err) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Born-rule MPS models on Motzkin chains"};
    app.require_subcommand(1);

    // data
    auto* data = app.add_subcommand("data", "generate a labeled dataset");
    int d_n = 16;
    double d_frac = 0.25, d_mu = 1.0;
    std::uint64_t d_seed = 0;
    std::string d_out;
    data->add_option("--n", d_n, "chain length");
    data->add_option("--train-fraction", d_frac, "fraction of valid chains used");
    data->add_option("--mu", d_mu, "fraction of examples that are valid");
    data->add_option("--seed", d_seed, "random seed");
    data->add_option("--out", d_out, "output path")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model");
    std::string t_config, t_out_dir;
    std::vector<std::string> t_sets;
    tr->add_option("--config", t_config, "key=value config file");
    tr->add_option("--set", t_sets, "override, key=value (repeatable)");
    tr->add_option("--out-dir", t_out_dir, "output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string e_ck, e_dataset;
    int e_n = 0;
    std::uint64_t e_seed = 0;
    bool e_pp = false;
    ev->add_option("--checkpoint", e_ck, "checkpoint path")->required();
    ev->add_option("--n", e_n, "chain length (default: from checkpoint)");
    ev->add_option("--seed", e_seed, "seed for AUC negatives");
    ev->add_option("--dataset", e_dataset, "dataset for sigma_t");
    ev->add_flag("--perplexity", e_pp, "also report perplexity (n <= 12)");

    // sweep
    auto* sw = app.add_subcommand("sweep", "run a grid of configurations");
    std::string s_grid, s_seeds, s_out_dir;
    int s_jobs = 0;
    sw->add_option("--grid", s_grid, "grid JSON file")->required();
    sw->add_option("--seeds", s_seeds, "comma-separated seed list");
    sw->add_option("--out-dir", s_out_dir, "output directory")->required();
    sw->add_option("--jobs", s_jobs, "parallel cells (default: TN_JOBS or 1)");

    // mi
    auto* mi = app.add_subcommand("mi", "exact pairwise mutual information");
    int m_n = 16;
    std::string m_out;
    mi->add_option("--n", m_n, "chain length (<= 16)");
    mi->add_option("--out", m_out, "output CSV ('-' for stdout)");

    // factorize
    auto* fz = app.add_subcommand("factorize", "factorize a dense checkpoint");
    std::string f_ck, f_report, f_out;
    int f_chi_h = 3, f_height = 2, f_chi_v = 0;
    std::uint64_t f_seed = 0;
    fz->add_option("--checkpoint", f_ck, "dense checkpoint")->required();
    fz->add_option("--chi-h", f_chi_h, "horizontal bond");
    fz->add_option("--height", f_height, "subcores per stack");
    fz->add_option("--chi-v", f_chi_v, "vertical bond (0 = full rank)");
    fz->add_option("--report", f_report, "report JSON path");
    fz->add_option("--out", f_out, "subcore checkpoint path");
    fz->add_option("--seed", f_seed, "seed for rank extension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*data) return cmd_data(d_n, d_frac, d_mu, d_seed, d_out);
        if (*tr) return cmd_train(t_config, t_sets, t_out_dir);
        if (*ev) return cmd_eval(e_ck, e_n, e_seed, e_dataset, e_pp);
        if (*sw) return cmd_sweep(s_grid, s_seeds, s_out_dir, s_jobs);
        if (*mi) return cmd_mi(m_n, m_out);
        if (*fz) return cmd_factorize(f_ck, f_chi_h, f_height, f_chi_v, f_report,
                                      f_out, f_seed);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
