#include "tn/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tn::cfg {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

int parse_int(const std::string& v) {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
}

double parse_double(const std::string& v) {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
}

std::uint64_t parse_u64(const std::string& v) {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("expected a boolean");
}

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

std::string norm_mode_name(mps::NormMode mode) {
    switch (mode) {
        case mps::NormMode::exact: return "exact";
        case mps::NormMode::constant_one: return "constant_one";
        case mps::NormMode::l2_params: return "l2_params";
    }
    return "?";
}

mps::NormMode norm_mode_from_name(const std::string& name) {
    if (name == "exact") return mps::NormMode::exact;
    if (name == "constant_one") return mps::NormMode::constant_one;
    if (name == "l2_params") return mps::NormMode::l2_params;
    throw std::invalid_argument("unknown norm mode: " + name);
}

void apply_key(train::TrainConfig& c, const std::string& key, const std::string& value) {
    if (key == "model") c.model_kind = train::model_kind_from_name(value);
    else if (key == "n") c.n = parse_int(value);
    else if (key == "v") c.v = parse_int(value);
    else if (key == "chi") c.chi = parse_int(value);
    else if (key == "chi_h") c.chi_h = parse_int(value);
    else if (key == "h") c.h = parse_int(value);
    else if (key == "chi_v") c.chi_v = parse_int(value);
    else if (key == "random_subcore_init") c.random_subcore_init = parse_bool(value);
    else if (key == "d_e") c.d_e = parse_int(value);
    else if (key == "d_h") c.d_h = parse_int(value);
    else if (key == "sigma_inner") c.sigma_inner = parse_double(value);
    else if (key == "sigma_outer") c.sigma_outer = parse_double(value);
    else if (key == "sv_fill_lo") c.sv_fill_lo = parse_double(value);
    else if (key == "sv_fill_hi") c.sv_fill_hi = parse_double(value);
    else if (key == "learning_rate") c.learning_rate = parse_double(value);
    else if (key == "epochs") c.epochs = parse_int(value);
    else if (key == "batch_size") c.batch_size = parse_int(value);
    else if (key == "alpha") c.alpha = parse_double(value);
    else if (key == "norm_mode") c.norm_mode = norm_mode_from_name(value);
    else if (key == "mu") c.mu = parse_double(value);
    else if (key == "train_fraction") c.train_fraction = parse_double(value);
    else if (key == "seed") c.seed = parse_u64(value);
    else if (key == "eval_every") c.eval_every = parse_int(value);
    else throw std::invalid_argument("unknown key: " + key);
}

train::TrainConfig parse_config_text(const std::string& text, const std::string& origin,
                                     const train::TrainConfig& defaults) {
    train::TrainConfig config = defaults;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": expected key=value, got '" << line << "'";
            throw std::invalid_argument(msg.str());
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_key(config, key, value);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": " << e.what();
            throw std::invalid_argument(msg.str());
        }
    }
    return config;
}

train::TrainConfig parse_config_file(const std::string& path,
                                     const train::TrainConfig& defaults) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path, defaults);
}

std::map<std::string, std::string> config_to_map(const train::TrainConfig& c) {
    std::map<std::string, std::string> m;
    m["model"] = train::model_kind_name(c.model_kind);
    m["n"] = std::to_string(c.n);
    m["v"] = std::to_string(c.v);
    m["chi"] = std::to_string(c.chi);
    m["chi_h"] = std::to_string(c.chi_h);
    m["h"] = std::to_string(c.h);
    m["chi_v"] = std::to_string(c.chi_v);
    m["random_subcore_init"] = c.random_subcore_init ? "true" : "false";
    m["d_e"] = std::to_string(c.d_e);
    m["d_h"] = std::to_string(c.d_h);
    m["sigma_inner"] = fmt_double(c.sigma_inner);
    m["sigma_outer"] = fmt_double(c.sigma_outer);
    m["sv_fill_lo"] = fmt_double(c.sv_fill_lo);
    m["sv_fill_hi"] = fmt_double(c.sv_fill_hi);
    m["learning_rate"] = fmt_double(c.learning_rate);
    m["epochs"] = std::to_string(c.epochs);
    m["batch_size"] = std::to_string(c.batch_size);
    m["alpha"] = fmt_double(c.alpha);
    m["norm_mode"] = norm_mode_name(c.norm_mode);
    m["mu"] = fmt_double(c.mu);
    m["train_fraction"] = fmt_double(c.train_fraction);
    m["seed"] = std::to_string(c.seed);
    m["eval_every"] = std::to_string(c.eval_every);
    return m;
}

}  // namespace tn::cfg
