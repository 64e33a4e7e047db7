#include "tn/checkpoint.hpp"

#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tn/config.hpp"

namespace tn::ckpt {

namespace {

constexpr char kMagic[] = "TNMPS1\n";

struct NamedTensor {
    std::string name;
    const Tensor* tensor;
};

std::vector<NamedTensor> named_tensors(const train::Model& m) {
    std::vector<NamedTensor> out;
    if (const auto* d = std::get_if<mps::DenseMPS>(&m)) {
        for (std::size_t k = 0; k < d->cores.size(); ++k)
            out.push_back({"cores." + std::to_string(k), &d->cores[k]});
    } else if (const auto* f = std::get_if<factored::FactoredMPS>(&m)) {
        for (std::size_t k = 0; k < f->cores.size(); ++k)
            for (std::size_t j = 0; j < f->cores[k].subcores.size(); ++j)
                out.push_back({"cores." + std::to_string(k) + "." + std::to_string(j),
                               &f->cores[k].subcores[j]});
    } else {
        const auto& p = std::get<mlp::MlpModel>(m);
        out = {{"embedding", &p.embedding}, {"w1", &p.w1}, {"b1", &p.b1},
               {"w2", &p.w2}, {"b2", &p.b2}};
    }
    return out;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s;
}

std::vector<std::size_t> parse_shape(const std::string& s) {
    std::vector<std::size_t> shape;
    std::istringstream in(s);
    std::string part;
    while (std::getline(in, part, 'x')) shape.push_back(std::stoull(part));
    if (shape.empty()) throw std::runtime_error("checkpoint: empty shape string");
    return shape;
}

void write_f64_le(std::ostream& out, const double* data, std::size_t count) {
    std::vector<unsigned char> buf(count * 8);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &data[i], 8);
        for (int b = 0; b < 8; ++b)
            buf[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
}

void read_f64_le(std::istream& in, double* data, std::size_t count) {
    std::vector<unsigned char> buf(count * 8);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("checkpoint: truncated payload");
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
        std::memcpy(&data[i], &bits, 8);
    }
}

long long creation_time() {
    if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"))
        return std::strtoll(sde, nullptr, 10);
    return static_cast<long long>(std::time(nullptr));
}

const std::string& require(const std::map<std::string, std::string>& m,
                           const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw std::runtime_error("checkpoint: missing key " + key);
    return it->second;
}

factored::PositionKind position_for(std::size_t k, std::size_t n) {
    if (k == 0) return factored::PositionKind::outer_left;
    if (k + 1 == n) return factored::PositionKind::outer_right;
    return factored::PositionKind::inner;
}

}  // namespace

void save_checkpoint(const std::string& path, const train::Model& model,
                     const train::TrainConfig& config) {
    const std::vector<NamedTensor> tensors = named_tensors(model);

    std::ostringstream manifest;
    manifest << "created_unix=" << creation_time() << "\n";
    for (const auto& [key, value] : cfg::config_to_map(config))
        manifest << "config." << key << "=" << value << "\n";
    manifest << "tensors=" << tensors.size() << "\n";
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        manifest << "tensor." << i << ".name=" << tensors[i].name << "\n";
        manifest << "tensor." << i << ".shape="
                 << shape_string(tensors[i].tensor->shape()) << "\n";
    }
    const std::string body = manifest.str();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out << kMagic;
    out << "manifest_bytes=" << body.size() << "\n";
    out << body;
    for (const NamedTensor& t : tensors)
        write_f64_le(out, t.tensor->data(), t.tensor->size());
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

    std::string magic(sizeof(kMagic) - 1, '\0');
    in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
    if (!in || magic != kMagic) throw std::runtime_error("checkpoint: bad magic");

    std::string header;
    if (!std::getline(in, header) || header.rfind("manifest_bytes=", 0) != 0)
        throw std::runtime_error("checkpoint: missing manifest_bytes header");
    const std::size_t manifest_bytes = std::stoull(header.substr(15));

    std::string body(manifest_bytes, '\0');
    in.read(body.data(), static_cast<std::streamsize>(manifest_bytes));
    if (!in) throw std::runtime_error("checkpoint: truncated manifest");

    Checkpoint ck;
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("checkpoint: malformed manifest line: " + line);
        ck.manifest[line.substr(0, eq)] = line.substr(eq + 1);
    }

    for (const auto& [key, value] : ck.manifest)
        if (key.rfind("config.", 0) == 0)
            cfg::apply_key(ck.config, key.substr(7), value);

    const std::size_t count = std::stoull(require(ck.manifest, "tensors"));
    std::vector<std::string> names(count);
    std::vector<Tensor> tensors;
    tensors.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::string prefix = "tensor." + std::to_string(i) + ".";
        names[i] = require(ck.manifest, prefix + "name");
        Tensor t(parse_shape(require(ck.manifest, prefix + "shape")));
        read_f64_le(in, t.data(), t.size());
        tensors.push_back(std::move(t));
    }

    const train::TrainConfig& c = ck.config;
    switch (c.model_kind) {
        case train::ModelKind::dense: {
            mps::DenseMPS d;
            d.n = c.n;
            d.v = c.v;
            d.chi = c.chi;
            d.cores = std::move(tensors);
            if (static_cast<int>(d.cores.size()) != d.n)
                throw std::runtime_error("checkpoint: dense core count mismatch");
            ck.model = std::move(d);
            break;
        }
        case train::ModelKind::factored:
        case train::ModelKind::skip: {
            factored::FactoredMPS f;
            f.n = c.n;
            f.v = c.v;
            f.chi_h = c.chi_h;
            f.h = c.h;
            f.chi_v = c.chi_v;
            f.skip = c.model_kind == train::ModelKind::skip;
            f.cores.resize(static_cast<std::size_t>(f.n));
            for (std::size_t k = 0; k < f.cores.size(); ++k) {
                f.cores[k].kind = position_for(k, f.cores.size());
                f.cores[k].h = f.h;
                f.cores[k].skip = f.skip;
                f.cores[k].v = f.v;
                f.cores[k].chi_h = f.chi_h;
            }
            for (std::size_t i = 0; i < count; ++i) {
                // names look like cores.<k>.<j>
                if (names[i].rfind("cores.", 0) != 0)
                    throw std::runtime_error("checkpoint: unexpected tensor " + names[i]);
                const std::string rest = names[i].substr(6);
                const std::size_t dot = rest.find('.');
                if (dot == std::string::npos)
                    throw std::runtime_error("checkpoint: unexpected tensor " + names[i]);
                const std::size_t k = std::stoull(rest.substr(0, dot));
                if (k >= f.cores.size())
                    throw std::runtime_error("checkpoint: core index out of range");
                f.cores[k].subcores.push_back(std::move(tensors[i]));
            }
            ck.model = std::move(f);
            break;
        }
        case train::ModelKind::mlp: {
            mlp::MlpModel p;
            p.n = c.n;
            p.v = c.v;
            p.d_e = c.d_e;
            p.d_h = c.d_h;
            if (count != 5)
                throw std::runtime_error("checkpoint: mlp expects 5 tensors");
            p.embedding = std::move(tensors[0]);
            p.w1 = std::move(tensors[1]);
            p.b1 = std::move(tensors[2]);
            p.w2 = std::move(tensors[3]);
            p.b2 = std::move(tensors[4]);
            ck.model = std::move(p);
            break;
        }
    }
    return ck;
}

}  // namespace tn::ckpt
