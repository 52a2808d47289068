#include "tcr/mlp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tcr/error.hpp"

namespace tcr {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw IoError("unknown activation kind: " + name);
}

std::size_t MlpParams::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i)
        n += layer_sizes[i] * layer_sizes[i + 1] + layer_sizes[i + 1];
    return n;
}

MlpParams MlpParams::create(std::vector<std::size_t> sizes, Activation hidden,
                            Activation output, const CounterRng& rng) {
    if (sizes.size() < 2) throw ShapeError("mlp needs at least input and output sizes");
    MlpParams p;
    p.layer_sizes = std::move(sizes);
    p.hidden = hidden;
    p.output = output;
    std::uint64_t counter = 0;
    for (std::size_t i = 0; i + 1 < p.layer_sizes.size(); ++i) {
        std::size_t in = p.layer_sizes[i], out = p.layer_sizes[i + 1];
        Tensor w({in, out});
        double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (double& v : w.data) v = rng.uniform(counter++, -bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Tensor({out}));
    }
    return p;
}

std::vector<Tensor> MlpParams::collect() const {
    std::vector<Tensor> flat;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        flat.push_back(weights[i]);
        flat.push_back(biases[i]);
    }
    return flat;
}

void MlpParams::assign(const std::vector<Tensor>& flat) {
    if (flat.size() != 2 * weights.size()) throw ShapeError("mlp assign: wrong tensor count");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = flat[2 * i];
        biases[i] = flat[2 * i + 1];
    }
}

MlpVars mlp_vars(Tape& tape, const MlpParams& p, bool trainable) {
    MlpVars v;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        v.weights.push_back(trainable ? tape.param(p.weights[i]) : tape.constant(p.weights[i]));
        v.biases.push_back(trainable ? tape.param(p.biases[i]) : tape.constant(p.biases[i]));
    }
    return v;
}

namespace {

Var apply_activation(Tape& tape, Var x, Activation a) {
    switch (a) {
        case Activation::identity: return x;
        case Activation::relu: return tape.relu(x);
        case Activation::sigmoid: return tape.sigmoid(x);
    }
    return x;
}

} // namespace

Var mlp_forward(Tape& tape, const MlpParams& p, const MlpVars& vars, Var x) {
    const Tensor& vx = tape.value(x);
    if (vx.rank() != 2 || vx.shape[1] != p.input_size())
        throw ShapeError("mlp forward: input " + vx.shape_str() + " does not match layer size " +
                         std::to_string(p.input_size()));
    Var h = x;
    for (std::size_t i = 0; i < vars.weights.size(); ++i) {
        h = tape.add_row(tape.matmul(h, vars.weights[i]), vars.biases[i]);
        bool last = (i + 1 == vars.weights.size());
        h = apply_activation(tape, h, last ? p.output : p.hidden);
    }
    return h;
}

Tensor mlp_forward(const MlpParams& p, const Tensor& x) {
    Tape tape;
    Var xv = tape.constant(x);
    MlpVars vars = mlp_vars(tape, p, false);
    return tape.value(mlp_forward(tape, p, vars, xv));
}

void save_mlp(const MlpParams& p, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    std::ostringstream header;
    header << "tcr-mlp 1 layers";
    for (std::size_t s : p.layer_sizes) header << " " << s;
    header << " hidden " << activation_name(p.hidden) << " output " << activation_name(p.output)
           << "\n";
    f << header.str();
    auto write_tensor = [&f](const Tensor& t) {
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    };
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        write_tensor(p.weights[i]);
        write_tensor(p.biases[i]);
    }
    if (!f) throw IoError("write failed: " + path);
}

MlpParams load_mlp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("missing header: " + path);
    std::istringstream hs(line);
    std::string magic;
    int version = 0;
    hs >> magic >> version;
    if (magic != "tcr-mlp" || version != 1)
        throw IoError("checkpoint version mismatch in " + path + ": '" + line + "'");
    std::string tok;
    hs >> tok;
    if (tok != "layers") throw IoError("malformed checkpoint header: " + path);
    MlpParams p;
    while (hs >> tok) {
        if (tok == "hidden") break;
        p.layer_sizes.push_back(static_cast<std::size_t>(std::stoull(tok)));
    }
    std::string hidden_name, output_name;
    hs >> hidden_name >> tok >> output_name;
    if (tok != "output" || p.layer_sizes.size() < 2)
        throw IoError("malformed checkpoint header: " + path);
    p.hidden = activation_from_name(hidden_name);
    p.output = activation_from_name(output_name);
    auto read_tensor = [&f, &path](std::vector<std::size_t> shape) {
        Tensor t(std::move(shape));
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!f) throw IoError("truncated checkpoint: " + path);
        return t;
    };
    for (std::size_t i = 0; i + 1 < p.layer_sizes.size(); ++i) {
        p.weights.push_back(read_tensor({p.layer_sizes[i], p.layer_sizes[i + 1]}));
        p.biases.push_back(read_tensor({p.layer_sizes[i + 1]}));
    }
    return p;
}

} // namespace tcr
