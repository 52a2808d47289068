#pragma once

#include <string>
#include <vector>

#include "tcr/rng.hpp"
#include "tcr/tape.hpp"
#include "tcr/tensor.hpp"

namespace tcr {

enum class Activation { identity, relu, sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected decoder parameters. layer_sizes runs input -> output;
// weights[i] is [in x out], biases[i] is [out].
struct MlpParams {
    std::vector<std::size_t> layer_sizes;
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    Activation hidden = Activation::relu;
    Activation output = Activation::sigmoid;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t param_count() const;

    // Weights uniform in +-1/sqrt(fan_in), biases zero.
    static MlpParams create(std::vector<std::size_t> layer_sizes, Activation hidden,
                            Activation output, const CounterRng& rng);

    std::vector<Tensor> collect() const;          // weights/biases interleaved per layer
    void assign(const std::vector<Tensor>& flat); // inverse of collect
};

// Tape handles for one step of training.
struct MlpVars {
    std::vector<Var> weights;
    std::vector<Var> biases;
};

MlpVars mlp_vars(Tape& tape, const MlpParams& p, bool trainable);

// x:[batch, d_in] -> [batch, d_out]; records the tape for backward().
Var mlp_forward(Tape& tape, const MlpParams& p, const MlpVars& vars, Var x);

// Convenience forward on a throwaway tape.
Tensor mlp_forward(const MlpParams& p, const Tensor& x);

// Checkpoint: one text header line (format version, layer sizes, activation
// kinds) followed by raw little-endian float64 weights and biases per layer.
void save_mlp(const MlpParams& p, const std::string& path);
MlpParams load_mlp(const std::string& path);

} // namespace tcr
