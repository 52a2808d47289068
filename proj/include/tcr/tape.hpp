#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tcr/tensor.hpp"

namespace tcr {

// Handle to a tape node.
struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff tape over whole tensors. Nodes are appended in
// topological order by construction, so the backward sweep is a single
// reverse pass over node ids. All reductions accumulate sequentially in
// index order, which makes every loss bitwise reproducible and lets test
// oracles recompute them with plain scalar loops.
//
// A tape is built per training step and thrown away; parameters enter as
// `param` leaves and their gradients are read back after `backward`.
class Tape {
  public:
    Var constant(Tensor v);
    Var param(Tensor v);

    const Tensor& value(Var v) const;
    double scalar(Var v) const;
    bool requires_grad(Var v) const;
    // Gradient of the last backward() target w.r.t. this node.
    const Tensor& grad(Var v) const;

    // Seeds d(loss)/d(loss)=1 and sweeps the tape in reverse creation order.
    // Rejects non-scalar losses.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

    // Elementwise; shapes must match exactly.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var add_scalar(Var a, double s);
    Var relu(Var a);
    // Output clamped to [kSigmoidFloor, 1-kSigmoidFloor] so downstream code
    // never sees an exact 0 or 1.
    Var sigmoid(Var a);
    Var log(Var a);
    Var abs(Var a);
    Var square(Var a);
    Var clamp(Var a, double lo, double hi);

    // a:[m,k] x b:[k,n] -> [m,n]; inner products accumulate over k in order.
    Var matmul(Var a, Var b);
    // a:[m,n] + row:[n] broadcast over rows.
    Var add_row(Var a, Var row);

    Var reshape(Var a, std::vector<std::size_t> shape);
    // Horizontal concatenation of [m,n_i] blocks.
    Var concat_cols(const std::vector<Var>& parts);
    Var gather_rows(Var a, std::vector<std::int64_t> rows);
    // out[r] = sum_k w[r*k_+j] * src[idx[r*k_+j]]; linear in src, with idx/w
    // held constant. Covers trilinear sampling, average pooling and
    // correspondence lookups.
    Var gather_weighted(Var src, std::vector<std::int64_t> idx, std::vector<double> w,
                        std::size_t k, std::vector<std::size_t> out_shape);

    Var sum(Var a);
    Var mean(Var a);

    static constexpr double kSigmoidFloor = 1e-15;

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_ready = false;
        std::function<void(Tape&)> back;
    };

    Var push(Tensor value, bool requires_grad, std::function<void(Tape&)> back);
    Node& node(Var v);
    const Node& node(Var v) const;
    void accumulate(Var parent, std::size_t flat_index, double amount);
    Tensor& grad_buffer(Var v);

    std::vector<Node> nodes_;
};

} // namespace tcr
