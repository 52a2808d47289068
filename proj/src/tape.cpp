#include "tcr/tape.hpp"

#include <cmath>
#include <utility>

namespace tcr {

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw ShapeError("invalid tape variable");
    return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw ShapeError("invalid tape variable");
    return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::constant(Tensor v) { return push(std::move(v), false, nullptr); }

Var Tape::param(Tensor v) { return push(std::move(v), true, nullptr); }

const Tensor& Tape::value(Var v) const { return node(v).value; }

double Tape::scalar(Var v) const {
    const Tensor& t = node(v).value;
    if (t.numel() != 1) throw ShapeError("scalar() on tensor of shape " + t.shape_str());
    return t.data[0];
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

const Tensor& Tape::grad(Var v) const {
    const Node& n = node(v);
    if (!n.grad_ready) throw NumericError("gradient not computed; call backward first");
    return n.grad;
}

Tensor& Tape::grad_buffer(Var v) {
    Node& n = node(v);
    if (!n.grad_ready) {
        n.grad = Tensor::zeros(n.value.shape);
        n.grad_ready = true;
    }
    return n.grad;
}

void Tape::accumulate(Var parent, std::size_t flat_index, double amount) {
    grad_buffer(parent).data[flat_index] += amount;
}

void Tape::backward(Var loss) {
    const Node& ln = node(loss);
    if (ln.value.numel() != 1)
        throw ShapeError("backward requires a scalar loss, got " + ln.value.shape_str());
    for (Node& n : nodes_) {
        n.grad_ready = false;
        n.grad = Tensor();
    }
    grad_buffer(loss).data[0] = 1.0;
    for (std::int32_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.requires_grad && n.grad_ready && n.back) n.back(*this);
    }
    // Leaves that never received a contribution still report a zero gradient.
    for (std::int32_t id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.requires_grad && !n.grad_ready) grad_buffer(Var{id});
    }
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
}

} // namespace

Var Tape::add(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_shape(va, vb, "add");
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] + vb.data[i];
    bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, [a, b, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_shape(va, vb, "sub");
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] - vb.data[i];
    bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, [a, b, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] -= g.data[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    check_same_shape(va, vb, "mul");
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] * vb.data[i];
    bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg, [a, b, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
        const Tensor& g = t.grad(self);
        const Tensor& va2 = t.value(a);
        const Tensor& vb2 = t.value(b);
        if (t.requires_grad(a)) {
            Tensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * vb2.data[i];
        }
        if (t.requires_grad(b)) {
            Tensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.numel(); ++i) gb.data[i] += g.data[i] * va2.data[i];
        }
    });
}

Var Tape::scale(Var a, double s) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] * s;
    return push(std::move(out), requires_grad(a),
                [a, s, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * s;
                });
}

Var Tape::add_scalar(Var a, double s) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] + s;
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
                });
}

Var Tape::relu(Var a) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] > 0.0 ? va.data[i] : 0.0;
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& va2 = t.value(a);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        if (va2.data[i] > 0.0) ga.data[i] += g.data[i];
                });
}

Var Tape::sigmoid(Var a) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double y = 1.0 / (1.0 + std::exp(-va.data[i]));
        if (y < kSigmoidFloor) y = kSigmoidFloor;
        if (y > 1.0 - kSigmoidFloor) y = 1.0 - kSigmoidFloor;
        out.data[i] = y;
    }
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& y = t.value(self);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        ga.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
                });
}

Var Tape::log(Var a) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::log(va.data[i]);
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& va2 = t.value(a);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        ga.data[i] += g.data[i] / va2.data[i];
                });
}

Var Tape::abs(Var a) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = std::abs(va.data[i]);
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& va2 = t.value(a);
                    Tensor& ga = t.grad_buffer(a);
                    // Subgradient 0 at the kink.
                    for (std::size_t i = 0; i < g.numel(); ++i) {
                        double s = va2.data[i] > 0.0 ? 1.0 : (va2.data[i] < 0.0 ? -1.0 : 0.0);
                        ga.data[i] += g.data[i] * s;
                    }
                });
}

Var Tape::square(Var a) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = va.data[i] * va.data[i];
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& va2 = t.value(a);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        ga.data[i] += g.data[i] * 2.0 * va2.data[i];
                });
}

Var Tape::clamp(Var a, double lo, double hi) {
    const Tensor& va = value(a);
    Tensor out(va.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) {
        double v = va.data[i];
        out.data[i] = v < lo ? lo : (v > hi ? hi : v);
    }
    return push(std::move(out), requires_grad(a),
                [a, lo, hi, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& va2 = t.value(a);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i)
                        if (va2.data[i] > lo && va2.data[i] < hi) ga.data[i] += g.data[i];
                });
}

Var Tape::matmul(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    if (va.rank() != 2 || vb.rank() != 2 || va.shape[1] != vb.shape[0])
        throw ShapeError("matmul: incompatible shapes " + va.shape_str() + " x " + vb.shape_str());
    std::size_t m = va.shape[0], k = va.shape[1], n = vb.shape[1];
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += va.data[i * k + kk] * vb.data[kk * n + j];
            out.data[i * n + j] = acc;
        }
    bool rg = requires_grad(a) || requires_grad(b);
    return push(std::move(out), rg,
                [a, b, m, k, n, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    const Tensor& va2 = t.value(a);
                    const Tensor& vb2 = t.value(b);
                    if (t.requires_grad(a)) {
                        Tensor& ga = t.grad_buffer(a); // g * b^T
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t kk = 0; kk < k; ++kk) {
                                double acc = 0.0;
                                for (std::size_t j = 0; j < n; ++j)
                                    acc += g.data[i * n + j] * vb2.data[kk * n + j];
                                ga.data[i * k + kk] += acc;
                            }
                    }
                    if (t.requires_grad(b)) {
                        Tensor& gb = t.grad_buffer(b); // a^T * g
                        for (std::size_t kk = 0; kk < k; ++kk)
                            for (std::size_t j = 0; j < n; ++j) {
                                double acc = 0.0;
                                for (std::size_t i = 0; i < m; ++i)
                                    acc += va2.data[i * k + kk] * g.data[i * n + j];
                                gb.data[kk * n + j] += acc;
                            }
                    }
                });
}

Var Tape::add_row(Var a, Var row) {
    const Tensor &va = value(a), &vr = value(row);
    if (va.rank() != 2 || vr.numel() != va.shape[1])
        throw ShapeError("add_row: " + va.shape_str() + " + " + vr.shape_str());
    std::size_t m = va.shape[0], n = va.shape[1];
    Tensor out(va.shape);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] = va.data[i * n + j] + vr.data[j];
    bool rg = requires_grad(a) || requires_grad(row);
    return push(std::move(out), rg,
                [a, row, m, n, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    if (t.requires_grad(a)) {
                        Tensor& ga = t.grad_buffer(a);
                        for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
                    }
                    if (t.requires_grad(row)) {
                        Tensor& gr = t.grad_buffer(row);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) gr.data[j] += g.data[i * n + j];
                    }
                });
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
    const Tensor& va = value(a);
    if (Tensor::count(shape) != va.numel())
        throw ShapeError("reshape: element count mismatch");
    Tensor out(std::move(shape), va.data);
    return push(std::move(out), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i];
                });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    std::size_t m = value(parts[0]).shape[0], total = 0;
    bool rg = false;
    for (Var p : parts) {
        const Tensor& v = value(p);
        if (v.rank() != 2 || v.shape[0] != m)
            throw ShapeError("concat_cols: row mismatch");
        total += v.shape[1];
        rg = rg || requires_grad(p);
    }
    Tensor out({m, total});
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& v = value(p);
        std::size_t n = v.shape[1];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) out.data[i * total + (off + j)] = v.data[i * n + j];
        off += n;
    }
    return push(std::move(out), rg,
                [parts, m, total, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    std::size_t off2 = 0;
                    for (Var p : parts) {
                        std::size_t n = t.value(p).shape[1];
                        if (t.requires_grad(p)) {
                            Tensor& gp = t.grad_buffer(p);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < n; ++j)
                                    gp.data[i * n + j] += g.data[i * total + (off2 + j)];
                        }
                        off2 += n;
                    }
                });
}

Var Tape::gather_rows(Var a, std::vector<std::int64_t> rows) {
    const Tensor& va = value(a);
    if (va.rank() != 2) throw ShapeError("gather_rows: rank-2 input required");
    std::size_t n = va.shape[1];
    for (std::int64_t r : rows)
        if (r < 0 || static_cast<std::size_t>(r) >= va.shape[0])
            throw ShapeError("gather_rows: row index out of range");
    Tensor out({rows.size(), n});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.data[i * n + j] = va.data[static_cast<std::size_t>(rows[i]) * n + j];
    return push(std::move(out), requires_grad(a),
                [a, rows = std::move(rows), n, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < rows.size(); ++i)
                        for (std::size_t j = 0; j < n; ++j)
                            ga.data[static_cast<std::size_t>(rows[i]) * n + j] += g.data[i * n + j];
                });
}

Var Tape::gather_weighted(Var src, std::vector<std::int64_t> idx, std::vector<double> w,
                          std::size_t k, std::vector<std::size_t> out_shape) {
    const Tensor& vs = value(src);
    std::size_t r = Tensor::count(out_shape);
    if (k == 0 || idx.size() != r * k || w.size() != r * k)
        throw ShapeError("gather_weighted: index/weight layout mismatch");
    for (std::int64_t i : idx)
        if (i < 0 || static_cast<std::size_t>(i) >= vs.numel())
            throw ShapeError("gather_weighted: source index out of range");
    Tensor out(std::move(out_shape));
    for (std::size_t i = 0; i < r; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j)
            acc += w[i * k + j] * vs.data[static_cast<std::size_t>(idx[i * k + j])];
        out.data[i] = acc;
    }
    return push(std::move(out), requires_grad(src),
                [src, idx = std::move(idx), w = std::move(w), k, r,
                 self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    const Tensor& g = t.grad(self);
                    Tensor& gs = t.grad_buffer(src);
                    for (std::size_t i = 0; i < r; ++i)
                        for (std::size_t j = 0; j < k; ++j)
                            gs.data[static_cast<std::size_t>(idx[i * k + j])] +=
                                g.data[i] * w[i * k + j];
                });
}

Var Tape::sum(Var a) {
    const Tensor& va = value(a);
    double acc = 0.0;
    for (std::size_t i = 0; i < va.numel(); ++i) acc += va.data[i];
    return push(Tensor::scalar(acc), requires_grad(a),
                [a, self = Var{(std::int32_t)nodes_.size()}](Tape& t) {
                    double g = t.grad(self).data[0];
                    Tensor& ga = t.grad_buffer(a);
                    for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g;
                });
}

Var Tape::mean(Var a) {
    std::size_t n = value(a).numel();
    if (n == 0) throw ShapeError("mean of empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(n));
}

} // namespace tcr
