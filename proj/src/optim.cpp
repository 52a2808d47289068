#include "tcr/optim.hpp"

#include <cmath>

#include "tcr/error.hpp"

namespace tcr {

OptimState OptimState::adam(double lr) {
    OptimState s;
    s.kind = OptKind::adam;
    s.lr = lr;
    return s;
}

OptimState OptimState::rmsprop(double lr) {
    OptimState s;
    s.kind = OptKind::rmsprop;
    s.lr = lr;
    return s;
}

void OptimState::init(const std::vector<Tensor>& params) {
    m.clear();
    v.clear();
    for (const Tensor& p : params) {
        m.push_back(Tensor::zeros(p.shape));
        if (kind == OptKind::adam) v.push_back(Tensor::zeros(p.shape));
    }
    step_count = 0;
}

void OptimState::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
    if (lr <= 0.0) throw NumericError("optimizer learning rate must be positive");
    if (params.size() != grads.size() || params.size() != m.size())
        throw ShapeError("optimizer: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].same_shape(grads[i]))
            throw ShapeError("optimizer: gradient shape mismatch at tensor " + std::to_string(i));
        if (!grads[i].all_finite())
            throw NumericError("optimizer step refused: non-finite gradient in tensor " +
                               std::to_string(i));
    }

    ++step_count;
    if (kind == OptKind::adam) {
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = params[i];
            const Tensor& g = grads[i];
            for (std::size_t j = 0; j < p.numel(); ++j) {
                m[i].data[j] = beta1 * m[i].data[j] + (1.0 - beta1) * g.data[j];
                v[i].data[j] = beta2 * v[i].data[j] + (1.0 - beta2) * g.data[j] * g.data[j];
                double mhat = m[i].data[j] / bc1;
                double vhat = v[i].data[j] / bc2;
                p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    } else {
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = params[i];
            const Tensor& g = grads[i];
            for (std::size_t j = 0; j < p.numel(); ++j) {
                m[i].data[j] = rms_decay * m[i].data[j] + (1.0 - rms_decay) * g.data[j] * g.data[j];
                p.data[j] -= lr * g.data[j] / (std::sqrt(m[i].data[j]) + eps);
            }
        }
    }

    if (decay_interval > 0 && step_count % decay_interval == 0) lr *= decay_factor;
}

} // namespace tcr
