#pragma once

#include <vector>

#include "tcr/tensor.hpp"

namespace tcr {

enum class OptKind { adam, rmsprop };

// Adam / RMSprop with an optional step-decay schedule: the learning rate is
// multiplied by decay_factor every decay_interval steps (0 disables decay).
struct OptimState {
    OptKind kind = OptKind::adam;
    double lr = 2.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double rms_decay = 0.99;
    double eps = 1e-8;
    double decay_factor = 0.1;
    long decay_interval = 0;
    long step_count = 0;

    std::vector<Tensor> m; // first moment (adam) / square average (rmsprop)
    std::vector<Tensor> v; // second moment (adam only)

    static OptimState adam(double lr = 2.5e-4);
    static OptimState rmsprop(double lr = 1e-3);

    void init(const std::vector<Tensor>& params);

    // One update in place. Refuses to step when any gradient is NaN/Inf.
    void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);
};

} // namespace tcr
