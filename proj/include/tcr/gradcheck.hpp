#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tcr/tape.hpp"
#include "tcr/tensor.hpp"

namespace tcr {

// Builds a scalar loss from parameter leaves; must be deterministic.
using TapeLossFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_tensor = 0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    std::size_t coords_checked = 0;

    bool ok(double tolerance) const { return max_rel_error < tolerance; }
};

// Optional coordinate subset: pairs of (tensor index, flat element index).
// Empty means every coordinate of every tensor.
using CoordList = std::vector<std::pair<std::size_t, std::size_t>>;

// Compares tape gradients against central finite differences
// (loss(p+h)-loss(p-h))/(2h). Relative error uses max(|analytic|,|numeric|)
// as denominator; coordinates where both magnitudes sit below the
// central-difference rounding floor (1e-6) count as exact.
// Reports the worst coordinate, never throws on disagreement.
GradCheckResult finite_diff_check(const std::vector<Tensor>& params, const TapeLossFn& loss_fn,
                                  double h = 1e-5, const CoordList& coords = {});

// Comparison layer of finite_diff_check, with the candidate gradients
// supplied by the caller instead of computed from the tape.
GradCheckResult compare_gradients(const std::vector<Tensor>& candidate,
                                  const std::vector<Tensor>& params, const TapeLossFn& loss_fn,
                                  double h = 1e-5, const CoordList& coords = {});

// Deterministic random coordinate subset, at least `per_tensor` coordinates
// from each parameter tensor (all of them when the tensor is small).
CoordList sample_coords(const std::vector<Tensor>& params, std::size_t per_tensor,
                        std::uint64_t seed);

} // namespace tcr
