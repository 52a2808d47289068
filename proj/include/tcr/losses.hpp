#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tcr/sampling.hpp"
#include "tcr/tape.hpp"
#include "tcr/voxelgrid.hpp"

namespace tcr {

// Balance and temporal weights shared by all training stages. All sums
// inside the losses are normalized to means (per voxel, per point, per
// mapped voxel) so the weights are resolution-independent; temporal losses
// then sum over ordered frame pairs. Reductions accumulate left-to-right
// in index order, which keeps every loss bitwise reproducible and lets the
// test oracles recompute them with plain scalar loops.
struct LossWeights {
    double gamma = 0.7;     // occupied/unoccupied balance, in (0,1)
    double lambda = 0.5;    // temporal voxel consistency weight, >= 0
    double mu = 0.5;        // temporal color consistency weight, >= 0
    double clamp_eps = 1e-7; // probability floor before any log

    void validate() const;
};

// Mean over (optionally a supervised subset of) voxels of
//   -[gamma*v*log(p) + (1-gamma)*(1-v)*log(1-p)]
// with p clamped to [eps, 1-eps]. `pred` entries are occupancy reads in
// [0,1]; `gt` is binary.
Var weighted_bce_vars(Tape& tape, Var pred, const Tensor& gt, double gamma, double eps,
                      const std::vector<std::int64_t>* supervised = nullptr);

// Sum over ordered frame pairs (t,l), t != l, of the mean squared
// difference pred_t[i] - pred_l[P_tl(i)] over mapped voxels. `maps` must
// hold one correspondence per ordered pair. When `occupied_only` grids are
// given, the mean is restricted to occupied source voxels.
Var temporal_voxel_loss_vars(Tape& tape, std::span<const Var> preds,
                             std::span<const VoxelCorrespondence> maps,
                             std::span<const VoxelGrid* const> occupied_only = {});

// (1/n) sum (s_i - o_i)^2.
Var mse_loss_vars(Tape& tape, Var pred, const Tensor& labels);

// (1/n) sum_i sum_ch |c_i - label_i| (channel sum, point mean).
Var color_l1_loss_vars(Tape& tape, Var pred, const Tensor& labels);

// Sum over ordered frame pairs of the point mean of the squared color
// difference (summed over channels) at tracked positions.
Var temporal_color_loss_vars(Tape& tape, std::span<const Var> frame_preds);

// Plain-value convenience forms (throwaway tape under the hood).
double weighted_bce_voxel(const VoxelGrid& pred, const VoxelGrid& gt, double gamma,
                          double eps = 1e-7);
double temporal_voxel_loss(std::span<const VoxelGrid> preds,
                           std::span<const VoxelCorrespondence> maps);
double hybrid_geometry_loss(std::span<const double> pred, std::span<const double> labels);
double hybrid_color_loss(std::span<const Vec3> pred, std::span<const Vec3> labels);
double temporal_color_loss(std::span<const std::vector<Vec3>> frame_preds);

// L = voxel + lambda*temporal_voxel + geometry + color + mu*temporal_color
// over whichever components are present. Rejects negative weights.
struct LossComponents {
    std::optional<double> voxel_bce;
    std::optional<double> temporal_voxel;
    std::optional<double> hybrid_geometry;
    std::optional<double> hybrid_color;
    std::optional<double> temporal_color;
};

double combined_loss(const LossComponents& parts, const LossWeights& weights);

Var combined_loss_vars(Tape& tape, std::optional<Var> voxel_bce, std::optional<Var> temporal_voxel,
                       std::optional<Var> hybrid_geometry, std::optional<Var> hybrid_color,
                       std::optional<Var> temporal_color, const LossWeights& weights);

} // namespace tcr
