#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcr/encoders.hpp"
#include "tcr/losses.hpp"
#include "tcr/mlp.hpp"
#include "tcr/sampling.hpp"
#include "tcr/synthgen.hpp"

namespace tcr {

// Desk-scale training parameters. The voxel stage uses Adam, the implicit
// and color stages RMSprop; the reference rates 2.5e-4 / 1e-3 are the
// optimizer defaults and any value can be set here.
struct TrainConfig {
    int clip_frames = 3; // N
    std::uint64_t seed = 1;
    LossWeights weights;
    EncoderConfig encoder;

    int voxel_steps = 400;
    double voxel_lr = 0.05;

    std::size_t n_points = 10000;   // occupancy samples per frame
    double sigma_factor = 0.05;     // sigma = factor * mesh bbox diagonal
    double uniform_fraction = 0.1;  // far-field fraction of n_points
    int implicit_steps = 2500;
    int batch_size = 512;
    double implicit_lr = 1e-3;
    std::vector<std::size_t> hidden = {128, 64, 32};

    std::size_t m_points = 4000; // color samples (tracked from frame 0)
    int color_steps = 1500;
    double color_lr = 1e-3;
    std::vector<std::size_t> color_hidden = {128, 64, 32};

    long decay_interval = 0; // optimizer steps between lr decays, 0 = off
    double decay_factor = 0.1;

    bool teacher_force_gt = false; // feed GT grids instead of predictions
    bool tc_occupied_only = false; // temporal voxel loss on occupied sources
    int eval_resolution = 0;       // 0 = twice the dataset voxel resolution

    void validate(int sequence_frames) const;
};

// Per-frame trainable logit grids; occupancy is the sigmoid read.
struct VoxelPredictor {
    VoxelGrid layout; // geometry only, values unused
    std::vector<Tensor> logits;

    int frames() const { return static_cast<int>(logits.size()); }
    VoxelGrid occupancy_grid(int frame) const;
};

// Per-frame masks; 1 marks a voxel whose ground-truth supervision is
// withheld from the BCE term (used for the occlusion experiments).
using SupervisionMasks = std::vector<std::vector<std::uint8_t>>;

struct VoxelFitResult {
    VoxelPredictor predictor;
    std::vector<double> total_history;
    std::vector<double> bce_history;
    std::vector<double> tc_history;
    std::vector<VoxelCorrespondence> correspondences; // all ordered pairs
};

// Jointly optimizes the clip's logit grids under
// sum_t BCE_t + lambda * L_TC. Aborts with NumericError naming the step on
// NaN or divergence.
VoxelFitResult fit_voxel_stage(const Sequence& sequence, const TrainConfig& config,
                               const SupervisionMasks* withheld = nullptr);

double decode_occupancy(const MlpParams& decoder, const FrameEncoder& encoder, const Vec3& X);
std::vector<double> decode_occupancy_batch(const MlpParams& decoder, const FrameEncoder& encoder,
                                           std::span<const Vec3> points);

Vec3 decode_color(const MlpParams& decoder, const FrameEncoder& encoder, const Vec3& X);
std::vector<Vec3> decode_color_batch(const MlpParams& decoder, const FrameEncoder& encoder,
                                     std::span<const Vec3> points);

struct ImplicitTrainResult {
    MlpParams decoder;
    std::vector<double> loss_history;
    double holdout_accuracy = 0;
    std::size_t holdout_count = 0;
};

// Trains the occupancy decoder on surface-biased point samples with
// features from the predicted (or teacher-forced) voxel grids.
ImplicitTrainResult train_implicit_stage(const Sequence& sequence,
                                         const VoxelPredictor& predictor,
                                         const TrainConfig& config);

// The color stage's shape input: the occupancy decoder densified at the
// dataset voxel centers (or the GT grid under teacher forcing).
VoxelGrid densify_occupancy(const Sequence& sequence, int frame, const VoxelPredictor& predictor,
                            const MlpParams& occ_decoder, const TrainConfig& config);

struct ColorTrainResult {
    MlpParams decoder;
    std::vector<double> total_history;
    std::vector<double> hybrid_history;
    std::vector<double> temporal_history;
    SampleSet samples; // tracked color samples used for training
};

// Per-frame, per-sample-point mask; 1 = supervised in that frame.
using ColorSupervision = std::vector<std::vector<std::uint8_t>>;

ColorTrainResult train_color_stage(const Sequence& sequence, const VoxelPredictor& predictor,
                                   const MlpParams& occ_decoder, const TrainConfig& config,
                                   const ColorSupervision* supervision = nullptr);

struct ReconResult {
    TriMesh mesh; // predicted per-vertex colors when a color decoder is given
    VoxelGrid occupancy; // dense prediction at eval resolution
    bool empty_surface = false;
    double chamfer_cm = -1.0; // vs GT mesh, point-to-point over 10k samples
    double iou = -1.0;        // predicted occupancy binarized at GT layout
};

// Dense occupancy evaluation -> marching cubes at iso 0.5 -> per-vertex
// color decoding; metrics against the frame's ground truth.
ReconResult reconstruct(const Sequence& sequence, int frame, const VoxelPredictor& predictor,
                        const MlpParams& occ_decoder, const MlpParams* color_decoder,
                        const TrainConfig& config);

struct FlickerScore {
    double occupancy = 0; // mean per-point variance across frames
    double color = 0;     // mean per-point channel-summed variance
};

// Pure core: population variance across frames at corresponded points.
FlickerScore flicker_score(std::span<const std::vector<double>> occupancy_per_frame,
                           std::span<const std::vector<Vec3>> color_per_frame);

// Probes the trained models at tracked GT-surface points: occupancy via
// trilinear reads of the predictor grids, color via the color decoder on
// its per-frame encoders (both decoders optional; color probing needs the
// occupancy decoder to densify the color-stage shape input).
FlickerScore flicker_probe(const Sequence& sequence, const VoxelPredictor& predictor,
                           const MlpParams* occ_decoder, const MlpParams* color_decoder,
                           const TrainConfig& config, std::size_t n_points, std::uint64_t seed);

} // namespace tcr
