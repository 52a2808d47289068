#include "tcr/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "tcr/error.hpp"
#include "tcr/geometry.hpp"
#include "tcr/marching_cubes.hpp"
#include "tcr/metrics.hpp"
#include "tcr/optim.hpp"
#include "tcr/rng.hpp"

namespace tcr {

void TrainConfig::validate(int sequence_frames) const {
    weights.validate();
    if (clip_frames < 1) throw ConfigError("clip_frames must be >= 1");
    if (clip_frames > sequence_frames)
        throw ConfigError("clip_frames exceeds the dataset frame count");
    if ((weights.lambda > 0 || weights.mu > 0) && clip_frames < 2)
        throw ConfigError("temporal losses require at least 2 clip frames");
    if (voxel_steps < 1 || implicit_steps < 1 || color_steps < 1)
        throw ConfigError("step counts must be >= 1");
    if (n_points < 1 || m_points < 1) throw ConfigError("sample counts must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (sigma_factor < 0) throw ConfigError("sigma_factor must be >= 0");
    if (uniform_fraction < 0 || uniform_fraction > 0.5)
        throw ConfigError("uniform_fraction must be in [0, 0.5]");
    if (voxel_lr <= 0 || implicit_lr <= 0 || color_lr <= 0)
        throw ConfigError("learning rates must be positive");
}

VoxelGrid VoxelPredictor::occupancy_grid(int frame) const {
    VoxelGrid g = layout;
    g.value_type = GridValueType::occupancy;
    const Tensor& l = logits[frame];
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        double y = 1.0 / (1.0 + std::exp(-l.data[i]));
        if (y < Tape::kSigmoidFloor) y = Tape::kSigmoidFloor;
        if (y > 1.0 - Tape::kSigmoidFloor) y = 1.0 - Tape::kSigmoidFloor;
        g.values[i] = y;
    }
    return g;
}

namespace {

void check_divergence(double loss, double initial, int step, const char* stage) {
    if (!std::isfinite(loss))
        throw NumericError(std::string(stage) + " loss is not finite at step " +
                           std::to_string(step));
    if (loss > 50.0 * std::max(initial, 1e-9) && loss > 1.0)
        throw NumericError(std::string(stage) + " diverged at step " + std::to_string(step));
}

} // namespace

VoxelFitResult fit_voxel_stage(const Sequence& sequence, const TrainConfig& config,
                               const SupervisionMasks* withheld) {
    config.validate(sequence.frame_count());
    int n = config.clip_frames;
    const VoxelGrid& layout = sequence.frames[0].gt_voxels;
    for (int f = 1; f < n; ++f)
        if (!sequence.frames[f].gt_voxels.same_layout(layout))
            throw ShapeError("fit_voxel_stage: frame voxel layouts differ");
    if (withheld) {
        if (static_cast<int>(withheld->size()) != n)
            throw ShapeError("fit_voxel_stage: one supervision mask per clip frame required");
        for (const auto& m : *withheld)
            if (m.size() != layout.count())
                throw ShapeError("fit_voxel_stage: mask size does not match grid");
    }

    VoxelFitResult result;
    result.predictor.layout = layout;
    result.predictor.layout.value_type = GridValueType::logits;
    for (int f = 0; f < n; ++f)
        result.predictor.logits.push_back(Tensor::zeros({layout.count()}));

    bool temporal = config.weights.lambda > 0.0 && n >= 2;
    if (temporal)
        for (int t = 0; t < n; ++t)
            for (int l = 0; l < n; ++l)
                if (t != l)
                    result.correspondences.push_back(
                        voxel_correspondence(sequence, t, l, layout.res[0]));

    // Supervised index subsets (everything not withheld).
    std::vector<std::vector<std::int64_t>> supervised(n);
    for (int f = 0; f < n; ++f) {
        supervised[f].reserve(layout.count());
        for (std::size_t i = 0; i < layout.count(); ++i)
            if (!withheld || !(*withheld)[f][i])
                supervised[f].push_back(static_cast<std::int64_t>(i));
    }

    std::vector<const VoxelGrid*> occupied_ref;
    if (config.tc_occupied_only)
        for (int f = 0; f < n; ++f) occupied_ref.push_back(&sequence.frames[f].gt_voxels);

    OptimState opt = OptimState::adam(config.voxel_lr);
    opt.decay_interval = config.decay_interval;
    opt.decay_factor = config.decay_factor;
    opt.init(result.predictor.logits);

    double initial_loss = -1.0;
    for (int step = 0; step < config.voxel_steps; ++step) {
        Tape tape;
        std::vector<Var> logit_vars, preds;
        for (int f = 0; f < n; ++f) {
            logit_vars.push_back(tape.param(result.predictor.logits[f]));
            preds.push_back(tape.sigmoid(logit_vars[f]));
        }
        Var bce;
        for (int f = 0; f < n; ++f) {
            Var term = weighted_bce_vars(tape, preds[f],
                                         Tensor({layout.count()},
                                                sequence.frames[f].gt_voxels.values),
                                         config.weights.gamma, config.weights.clamp_eps,
                                         &supervised[f]);
            bce = bce.valid() ? tape.add(bce, term) : term;
        }
        std::optional<Var> tc;
        if (temporal)
            tc = temporal_voxel_loss_vars(tape, preds, result.correspondences,
                                          config.tc_occupied_only
                                              ? std::span<const VoxelGrid* const>(occupied_ref)
                                              : std::span<const VoxelGrid* const>{});
        Var loss = combined_loss_vars(tape, bce, tc, {}, {}, {}, config.weights);

        double total = tape.scalar(loss);
        if (initial_loss < 0) initial_loss = total;
        check_divergence(total, initial_loss, step, "voxel stage");
        result.total_history.push_back(total);
        result.bce_history.push_back(tape.scalar(bce));
        result.tc_history.push_back(tc ? tape.scalar(*tc) : 0.0);

        tape.backward(loss);
        std::vector<Tensor> grads;
        for (Var v : logit_vars) grads.push_back(tape.grad(v));
        opt.step(result.predictor.logits, grads);
    }
    return result;
}

double decode_occupancy(const MlpParams& decoder, const FrameEncoder& encoder, const Vec3& X) {
    return decode_occupancy_batch(decoder, encoder, std::span<const Vec3>(&X, 1))[0];
}

std::vector<double> decode_occupancy_batch(const MlpParams& decoder, const FrameEncoder& encoder,
                                           std::span<const Vec3> points) {
    if (decoder.input_size() != static_cast<std::size_t>(encoder.config.feature_dim()))
        throw ShapeError("decoder input size " + std::to_string(decoder.input_size()) +
                         " does not match the encoder feature dimension " +
                         std::to_string(encoder.config.feature_dim()));
    std::vector<double> out(points.size());
    const std::size_t chunk = 8192;
    for (std::size_t start = 0; start < points.size(); start += chunk) {
        std::size_t count = std::min(chunk, points.size() - start);
        Tensor feats = encoder.assemble(points.subspan(start, count));
        Tensor s = mlp_forward(decoder, feats);
        for (std::size_t i = 0; i < count; ++i) out[start + i] = s.data[i];
    }
    return out;
}

Vec3 decode_color(const MlpParams& decoder, const FrameEncoder& encoder, const Vec3& X) {
    return decode_color_batch(decoder, encoder, std::span<const Vec3>(&X, 1))[0];
}

std::vector<Vec3> decode_color_batch(const MlpParams& decoder, const FrameEncoder& encoder,
                                     std::span<const Vec3> points) {
    if (decoder.input_size() != static_cast<std::size_t>(encoder.config.feature_dim()))
        throw ShapeError("decoder input size " + std::to_string(decoder.input_size()) +
                         " does not match the encoder feature dimension " +
                         std::to_string(encoder.config.feature_dim()));
    if (decoder.output_size() != 3) throw ShapeError("color decoder must have 3 outputs");
    std::vector<Vec3> out(points.size());
    const std::size_t chunk = 8192;
    for (std::size_t start = 0; start < points.size(); start += chunk) {
        std::size_t count = std::min(chunk, points.size() - start);
        Tensor feats = encoder.assemble(points.subspan(start, count));
        Tensor c = mlp_forward(decoder, feats);
        for (std::size_t i = 0; i < count; ++i)
            out[start + i] = {c.data[3 * i], c.data[3 * i + 1], c.data[3 * i + 2]};
    }
    return out;
}

namespace {

FrameEncoder implicit_encoder(const Sequence& seq, int frame, const VoxelPredictor& predictor,
                              const TrainConfig& config) {
    if (config.teacher_force_gt)
        return FrameEncoder(seq.frames[frame].gt_voxels, seq.frames[frame].image,
                            seq.frames[frame].camera, config.encoder);
    return FrameEncoder(predictor.occupancy_grid(frame), seq.frames[frame].image,
                        seq.frames[frame].camera, config.encoder);
}

// Deterministic epoch-shuffled row order.
std::vector<std::size_t> shuffled_rows(std::size_t count, const CounterRng& rng) {
    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    for (std::size_t i = count; i > 1; --i)
        std::swap(order[i - 1], order[rng.word(i) % i]);
    return order;
}

Tensor gather_tensor_rows(const Tensor& src, std::span<const std::size_t> rows) {
    std::size_t d = src.cols();
    Tensor out({rows.size(), d});
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(src.data.begin() + rows[i] * d, src.data.begin() + (rows[i] + 1) * d,
                  out.data.begin() + i * d);
    return out;
}

} // namespace

ImplicitTrainResult train_implicit_stage(const Sequence& sequence,
                                         const VoxelPredictor& predictor,
                                         const TrainConfig& config) {
    config.validate(sequence.frame_count());
    int n_frames = config.clip_frames;
    if (!config.teacher_force_gt && predictor.frames() < n_frames)
        throw ShapeError("train_implicit_stage: predictor does not cover the clip");
    CounterRng rng(splitmix64(config.seed ^ 0xa51c0ull));

    std::size_t d = static_cast<std::size_t>(config.encoder.feature_dim());
    std::vector<Tensor> feature_blocks;
    std::vector<double> labels, holdout_labels;
    std::vector<Tensor> holdout_blocks;
    for (int f = 0; f < n_frames; ++f) {
        const TriMesh& mesh = sequence.frames[f].gt_mesh;
        double sigma = config.sigma_factor * mesh.bounds().diagonal();
        SampleSet train = sample_occupancy_points(mesh, config.n_points, sigma,
                                                  rng.stream(2 * f).seed(),
                                                  config.uniform_fraction, f);
        SampleSet hold = sample_occupancy_points(mesh, std::max<std::size_t>(config.n_points / 5, 200),
                                                 sigma, rng.stream(2 * f + 1).seed(),
                                                 config.uniform_fraction, f);
        FrameEncoder enc = implicit_encoder(sequence, f, predictor, config);
        feature_blocks.push_back(enc.assemble(train.points));
        holdout_blocks.push_back(enc.assemble(hold.points));
        for (std::int8_t o : train.occupancy) labels.push_back(static_cast<double>(o));
        for (std::int8_t o : hold.occupancy) holdout_labels.push_back(static_cast<double>(o));
    }
    std::size_t total = labels.size();
    Tensor features({total, d});
    {
        std::size_t row = 0;
        for (const Tensor& block : feature_blocks) {
            std::copy(block.data.begin(), block.data.end(), features.data.begin() + row * d);
            row += block.rows();
        }
    }

    ImplicitTrainResult result;
    std::vector<std::size_t> sizes = {d};
    for (std::size_t h : config.hidden) sizes.push_back(h);
    sizes.push_back(1);
    result.decoder = MlpParams::create(sizes, Activation::relu, Activation::sigmoid,
                                       rng.stream(1000));

    OptimState opt = OptimState::rmsprop(config.implicit_lr);
    opt.decay_interval = config.decay_interval;
    opt.decay_factor = config.decay_factor;
    std::vector<Tensor> params = result.decoder.collect();
    opt.init(params);

    std::vector<std::size_t> order = shuffled_rows(total, rng.stream(2000));
    std::size_t cursor = 0;
    double initial_loss = -1.0;
    for (int step = 0; step < config.implicit_steps; ++step) {
        std::vector<std::size_t> batch_rows;
        batch_rows.reserve(config.batch_size);
        for (int b = 0; b < config.batch_size; ++b) {
            batch_rows.push_back(order[cursor]);
            if (++cursor == total) cursor = 0;
        }
        Tensor bx = gather_tensor_rows(features, batch_rows);
        Tensor by({batch_rows.size(), 1});
        for (std::size_t i = 0; i < batch_rows.size(); ++i) by.data[i] = labels[batch_rows[i]];

        Tape tape;
        result.decoder.assign(params);
        MlpVars vars = mlp_vars(tape, result.decoder, true);
        Var pred = mlp_forward(tape, result.decoder, vars, tape.constant(bx));
        Var loss = mse_loss_vars(tape, pred, by);
        double value = tape.scalar(loss);
        if (initial_loss < 0) initial_loss = value;
        check_divergence(value, initial_loss, step, "implicit stage");
        result.loss_history.push_back(value);

        tape.backward(loss);
        std::vector<Tensor> grads;
        for (std::size_t i = 0; i < vars.weights.size(); ++i) {
            grads.push_back(tape.grad(vars.weights[i]));
            grads.push_back(tape.grad(vars.biases[i]));
        }
        opt.step(params, grads);
    }
    result.decoder.assign(params);

    // Held-out classification accuracy.
    std::size_t correct = 0;
    result.holdout_count = holdout_labels.size();
    std::size_t row = 0;
    for (const Tensor& block : holdout_blocks) {
        Tensor s = mlp_forward(result.decoder, block);
        for (std::size_t i = 0; i < block.rows(); ++i, ++row)
            correct += ((s.data[i] > 0.5) == (holdout_labels[row] > 0.5));
    }
    result.holdout_accuracy =
        result.holdout_count ? static_cast<double>(correct) / result.holdout_count : 0.0;
    return result;
}

VoxelGrid densify_occupancy(const Sequence& sequence, int frame, const VoxelPredictor& predictor,
                            const MlpParams& occ_decoder, const TrainConfig& config) {
    if (config.teacher_force_gt) {
        VoxelGrid g = sequence.frames[frame].gt_voxels;
        g.value_type = GridValueType::occupancy;
        return g;
    }
    FrameEncoder enc = implicit_encoder(sequence, frame, predictor, config);
    VoxelGrid out = predictor.layout;
    out.value_type = GridValueType::occupancy;
    std::vector<Vec3> nodes;
    nodes.reserve(out.count());
    for (int k = 0; k < out.res[2]; ++k)
        for (int j = 0; j < out.res[1]; ++j)
            for (int i = 0; i < out.res[0]; ++i) nodes.push_back(out.node_pos(i, j, k));
    out.values = decode_occupancy_batch(occ_decoder, enc, nodes);
    return out;
}

ColorTrainResult train_color_stage(const Sequence& sequence, const VoxelPredictor& predictor,
                                   const MlpParams& occ_decoder, const TrainConfig& config,
                                   const ColorSupervision* supervision) {
    config.validate(sequence.frame_count());
    int n_frames = config.clip_frames;
    CounterRng rng(splitmix64(config.seed ^ 0xc0105ull));

    ColorTrainResult result;
    result.samples = sample_color_points(sequence.frames[0].gt_mesh, config.m_points,
                                         rng.stream(0).seed(), 0);
    track_samples(result.samples, sequence);
    std::size_t m = result.samples.size();
    if (supervision) {
        if (static_cast<int>(supervision->size()) != n_frames)
            throw ShapeError("color supervision needs one mask per clip frame");
        for (const auto& mask : *supervision)
            if (mask.size() != m) throw ShapeError("color supervision mask size mismatch");
    }

    Tensor labels({m, 3});
    for (std::size_t i = 0; i < m; ++i) {
        labels.data[3 * i] = result.samples.colors[i].x;
        labels.data[3 * i + 1] = result.samples.colors[i].y;
        labels.data[3 * i + 2] = result.samples.colors[i].z;
    }

    std::size_t d = static_cast<std::size_t>(config.encoder.feature_dim());
    std::vector<Tensor> frame_features;
    for (int f = 0; f < n_frames; ++f) {
        VoxelGrid occ_field = densify_occupancy(sequence, f, predictor, occ_decoder, config);
        FrameEncoder enc(occ_field, sequence.frames[f].image, sequence.frames[f].camera,
                         config.encoder);
        frame_features.push_back(enc.assemble(result.samples.tracked[f]));
    }

    std::vector<std::size_t> sizes = {d};
    for (std::size_t h : config.color_hidden) sizes.push_back(h);
    sizes.push_back(3);
    result.decoder = MlpParams::create(sizes, Activation::relu, Activation::sigmoid,
                                       rng.stream(1000));

    OptimState opt = OptimState::rmsprop(config.color_lr);
    opt.decay_interval = config.decay_interval;
    opt.decay_factor = config.decay_factor;
    std::vector<Tensor> params = result.decoder.collect();
    opt.init(params);

    bool temporal = config.weights.mu > 0.0 && n_frames >= 2;
    std::vector<std::size_t> order = shuffled_rows(m, rng.stream(2000));
    std::size_t cursor = 0;
    double initial_loss = -1.0;
    for (int step = 0; step < config.color_steps; ++step) {
        std::vector<std::size_t> batch_rows;
        std::size_t batch = std::min<std::size_t>(config.batch_size, m);
        for (std::size_t b = 0; b < batch; ++b) {
            batch_rows.push_back(order[cursor]);
            if (++cursor == m) cursor = 0;
        }
        Tensor by = gather_tensor_rows(labels, batch_rows);

        Tape tape;
        result.decoder.assign(params);
        MlpVars vars = mlp_vars(tape, result.decoder, true);
        std::vector<Var> frame_preds;
        for (int f = 0; f < n_frames; ++f) {
            Tensor bx = gather_tensor_rows(frame_features[f], batch_rows);
            frame_preds.push_back(mlp_forward(tape, result.decoder, vars, tape.constant(bx)));
        }

        Var hybrid;
        for (int f = 0; f < n_frames; ++f) {
            Var pred = frame_preds[f];
            Tensor lab = by;
            if (supervision) {
                std::vector<std::int64_t> rows;
                for (std::size_t i = 0; i < batch_rows.size(); ++i)
                    if ((*supervision)[f][batch_rows[i]])
                        rows.push_back(static_cast<std::int64_t>(i));
                if (rows.empty()) continue;
                pred = tape.gather_rows(pred, rows);
                Tensor sub({rows.size(), 3});
                for (std::size_t i = 0; i < rows.size(); ++i)
                    std::copy(by.data.begin() + rows[i] * 3, by.data.begin() + rows[i] * 3 + 3,
                              sub.data.begin() + 3 * i);
                lab = std::move(sub);
            }
            Var term = color_l1_loss_vars(tape, pred, lab);
            hybrid = hybrid.valid() ? tape.add(hybrid, term) : term;
        }
        if (!hybrid.valid()) hybrid = tape.constant(Tensor::scalar(0.0));

        std::optional<Var> tc;
        if (temporal) tc = temporal_color_loss_vars(tape, frame_preds);
        Var loss = combined_loss_vars(tape, {}, {}, {}, hybrid, tc, config.weights);

        double value = tape.scalar(loss);
        if (initial_loss < 0) initial_loss = value;
        check_divergence(value, initial_loss, step, "color stage");
        result.total_history.push_back(value);
        result.hybrid_history.push_back(tape.scalar(hybrid));
        result.temporal_history.push_back(tc ? tape.scalar(*tc) : 0.0);

        tape.backward(loss);
        std::vector<Tensor> grads;
        for (std::size_t i = 0; i < vars.weights.size(); ++i) {
            grads.push_back(tape.grad(vars.weights[i]));
            grads.push_back(tape.grad(vars.biases[i]));
        }
        opt.step(params, grads);
    }
    result.decoder.assign(params);
    return result;
}

ReconResult reconstruct(const Sequence& sequence, int frame, const VoxelPredictor& predictor,
                        const MlpParams& occ_decoder, const MlpParams* color_decoder,
                        const TrainConfig& config) {
    if (frame < 0 || frame >= sequence.frame_count())
        throw ShapeError("reconstruct: frame index out of range");
    int eval_res = config.eval_resolution > 0 ? config.eval_resolution
                                              : 2 * sequence.spec.voxel_resolution;
    FrameEncoder enc = implicit_encoder(sequence, frame, predictor, config);

    ReconResult result;
    result.occupancy = VoxelGrid::from_cell_bounds(sequence.bounds,
                                                   {eval_res, eval_res, eval_res},
                                                   GridValueType::occupancy);
    std::vector<Vec3> nodes;
    nodes.reserve(result.occupancy.count());
    for (int k = 0; k < eval_res; ++k)
        for (int j = 0; j < eval_res; ++j)
            for (int i = 0; i < eval_res; ++i) nodes.push_back(result.occupancy.node_pos(i, j, k));
    result.occupancy.values = decode_occupancy_batch(occ_decoder, enc, nodes);

    result.mesh = marching_cubes(result.occupancy, 0.5);
    result.empty_surface = result.mesh.triangles.empty();

    if (!result.empty_surface && color_decoder) {
        VoxelGrid occ_field = densify_occupancy(sequence, frame, predictor, occ_decoder, config);
        FrameEncoder color_enc(occ_field, sequence.frames[frame].image,
                               sequence.frames[frame].camera, config.encoder);
        result.mesh.vertex_colors = decode_color_batch(*color_decoder, color_enc,
                                                       result.mesh.vertices);
    }

    // Metrics against the frame's ground truth.
    if (!result.empty_surface) {
        const TriMesh& gt = sequence.frames[frame].gt_mesh;
        CounterRng rng(1234567ull + static_cast<std::uint64_t>(frame));
        std::vector<SurfaceSample> a = sample_surface(result.mesh, 10000, rng.stream(0));
        std::vector<SurfaceSample> b = sample_surface(gt, 10000, rng.stream(1));
        std::vector<Vec3> pa, pb;
        pa.reserve(a.size());
        pb.reserve(b.size());
        for (const auto& s : a) pa.push_back(s.position);
        for (const auto& s : b) pb.push_back(s.position);
        result.chamfer_cm = 100.0 * chamfer_distance(pa, pb); // meters -> cm

        const VoxelGrid& gt_vox = sequence.frames[frame].gt_voxels;
        VoxelGrid pred_at_gt = gt_vox;
        std::vector<Vec3> gt_nodes;
        gt_nodes.reserve(gt_vox.count());
        for (int k = 0; k < gt_vox.res[2]; ++k)
            for (int j = 0; j < gt_vox.res[1]; ++j)
                for (int i = 0; i < gt_vox.res[0]; ++i) gt_nodes.push_back(gt_vox.node_pos(i, j, k));
        std::vector<double> s = decode_occupancy_batch(occ_decoder, enc, gt_nodes);
        for (std::size_t i = 0; i < s.size(); ++i) pred_at_gt.values[i] = s[i] > 0.5 ? 1.0 : 0.0;
        result.iou = voxel_iou(pred_at_gt, gt_vox);
    }
    return result;
}

FlickerScore flicker_score(std::span<const std::vector<double>> occupancy_per_frame,
                           std::span<const std::vector<Vec3>> color_per_frame) {
    // Population variance in the pairwise form var = sum_{f,g} (x_f-x_g)^2
    // / (2 F^2), which is exactly zero for frame-constant predictions.
    FlickerScore score;
    if (occupancy_per_frame.size() >= 2) {
        std::size_t frames = occupancy_per_frame.size(), n = occupancy_per_frame[0].size();
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double pair_sq = 0;
            for (std::size_t f = 0; f < frames; ++f)
                for (std::size_t g = 0; g < frames; ++g) {
                    double dlt = occupancy_per_frame[f][i] - occupancy_per_frame[g][i];
                    pair_sq += dlt * dlt;
                }
            acc += pair_sq / (2.0 * static_cast<double>(frames) * static_cast<double>(frames));
        }
        score.occupancy = n ? acc / static_cast<double>(n) : 0.0;
    }
    if (color_per_frame.size() >= 2) {
        std::size_t frames = color_per_frame.size(), n = color_per_frame[0].size();
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double pair_sq = 0;
            for (std::size_t f = 0; f < frames; ++f)
                for (std::size_t g = 0; g < frames; ++g)
                    pair_sq += norm2(color_per_frame[f][i] - color_per_frame[g][i]);
            acc += pair_sq / (2.0 * static_cast<double>(frames) * static_cast<double>(frames));
        }
        score.color = n ? acc / static_cast<double>(n) : 0.0;
    }
    return score;
}

FlickerScore flicker_probe(const Sequence& sequence, const VoxelPredictor& predictor,
                           const MlpParams* occ_decoder, const MlpParams* color_decoder,
                           const TrainConfig& config, std::size_t n_points, std::uint64_t seed) {
    int n_frames = predictor.frames();
    // On-surface probes at exact GT-surface correspondences.
    SampleSet probes = sample_occupancy_points(sequence.frames[0].gt_mesh, n_points, 0.0, seed,
                                               /*uniform_fraction=*/0.0, 0);
    track_samples(probes, sequence);

    std::vector<std::vector<double>> occ(n_frames);
    std::vector<std::vector<Vec3>> col;
    for (int f = 0; f < n_frames; ++f) {
        VoxelGrid grid = predictor.occupancy_grid(f);
        occ[f].resize(probes.size());
        for (std::size_t i = 0; i < probes.size(); ++i)
            occ[f][i] = trilinear_sample(grid, probes.tracked[f][i]);
    }
    if (color_decoder) {
        if (!occ_decoder && !config.teacher_force_gt)
            throw ShapeError("flicker_probe: color probing needs the occupancy decoder");
        col.resize(n_frames);
        for (int f = 0; f < n_frames; ++f) {
            VoxelGrid occ_field = densify_occupancy(sequence, f, predictor,
                                                    occ_decoder ? *occ_decoder : MlpParams(),
                                                    config);
            FrameEncoder enc(occ_field, sequence.frames[f].image, sequence.frames[f].camera,
                             config.encoder);
            col[f] = decode_color_batch(*color_decoder, enc, probes.tracked[f]);
        }
    }
    return flicker_score(occ, col);
}

} // namespace tcr
