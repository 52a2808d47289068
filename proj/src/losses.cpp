#include "tcr/losses.hpp"

#include <cmath>

#include "tcr/error.hpp"

namespace tcr {

void LossWeights::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie strictly in (0,1)");
    if (lambda < 0.0 || !std::isfinite(lambda)) throw ConfigError("lambda must be >= 0");
    if (mu < 0.0 || !std::isfinite(mu)) throw ConfigError("mu must be >= 0");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ConfigError("clamp_eps must be in (0, 0.5)");
}

Var weighted_bce_vars(Tape& tape, Var pred, const Tensor& gt, double gamma, double eps,
                      const std::vector<std::int64_t>* supervised) {
    const Tensor& p = tape.value(pred);
    if (!p.same_shape(gt))
        throw ShapeError("weighted_bce: prediction " + p.shape_str() + " vs ground truth " +
                         gt.shape_str());
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie strictly in (0,1)");

    Var use_pred = pred;
    Tensor use_gt = gt;
    if (supervised) {
        if (supervised->empty()) throw ShapeError("weighted_bce: empty supervised subset");
        std::vector<double> w(supervised->size(), 1.0);
        use_pred = tape.gather_weighted(pred, *supervised, w, 1, {supervised->size()});
        Tensor sub({supervised->size()});
        for (std::size_t i = 0; i < supervised->size(); ++i)
            sub.data[i] = gt.data[static_cast<std::size_t>((*supervised)[i])];
        use_gt = std::move(sub);
    }

    std::size_t n = tape.value(use_pred).numel();
    Tensor w1(tape.value(use_pred).shape), w0 = w1, ones = w1;
    for (std::size_t i = 0; i < n; ++i) {
        w1.data[i] = gamma * use_gt.data[i];
        w0.data[i] = (1.0 - gamma) * (1.0 - use_gt.data[i]);
        ones.data[i] = 1.0;
    }
    Var log_p = tape.log(tape.clamp(use_pred, eps, 1.0 - eps));
    Var log_q = tape.log(tape.clamp(tape.sub(tape.constant(ones), use_pred), eps, 1.0 - eps));
    Var terms = tape.add(tape.mul(tape.constant(w1), log_p), tape.mul(tape.constant(w0), log_q));
    return tape.scale(tape.mean(terms), -1.0);
}

namespace {

const VoxelCorrespondence& find_map(std::span<const VoxelCorrespondence> maps, int t, int l) {
    for (const VoxelCorrespondence& m : maps)
        if (m.source_frame == t && m.target_frame == l) return m;
    throw ShapeError("temporal loss: missing correspondence map for frame pair (" +
                     std::to_string(t) + "," + std::to_string(l) + ")");
}

} // namespace

Var temporal_voxel_loss_vars(Tape& tape, std::span<const Var> preds,
                             std::span<const VoxelCorrespondence> maps,
                             std::span<const VoxelGrid* const> occupied_only) {
    if (preds.size() < 2) throw ShapeError("temporal voxel loss needs at least two frames");
    int n = static_cast<int>(preds.size());
    Var total;
    for (int t = 0; t < n; ++t)
        for (int l = 0; l < n; ++l) {
            if (t == l) continue;
            const VoxelCorrespondence& map = find_map(maps, t, l);
            if (map.count() != tape.value(preds[t]).numel())
                throw ShapeError("correspondence map size does not match prediction grid");
            std::vector<std::int64_t> src, tgt;
            src.reserve(map.count());
            tgt.reserve(map.count());
            for (std::size_t i = 0; i < map.count(); ++i) {
                if (map.target[i] < 0) continue;
                if (!occupied_only.empty() && !occupied_only[t]->occupied(i)) continue;
                src.push_back(static_cast<std::int64_t>(i));
                tgt.push_back(map.target[i]);
            }
            if (src.empty()) continue;
            std::vector<double> w(src.size(), 1.0);
            Var a = tape.gather_weighted(preds[t], src, w, 1, {src.size()});
            Var b = tape.gather_weighted(preds[l], tgt, w, 1, {tgt.size()});
            Var pair = tape.mean(tape.square(tape.sub(a, b)));
            total = total.valid() ? tape.add(total, pair) : pair;
        }
    return total.valid() ? total : tape.constant(Tensor::scalar(0.0));
}

Var mse_loss_vars(Tape& tape, Var pred, const Tensor& labels) {
    if (!tape.value(pred).same_shape(labels))
        throw ShapeError("mse loss: prediction/label shape mismatch");
    return tape.mean(tape.square(tape.sub(pred, tape.constant(labels))));
}

Var color_l1_loss_vars(Tape& tape, Var pred, const Tensor& labels) {
    const Tensor& p = tape.value(pred);
    if (!p.same_shape(labels) || p.rank() != 2)
        throw ShapeError("color loss: predictions and labels must both be [n,channels]");
    std::size_t n_points = p.shape[0];
    Var diff = tape.abs(tape.sub(pred, tape.constant(labels)));
    return tape.scale(tape.sum(diff), 1.0 / static_cast<double>(n_points));
}

Var temporal_color_loss_vars(Tape& tape, std::span<const Var> frame_preds) {
    if (frame_preds.size() < 2) throw ShapeError("temporal color loss needs at least two frames");
    std::size_t n_points = tape.value(frame_preds[0]).shape[0];
    for (Var v : frame_preds)
        if (!tape.value(v).same_shape(tape.value(frame_preds[0])))
            throw ShapeError("temporal color loss: per-frame prediction shapes differ");
    Var total;
    for (std::size_t t = 0; t < frame_preds.size(); ++t)
        for (std::size_t l = 0; l < frame_preds.size(); ++l) {
            if (t == l) continue;
            Var pair = tape.scale(tape.sum(tape.square(tape.sub(frame_preds[t], frame_preds[l]))),
                                  1.0 / static_cast<double>(n_points));
            total = total.valid() ? tape.add(total, pair) : pair;
        }
    return total;
}

double weighted_bce_voxel(const VoxelGrid& pred, const VoxelGrid& gt, double gamma, double eps) {
    if (!pred.same_layout(gt)) throw ShapeError("weighted_bce_voxel: grid layouts differ");
    Tape tape;
    Var p = tape.constant(Tensor({pred.count()}, pred.values));
    return tape.scalar(weighted_bce_vars(tape, p, Tensor({gt.count()}, gt.values), gamma, eps));
}

double temporal_voxel_loss(std::span<const VoxelGrid> preds,
                           std::span<const VoxelCorrespondence> maps) {
    Tape tape;
    std::vector<Var> vars;
    for (const VoxelGrid& g : preds) vars.push_back(tape.constant(Tensor({g.count()}, g.values)));
    return tape.scalar(temporal_voxel_loss_vars(tape, vars, maps));
}

double hybrid_geometry_loss(std::span<const double> pred, std::span<const double> labels) {
    if (pred.size() != labels.size()) throw ShapeError("hybrid_geometry_loss: length mismatch");
    if (pred.empty()) throw ShapeError("hybrid_geometry_loss: empty batch");
    Tape tape;
    Var p = tape.constant(Tensor({pred.size()}, {pred.begin(), pred.end()}));
    return tape.scalar(mse_loss_vars(tape, p, Tensor({labels.size()}, {labels.begin(), labels.end()})));
}

namespace {

Tensor pack_colors(std::span<const Vec3> colors) {
    Tensor t({colors.size(), 3});
    for (std::size_t i = 0; i < colors.size(); ++i) {
        t.data[3 * i] = colors[i].x;
        t.data[3 * i + 1] = colors[i].y;
        t.data[3 * i + 2] = colors[i].z;
    }
    return t;
}

} // namespace

double hybrid_color_loss(std::span<const Vec3> pred, std::span<const Vec3> labels) {
    if (pred.size() != labels.size()) throw ShapeError("hybrid_color_loss: length mismatch");
    if (pred.empty()) throw ShapeError("hybrid_color_loss: empty batch");
    Tape tape;
    Var p = tape.constant(pack_colors(pred));
    return tape.scalar(color_l1_loss_vars(tape, p, pack_colors(labels)));
}

double temporal_color_loss(std::span<const std::vector<Vec3>> frame_preds) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& frame : frame_preds) vars.push_back(tape.constant(pack_colors(frame)));
    return tape.scalar(temporal_color_loss_vars(tape, vars));
}

double combined_loss(const LossComponents& parts, const LossWeights& weights) {
    weights.validate();
    bool any = false;
    double total = 0.0;
    auto accumulate = [&](const std::optional<double>& v, double w) {
        if (!v) return;
        total = any ? total + w * *v : w * *v;
        any = true;
    };
    accumulate(parts.voxel_bce, 1.0);
    accumulate(parts.temporal_voxel, weights.lambda);
    accumulate(parts.hybrid_geometry, 1.0);
    accumulate(parts.hybrid_color, 1.0);
    accumulate(parts.temporal_color, weights.mu);
    if (!any) throw ShapeError("combined_loss: no components selected");
    return total;
}

Var combined_loss_vars(Tape& tape, std::optional<Var> voxel_bce, std::optional<Var> temporal_voxel,
                       std::optional<Var> hybrid_geometry, std::optional<Var> hybrid_color,
                       std::optional<Var> temporal_color, const LossWeights& weights) {
    weights.validate();
    Var total;
    auto accumulate = [&](const std::optional<Var>& v, double w) {
        if (!v) return;
        Var term = w == 1.0 ? *v : tape.scale(*v, w);
        total = total.valid() ? tape.add(total, term) : term;
    };
    accumulate(voxel_bce, 1.0);
    accumulate(temporal_voxel, weights.lambda);
    accumulate(hybrid_geometry, 1.0);
    accumulate(hybrid_color, 1.0);
    accumulate(temporal_color, weights.mu);
    if (!total.valid()) throw ShapeError("combined_loss: no components selected");
    return total;
}

} // namespace tcr
