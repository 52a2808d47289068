#include "tcr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcr/error.hpp"

namespace tcr {

namespace {

// Uniform grid for exact nearest-neighbor queries via expanding shells.
class PointGrid {
  public:
    explicit PointGrid(const std::vector<Vec3>& pts) : pts_(pts) {
        lo_ = hi_ = pts[0];
        for (const Vec3& p : pts) {
            lo_ = min(lo_, p);
            hi_ = max(hi_, p);
        }
        Vec3 ext = hi_ - lo_;
        double target = std::cbrt(static_cast<double>(pts.size()));
        double max_ext = std::max({ext.x, ext.y, ext.z, 1e-12});
        for (int a = 0; a < 3; ++a) {
            res_[a] = std::clamp(static_cast<int>(std::ceil(target * ext[a] / max_ext)), 1, 64);
            cell_[a] = std::max(ext[a] / res_[a], 1e-12);
        }
        cells_.resize(static_cast<std::size_t>(res_[0]) * res_[1] * res_[2]);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            auto c = coords(pts[i]);
            cells_[flat(c)].push_back(static_cast<int>(i));
        }
        min_cell_ = std::min({cell_.x, cell_.y, cell_.z});
    }

    double nearest_dist2(const Vec3& q) const {
        auto center = coords(q);
        double best = std::numeric_limits<double>::infinity();
        int max_ring = std::max({res_[0], res_[1], res_[2]});
        for (int ring = 0; ring <= max_ring; ++ring) {
            if (ring > 1) {
                double safe = (ring - 1) * min_cell_;
                if (safe * safe > best) break;
            }
            for (int k = center[2] - ring; k <= center[2] + ring; ++k) {
                if (k < 0 || k >= res_[2]) continue;
                for (int j = center[1] - ring; j <= center[1] + ring; ++j) {
                    if (j < 0 || j >= res_[1]) continue;
                    for (int i = center[0] - ring; i <= center[0] + ring; ++i) {
                        if (i < 0 || i >= res_[0]) continue;
                        int cheb = std::max({std::abs(i - center[0]), std::abs(j - center[1]),
                                             std::abs(k - center[2])});
                        if (cheb != ring) continue;
                        for (int p : cells_[flat({i, j, k})]) {
                            double d2 = point_dist2(q, pts_[p]);
                            if (d2 < best) best = d2;
                        }
                    }
                }
            }
        }
        return best;
    }

  private:
    std::array<int, 3> coords(const Vec3& p) const {
        std::array<int, 3> c;
        for (int a = 0; a < 3; ++a)
            c[a] = std::clamp(static_cast<int>(std::floor((p[a] - lo_[a]) / cell_[a])), 0,
                              res_[a] - 1);
        return c;
    }
    std::size_t flat(const std::array<int, 3>& c) const {
        return static_cast<std::size_t>(c[0]) +
               static_cast<std::size_t>(res_[0]) *
                   (static_cast<std::size_t>(c[1]) + static_cast<std::size_t>(res_[1]) * c[2]);
    }

    const std::vector<Vec3>& pts_;
    Vec3 lo_, hi_, cell_{1, 1, 1};
    std::array<int, 3> res_{1, 1, 1};
    std::vector<std::vector<int>> cells_;
    double min_cell_ = 1;
};

double directed_mean_nn(const std::vector<Vec3>& from, const PointGrid& to_grid) {
    double acc = 0;
    for (const Vec3& p : from) acc += std::sqrt(to_grid.nearest_dist2(p));
    return acc / static_cast<double>(from.size());
}

} // namespace

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw GeometryError("chamfer_distance: empty point set");
    PointGrid ga(a), gb(b);
    return 0.5 * (directed_mean_nn(a, gb) + directed_mean_nn(b, ga));
}

double voxel_iou(const VoxelGrid& a, const VoxelGrid& b) {
    if (!a.same_layout(b)) throw ShapeError("voxel_iou: grid layouts differ");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        bool oa = a.values[i] > 0.5, ob = b.values[i] > 0.5;
        inter += (oa && ob);
        uni += (oa || ob);
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace tcr
