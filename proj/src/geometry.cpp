#include "tcr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcr/error.hpp"

namespace tcr {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    // Ericson-style Voronoi region walk.
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

// Moeller-Trumbore; hits with t > 0 only. Returns false for parallel or
// outside-triangle cases.
bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                  const Vec3& c, double& t_out) {
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pvec = cross(dir, e2);
    double det = dot(e1, pvec);
    if (std::abs(det) < 1e-14) return false;
    double inv = 1.0 / det;
    Vec3 tvec = origin - a;
    double u = dot(tvec, pvec) * inv;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 qvec = cross(tvec, e1);
    double v = dot(dir, qvec) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    double t = dot(e2, qvec) * inv;
    if (t <= 0.0) return false;
    t_out = t;
    return true;
}

double sq(double v) { return v * v; }

} // namespace

TriangleGrid::TriangleGrid(const TriMesh& mesh) : mesh_(mesh) {
    if (mesh_.triangles.empty()) throw GeometryError("triangle grid over an empty mesh");
    bounds_ = mesh_.bounds().expanded(1e-9);
    // Aim for a few triangles per cell.
    double target = std::cbrt(static_cast<double>(mesh_.triangles.size()) / 2.0);
    Vec3 ext = bounds_.extent();
    double max_ext = std::max({ext.x, ext.y, ext.z, 1e-9});
    for (int a = 0; a < 3; ++a) {
        res_[a] = std::clamp(static_cast<int>(std::ceil(target * ext[a] / max_ext)), 1, 128);
        cell_size_[a] = std::max(ext[a] / res_[a], 1e-12);
    }
    cells_.resize(static_cast<std::size_t>(res_[0]) * res_[1] * res_[2]);
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
        const auto& tr = mesh_.triangles[t];
        Aabb tb{mesh_.vertices[tr[0]], mesh_.vertices[tr[0]]};
        for (int i : {tr[1], tr[2]}) {
            tb.lo = min(tb.lo, mesh_.vertices[i]);
            tb.hi = max(tb.hi, mesh_.vertices[i]);
        }
        std::array<int, 3> lo = cell_coords(tb.lo), hi = cell_coords(tb.hi);
        for (int k = lo[2]; k <= hi[2]; ++k)
            for (int j = lo[1]; j <= hi[1]; ++j)
                for (int i = lo[0]; i <= hi[0]; ++i)
                    cells_[static_cast<std::size_t>(i) +
                           static_cast<std::size_t>(res_[0]) *
                               (static_cast<std::size_t>(j) +
                                static_cast<std::size_t>(res_[1]) * k)]
                        .push_back(static_cast<int>(t));
    }
    mailbox_.assign(mesh_.triangles.size(), 0);
}

std::array<int, 3> TriangleGrid::cell_coords(const Vec3& p) const {
    std::array<int, 3> c;
    for (int a = 0; a < 3; ++a) {
        double u = (p[a] - bounds_.lo[a]) / cell_size_[a];
        c[a] = std::clamp(static_cast<int>(std::floor(u)), 0, res_[a] - 1);
    }
    return c;
}

const std::vector<int>& TriangleGrid::cell_tris(int i, int j, int k) const {
    return cells_[static_cast<std::size_t>(i) +
                  static_cast<std::size_t>(res_[0]) *
                      (static_cast<std::size_t>(j) + static_cast<std::size_t>(res_[1]) * k)];
}

int TriangleGrid::count_crossings(const Vec3& origin, const Vec3& dir) const {
    ++stamp_;
    if (stamp_ == 0) {
        std::fill(mailbox_.begin(), mailbox_.end(), 0);
        stamp_ = 1;
    }
    // 3D DDA through the cells the ray passes, clipped to the grid bounds.
    double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dir[a]) < 1e-300) {
            if (origin[a] < bounds_.lo[a] || origin[a] > bounds_.hi[a]) return 0;
        } else {
            double ta = (bounds_.lo[a] - origin[a]) / dir[a];
            double tb = (bounds_.hi[a] - origin[a]) / dir[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
    }
    if (t0 > t1) return 0;

    Vec3 entry = origin + dir * t0;
    std::array<int, 3> cell = cell_coords(entry);
    std::array<int, 3> step;
    Vec3 t_next, t_delta;
    for (int a = 0; a < 3; ++a) {
        if (dir[a] > 0) {
            step[a] = 1;
            double edge = bounds_.lo[a] + (cell[a] + 1) * cell_size_[a];
            t_next[a] = (edge - origin[a]) / dir[a];
            t_delta[a] = cell_size_[a] / dir[a];
        } else if (dir[a] < 0) {
            step[a] = -1;
            double edge = bounds_.lo[a] + cell[a] * cell_size_[a];
            t_next[a] = (edge - origin[a]) / dir[a];
            t_delta[a] = -cell_size_[a] / dir[a];
        } else {
            step[a] = 0;
            t_next[a] = std::numeric_limits<double>::infinity();
            t_delta[a] = std::numeric_limits<double>::infinity();
        }
    }

    int crossings = 0;
    while (true) {
        for (int t : cell_tris(cell[0], cell[1], cell[2])) {
            if (mailbox_[t] == stamp_) continue;
            mailbox_[t] = stamp_;
            const auto& tr = mesh_.triangles[t];
            double hit_t;
            if (ray_triangle(origin, dir, mesh_.vertices[tr[0]], mesh_.vertices[tr[1]],
                             mesh_.vertices[tr[2]], hit_t))
                ++crossings;
        }
        int axis = 0;
        if (t_next[1] < t_next[axis]) axis = 1;
        if (t_next[2] < t_next[axis]) axis = 2;
        if (t_next[axis] > t1) break;
        cell[axis] += step[axis];
        if (cell[axis] < 0 || cell[axis] >= res_[axis]) break;
        t_next[axis] += t_delta[axis];
    }
    return crossings;
}

ClosestSurfacePoint TriangleGrid::closest_point(const Vec3& p) const {
    ++stamp_;
    if (stamp_ == 0) {
        std::fill(mailbox_.begin(), mailbox_.end(), 0);
        stamp_ = 1;
    }
    std::array<int, 3> center = cell_coords(p);
    double best_d2 = std::numeric_limits<double>::infinity();
    ClosestSurfacePoint best;

    int max_ring = std::max({res_[0], res_[1], res_[2]});
    double min_cell = std::min({cell_size_.x, cell_size_.y, cell_size_.z});
    for (int ring = 0; ring <= max_ring; ++ring) {
        // Shell of cells at Chebyshev distance `ring`. Distance from p to the
        // content of a farther shell is at least (ring-1) * min cell size, so
        // once that exceeds the best hit we can stop.
        if (ring > 1 && sq((ring - 1) * min_cell) > best_d2) break;
        bool any_cell = false;
        for (int k = center[2] - ring; k <= center[2] + ring; ++k) {
            if (k < 0 || k >= res_[2]) continue;
            for (int j = center[1] - ring; j <= center[1] + ring; ++j) {
                if (j < 0 || j >= res_[1]) continue;
                for (int i = center[0] - ring; i <= center[0] + ring; ++i) {
                    if (i < 0 || i >= res_[0]) continue;
                    int cheb = std::max({std::abs(i - center[0]), std::abs(j - center[1]),
                                         std::abs(k - center[2])});
                    if (cheb != ring) continue;
                    any_cell = true;
                    for (int t : cell_tris(i, j, k)) {
                        if (mailbox_[t] == stamp_) continue;
                        mailbox_[t] = stamp_;
                        const auto& tr = mesh_.triangles[t];
                        Vec3 q = closest_point_on_triangle(p, mesh_.vertices[tr[0]],
                                                           mesh_.vertices[tr[1]],
                                                           mesh_.vertices[tr[2]]);
                        double d2 = norm2(q - p);
                        if (d2 < best_d2) {
                            best_d2 = d2;
                            best.point = q;
                            best.triangle = t;
                        }
                    }
                }
            }
        }
        if (!any_cell && ring > 0 && best.triangle >= 0) break;
    }

    best.dist = std::sqrt(best_d2);
    // Recover barycentric coordinates of the hit.
    const auto& tr = mesh_.triangles[best.triangle];
    const Vec3 &a = mesh_.vertices[tr[0]], &b = mesh_.vertices[tr[1]], &c = mesh_.vertices[tr[2]];
    Vec3 v0 = b - a, v1 = c - a, v2 = best.point - a;
    double d00 = dot(v0, v0), d01 = dot(v0, v1), d11 = dot(v1, v1);
    double d20 = dot(v2, v0), d21 = dot(v2, v1);
    double denom = d00 * d11 - d01 * d01;
    if (std::abs(denom) > 1e-30) {
        best.b1 = (d11 * d20 - d01 * d21) / denom;
        best.b2 = (d00 * d21 - d01 * d20) / denom;
        best.b0 = 1.0 - best.b1 - best.b2;
    } else {
        best.b0 = 1.0;
        best.b1 = best.b2 = 0.0;
    }
    return best;
}

namespace {

// Fixed jittered directions with irrational-looking components so lattice
// queries do not systematically graze mesh edges.
const Vec3 kParityDirs[3] = {
    normalized({0.5377397911392721, 0.3948472239154413, 0.7450409301995716}),
    normalized({-0.6620471392319157, 0.7145250212075262, 0.2264192630582973}),
    normalized({0.2137931415331427, -0.5521266847625357, 0.8058264693956906}),
};

} // namespace

InsideTester::InsideTester(const TriMesh& mesh) {
    if (!mesh.is_watertight())
        throw GeometryError("inside/outside test requires a watertight mesh");
    grid_ = std::make_shared<TriangleGrid>(mesh);
}

bool InsideTester::inside(const Vec3& X) const {
    int votes = 0;
    for (const Vec3& dir : kParityDirs)
        votes += grid_->count_crossings(X, dir) % 2;
    return votes >= 2;
}

int point_in_mesh(const TriMesh& mesh, const Vec3& X) {
    InsideTester tester(mesh);
    return tester.inside(X) ? 1 : 0;
}

VoxelGrid voxelize(const TriMesh& mesh, std::array<int, 3> resolution, const Aabb& bounds) {
    if (!bounds.contains(mesh.bounds()))
        throw GeometryError("voxelize: bounds do not enclose the mesh");
    InsideTester tester(mesh);
    VoxelGrid grid = VoxelGrid::from_cell_bounds(bounds, resolution, GridValueType::binary);
    for (int k = 0; k < grid.res[2]; ++k)
        for (int j = 0; j < grid.res[1]; ++j)
            for (int i = 0; i < grid.res[0]; ++i)
                grid.at(i, j, k) = tester.inside(grid.node_pos(i, j, k)) ? 1.0 : 0.0;
    return grid;
}

} // namespace tcr
