#include "tcr/voxelgrid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tcr/error.hpp"

namespace tcr {

std::string grid_value_type_name(GridValueType t) {
    switch (t) {
        case GridValueType::occupancy: return "occupancy";
        case GridValueType::logits: return "logits";
        case GridValueType::binary: return "binary";
    }
    return "?";
}

GridValueType grid_value_type_from_name(const std::string& name) {
    if (name == "occupancy") return GridValueType::occupancy;
    if (name == "logits") return GridValueType::logits;
    if (name == "binary") return GridValueType::binary;
    throw IoError("unknown grid value type: " + name);
}

VoxelGrid::VoxelGrid(std::array<int, 3> res_, Vec3 origin_, Vec3 spacing_, GridValueType type)
    : res(res_), origin(origin_), spacing(spacing_), value_type(type) {
    if (res[0] < 2 || res[1] < 2 || res[2] < 2)
        throw ShapeError("voxel grid resolution components must be >= 2");
    if (spacing.x <= 0 || spacing.y <= 0 || spacing.z <= 0)
        throw ShapeError("voxel grid spacing must be positive");
    values.assign(static_cast<std::size_t>(res[0]) * res[1] * res[2], 0.0);
}

VoxelGrid VoxelGrid::from_cell_bounds(const Aabb& cell_bounds, std::array<int, 3> res,
                                      GridValueType type) {
    Vec3 ext = cell_bounds.extent();
    Vec3 spacing{ext.x / res[0], ext.y / res[1], ext.z / res[2]};
    Vec3 origin = cell_bounds.lo + spacing * 0.5;
    return VoxelGrid(res, origin, spacing, type);
}

std::array<int, 3> VoxelGrid::cell_of(const Vec3& X) const {
    std::array<int, 3> c{-1, -1, -1};
    for (int a = 0; a < 3; ++a) {
        double u = (X[a] - origin[a]) / spacing[a];
        long i = std::lround(u);
        // nodes are cell centers; the cell extends half a spacing around
        if (u < -0.5 || u > res[a] - 0.5) return {-1, -1, -1};
        if (i < 0) i = 0;
        if (i > res[a] - 1) i = res[a] - 1;
        c[a] = static_cast<int>(i);
    }
    return c;
}

bool VoxelGrid::same_layout(const VoxelGrid& o) const {
    return res == o.res && origin == o.origin && spacing == o.spacing;
}

std::size_t VoxelGrid::occupied_count() const {
    std::size_t n = 0;
    for (double v : values)
        if (v > 0.5) ++n;
    return n;
}

TrilinearStencil trilinear_stencil(const VoxelGrid& grid, const Vec3& X) {
    double u[3], f[3];
    int i0[3];
    for (int a = 0; a < 3; ++a) {
        u[a] = (X[a] - grid.origin[a]) / grid.spacing[a];
        if (u[a] < 0.0) u[a] = 0.0;
        double hi = static_cast<double>(grid.res[a] - 1);
        if (u[a] > hi) u[a] = hi;
        i0[a] = static_cast<int>(std::floor(u[a]));
        if (i0[a] > grid.res[a] - 2) i0[a] = grid.res[a] - 2;
        f[a] = u[a] - i0[a];
    }
    TrilinearStencil s;
    int n = 0;
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                s.idx[n] = static_cast<std::int64_t>(
                    grid.index(i0[0] + di, i0[1] + dj, i0[2] + dk));
                s.w[n] = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) *
                         (dk ? f[2] : 1.0 - f[2]);
                ++n;
            }
    return s;
}

double trilinear_sample(const VoxelGrid& grid, const Vec3& X) {
    TrilinearStencil s = trilinear_stencil(grid, X);
    double acc = 0;
    for (int i = 0; i < 8; ++i) acc += s.w[i] * grid.values[static_cast<std::size_t>(s.idx[i])];
    return acc;
}

void save_grid(const VoxelGrid& grid, const std::string& path, bool f64) {
    {
        std::ofstream h(path + ".hdr");
        if (!h) throw IoError("cannot open for writing: " + path + ".hdr");
        char buf[256];
        h << "tcr-grid 1\n";
        h << "resolution " << grid.res[0] << " " << grid.res[1] << " " << grid.res[2] << "\n";
        std::snprintf(buf, sizeof buf, "origin %.17g %.17g %.17g\n", grid.origin.x, grid.origin.y,
                      grid.origin.z);
        h << buf;
        std::snprintf(buf, sizeof buf, "spacing %.17g %.17g %.17g\n", grid.spacing.x,
                      grid.spacing.y, grid.spacing.z);
        h << buf;
        h << "dtype " << (f64 ? "f64" : "f32") << "\n";
        h << "value " << grid_value_type_name(grid.value_type) << "\n";
        if (!h) throw IoError("write failed: " + path + ".hdr");
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    if (f64) {
        f.write(reinterpret_cast<const char*>(grid.values.data()),
                static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
    } else {
        std::vector<float> tmp(grid.values.begin(), grid.values.end());
        f.write(reinterpret_cast<const char*>(tmp.data()),
                static_cast<std::streamsize>(tmp.size() * sizeof(float)));
    }
    if (!f) throw IoError("write failed: " + path);
}

VoxelGrid load_grid(const std::string& path) {
    std::ifstream h(path + ".hdr");
    if (!h) throw IoError("cannot open: " + path + ".hdr");
    std::string line, key;
    if (!std::getline(h, line)) throw IoError("missing grid header: " + path);
    {
        std::istringstream is(line);
        std::string magic;
        int version = 0;
        is >> magic >> version;
        if (magic != "tcr-grid" || version != 1)
            throw IoError("grid header version mismatch in " + path + ": '" + line + "'");
    }
    std::array<int, 3> res{0, 0, 0};
    Vec3 origin, spacing{1, 1, 1};
    std::string dtype = "f32", vtype = "occupancy";
    while (std::getline(h, line)) {
        std::istringstream is(line);
        is >> key;
        if (key == "resolution") is >> res[0] >> res[1] >> res[2];
        else if (key == "origin") is >> origin.x >> origin.y >> origin.z;
        else if (key == "spacing") is >> spacing.x >> spacing.y >> spacing.z;
        else if (key == "dtype") is >> dtype;
        else if (key == "value") is >> vtype;
        if (!is) throw IoError("malformed grid header line in " + path + ": '" + line + "'");
    }
    VoxelGrid grid(res, origin, spacing, grid_value_type_from_name(vtype));
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    if (dtype == "f64") {
        f.read(reinterpret_cast<char*>(grid.values.data()),
               static_cast<std::streamsize>(grid.values.size() * sizeof(double)));
    } else if (dtype == "f32") {
        std::vector<float> tmp(grid.values.size());
        f.read(reinterpret_cast<char*>(tmp.data()),
               static_cast<std::streamsize>(tmp.size() * sizeof(float)));
        for (std::size_t i = 0; i < tmp.size(); ++i) grid.values[i] = tmp[i];
    } else {
        throw IoError("unknown grid dtype: " + dtype);
    }
    if (!f) throw IoError("truncated grid payload: " + path);
    return grid;
}

} // namespace tcr
