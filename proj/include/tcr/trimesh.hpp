#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tcr/rng.hpp"
#include "tcr/vec3.hpp"

namespace tcr {

// Indexed triangle mesh in world units (meters). vertex_ids are stable
// labels used for temporal correspondence across a deforming sequence; an
// empty vector means the implicit labeling 0..n-1.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> vertex_colors; // empty or one RGB in [0,1] per vertex
    std::vector<std::int64_t> vertex_ids;

    bool has_colors() const { return !vertex_colors.empty(); }
    std::int64_t id_of(std::size_t v) const {
        return vertex_ids.empty() ? static_cast<std::int64_t>(v) : vertex_ids[v];
    }

    // Index validity, color range, id/color array sizes.
    void validate() const;

    // Edge-pairing test: closed orientable manifold, every undirected edge
    // shared by exactly two triangles with opposite direction.
    bool is_watertight() const;

    Aabb bounds() const;
    double area() const;
    // Signed volume by the divergence theorem; positive for outward-oriented
    // closed surfaces.
    double signed_volume() const;

    Vec3 triangle_point(int tri, double b0, double b1, double b2) const;
    Vec3 triangle_normal(int tri) const; // unit normal, zero for degenerate
    double triangle_area(int tri) const;
    Vec3 color_at(int tri, double b0, double b1, double b2) const;

    // Area-weighted smooth vertex normals.
    std::vector<Vec3> vertex_normals() const;
};

struct SurfaceSample {
    Vec3 position;
    int triangle = -1;
    double b0 = 0, b1 = 0, b2 = 0;
};

// Uniform area-weighted surface samples; deterministic per rng stream.
// Draw i consumes counters {3i, 3i+1, 3i+2}.
std::vector<SurfaceSample> sample_surface(const TriMesh& mesh, std::size_t n,
                                          const CounterRng& rng);

// Wavefront OBJ with optional "v x y z r g b" color extension. Doubles are
// printed with enough digits to round-trip exactly.
void save_obj(const TriMesh& mesh, const std::string& path);
TriMesh load_obj(const std::string& path);

} // namespace tcr
