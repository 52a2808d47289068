#include "tcr/trimesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "tcr/error.hpp"

namespace tcr {

void TriMesh::validate() const {
    int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles)
        for (int i : t)
            if (i < 0 || i >= n) throw GeometryError("triangle index out of range");
    if (!vertex_colors.empty()) {
        if (vertex_colors.size() != vertices.size())
            throw GeometryError("vertex color count mismatch");
        for (const Vec3& c : vertex_colors)
            if (c.x < 0 || c.x > 1 || c.y < 0 || c.y > 1 || c.z < 0 || c.z > 1)
                throw GeometryError("vertex color outside [0,1]");
    }
    if (!vertex_ids.empty() && vertex_ids.size() != vertices.size())
        throw GeometryError("vertex id count mismatch");
}

bool TriMesh::is_watertight() const {
    if (triangles.empty()) return false;
    // key = undirected edge; value = (forward count, backward count)
    std::unordered_map<std::uint64_t, std::pair<int, int>> edges;
    edges.reserve(triangles.size() * 3);
    auto key = [](int a, int b) {
        std::uint64_t lo = static_cast<std::uint32_t>(std::min(a, b));
        std::uint64_t hi = static_cast<std::uint32_t>(std::max(a, b));
        return (hi << 32) | lo;
    };
    for (const auto& t : triangles) {
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            if (a == b) return false; // degenerate edge
            auto& cnt = edges[key(a, b)];
            (a < b ? cnt.first : cnt.second) += 1;
        }
    }
    for (const auto& [k, cnt] : edges)
        if (cnt.first != 1 || cnt.second != 1) return false;
    return true;
}

Aabb TriMesh::bounds() const {
    if (vertices.empty()) return {};
    Aabb box{vertices[0], vertices[0]};
    for (const Vec3& v : vertices) {
        box.lo = min(box.lo, v);
        box.hi = max(box.hi, v);
    }
    return box;
}

double TriMesh::area() const {
    double a = 0;
    for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(static_cast<int>(t));
    return a;
}

double TriMesh::signed_volume() const {
    double v = 0;
    for (const auto& t : triangles) {
        const Vec3 &a = vertices[t[0]], &b = vertices[t[1]], &c = vertices[t[2]];
        v += dot(a, cross(b, c)) / 6.0;
    }
    return v;
}

Vec3 TriMesh::triangle_point(int tri, double b0, double b1, double b2) const {
    const auto& t = triangles[tri];
    return vertices[t[0]] * b0 + vertices[t[1]] * b1 + vertices[t[2]] * b2;
}

Vec3 TriMesh::triangle_normal(int tri) const {
    const auto& t = triangles[tri];
    return normalized(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

double TriMesh::triangle_area(int tri) const {
    const auto& t = triangles[tri];
    return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
}

Vec3 TriMesh::color_at(int tri, double b0, double b1, double b2) const {
    const auto& t = triangles[tri];
    return vertex_colors[t[0]] * b0 + vertex_colors[t[1]] * b1 + vertex_colors[t[2]] * b2;
}

std::vector<Vec3> TriMesh::vertex_normals() const {
    std::vector<Vec3> normals(vertices.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        const auto& tr = triangles[t];
        Vec3 n = cross(vertices[tr[1]] - vertices[tr[0]], vertices[tr[2]] - vertices[tr[0]]);
        for (int i : tr) normals[i] += n; // area weighting via unnormalized cross
    }
    for (Vec3& n : normals) n = normalized(n);
    return normals;
}

std::vector<SurfaceSample> sample_surface(const TriMesh& mesh, std::size_t n,
                                          const CounterRng& rng) {
    if (mesh.triangles.empty()) throw GeometryError("sample_surface: empty mesh");
    std::vector<double> cdf(mesh.triangles.size());
    double acc = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        acc += mesh.triangle_area(static_cast<int>(t));
        cdf[t] = acc;
    }
    if (acc <= 0) throw GeometryError("sample_surface: zero-area mesh");

    std::vector<SurfaceSample> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.u01(3 * i) * acc;
        std::size_t t = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (t >= cdf.size()) t = cdf.size() - 1;
        // uniform barycentric via square-root trick
        double r1 = std::sqrt(rng.u01(3 * i + 1));
        double r2 = rng.u01(3 * i + 2);
        double b0 = 1.0 - r1, b1 = r1 * (1.0 - r2), b2 = r1 * r2;
        out[i] = {mesh.triangle_point(static_cast<int>(t), b0, b1, b2), static_cast<int>(t),
                  b0, b1, b2};
    }
    return out;
}

void save_obj(const TriMesh& mesh, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("cannot open for writing: " + path);
    bool colors = mesh.has_colors();
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& v = mesh.vertices[i];
        if (colors) {
            const Vec3& c = mesh.vertex_colors[i];
            std::fprintf(f, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", v.x, v.y, v.z, c.x, c.y,
                         c.z);
        } else {
            std::fprintf(f, "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        }
    }
    for (const auto& t : mesh.triangles)
        std::fprintf(f, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

TriMesh load_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(f, line)) {
        if (line.rfind("v ", 0) == 0) {
            std::istringstream is(line.substr(2));
            double x, y, z, r, g, b;
            is >> x >> y >> z;
            if (!is) throw IoError("malformed vertex line in " + path);
            mesh.vertices.push_back({x, y, z});
            if (is >> r >> g >> b) mesh.vertex_colors.push_back({r, g, b});
        } else if (line.rfind("f ", 0) == 0) {
            std::istringstream is(line.substr(2));
            std::array<int, 3> t{};
            std::string tok;
            for (int i = 0; i < 3; ++i) {
                if (!(is >> tok)) throw IoError("malformed face line in " + path);
                t[i] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            mesh.triangles.push_back(t);
        }
    }
    if (!mesh.vertex_colors.empty() && mesh.vertex_colors.size() != mesh.vertices.size())
        throw IoError("mixed colored/uncolored vertices in " + path);
    mesh.validate();
    return mesh;
}

} // namespace tcr
