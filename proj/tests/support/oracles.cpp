#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tcr/metrics.hpp"

namespace tcr::oracle {

double winding_number(const tcr::TriMesh& mesh, const tcr::Vec3& X) {
    // Van Oosterom-Strackee signed solid angle per triangle.
    double total = 0;
    for (const auto& t : mesh.triangles) {
        tcr::Vec3 a = mesh.vertices[t[0]] - X;
        tcr::Vec3 b = mesh.vertices[t[1]] - X;
        tcr::Vec3 c = mesh.vertices[t[2]] - X;
        double la = tcr::norm(a), lb = tcr::norm(b), lc = tcr::norm(c);
        double num = tcr::dot(a, tcr::cross(b, c));
        double den = la * lb * lc + tcr::dot(a, b) * lc + tcr::dot(b, c) * la +
                     tcr::dot(c, a) * lb;
        total += 2.0 * std::atan2(num, den);
    }
    return total / (4.0 * M_PI);
}

double brute_chamfer(const std::vector<tcr::Vec3>& a, const std::vector<tcr::Vec3>& b) {
    auto directed = [](const std::vector<tcr::Vec3>& from, const std::vector<tcr::Vec3>& to) {
        double acc = 0;
        for (const tcr::Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const tcr::Vec3& q : to) {
                double d2 = tcr::point_dist2(p, q);
                if (d2 < best) best = d2;
            }
            acc += std::sqrt(best);
        }
        return acc / static_cast<double>(from.size());
    };
    return 0.5 * (directed(a, b) + directed(b, a));
}

tcr::TriMesh icosphere(double radius, int subdivisions) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<tcr::Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (tcr::Vec3& v : verts) v = tcr::normalized(v);

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            int id = static_cast<int>(verts.size());
            verts.push_back(tcr::normalized((verts[a] + verts[b]) * 0.5));
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    tcr::TriMesh mesh;
    mesh.vertices = std::move(verts);
    for (tcr::Vec3& v : mesh.vertices) v = v * radius;
    mesh.triangles = std::move(faces);
    return mesh;
}

} // namespace tcr::oracle

namespace tcr::oracle {

double gaussian_displaced_sphere_inside_prob(double sigma) {
    const double mu = 1.0;
    auto pdf = [&](double r) {
        if (r <= 0) return 0.0;
        double a = std::exp(-(r - mu) * (r - mu) / (2 * sigma * sigma));
        double b = std::exp(-(r + mu) * (r + mu) / (2 * sigma * sigma));
        return r / (mu * sigma * std::sqrt(2.0 * M_PI)) * (a - b);
    };
    const std::size_t n = 1000000; // even
    double h = 1.0 / n, acc = pdf(0.0) + pdf(1.0);
    for (std::size_t i = 1; i < n; ++i) acc += pdf(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace tcr::oracle
