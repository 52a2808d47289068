#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcr/vec3.hpp"

namespace tcr {

// RGB raster in [0,1] with an optional binary foreground mask. Pixel (x,y)
// is column x, row y, row-major storage.
struct Image {
    int width = 0, height = 0;
    std::vector<double> rgb;        // 3 per pixel
    std::vector<std::uint8_t> mask; // empty or one per pixel (0/1)

    Image() = default;
    Image(int w, int h);

    bool has_mask() const { return !mask.empty(); }

    double* pixel(int x, int y) { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
    const double* pixel(int x, int y) const {
        return &rgb[3 * (static_cast<std::size_t>(y) * width + x)];
    }
    Vec3 color(int x, int y) const {
        const double* p = pixel(x, y);
        return {p[0], p[1], p[2]};
    }
    void set_color(int x, int y, const Vec3& c) {
        double* p = pixel(x, y);
        p[0] = c.x;
        p[1] = c.y;
        p[2] = c.z;
    }

    std::size_t mask_count() const;
};

// Bilinear RGB at a continuous pixel coordinate, clamped at the border.
Vec3 bilinear_rgb(const Image& img, double x, double y);

// 2x average pooling with halved (floor, min 1) dimensions; odd borders
// pool the existing pixels only. Masks are dropped.
Image avg_pool2(const Image& img);

// Binary PPM (P6, maxval 255) for RGB and PGM (P5) for masks. Images are
// quantized to 8 bits by the renderer, so save/load round-trips exactly.
void save_ppm(const Image& img, const std::string& path);
Image load_ppm(const std::string& path);
void save_pgm(const std::vector<std::uint8_t>& mask, int width, int height,
              const std::string& path);
std::vector<std::uint8_t> load_pgm(const std::string& path, int& width, int& height);

} // namespace tcr
