#include "tcr/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tcr/error.hpp"

namespace tcr {

Image::Image(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw ShapeError("image size must be positive");
    rgb.assign(static_cast<std::size_t>(w) * h * 3, 0.0);
}

std::size_t Image::mask_count() const {
    std::size_t n = 0;
    for (std::uint8_t m : mask) n += (m != 0);
    return n;
}

Vec3 bilinear_rgb(const Image& img, double x, double y) {
    double u = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    double v = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    int x0 = std::min(static_cast<int>(std::floor(u)), img.width - 2);
    int y0 = std::min(static_cast<int>(std::floor(v)), img.height - 2);
    if (img.width == 1) x0 = 0;
    if (img.height == 1) y0 = 0;
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double fx = u - x0, fy = v - y0;
    Vec3 c00 = img.color(x0, y0), c10 = img.color(x1, y0);
    Vec3 c01 = img.color(x0, y1), c11 = img.color(x1, y1);
    return (c00 * (1 - fx) + c10 * fx) * (1 - fy) + (c01 * (1 - fx) + c11 * fx) * fy;
}

Image avg_pool2(const Image& img) {
    int w = std::max(1, img.width / 2), h = std::max(1, img.height / 2);
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            Vec3 acc;
            int n = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    int sx = 2 * x + dx, sy = 2 * y + dy;
                    if (sx < img.width && sy < img.height) {
                        acc += img.color(sx, sy);
                        ++n;
                    }
                }
            out.set_color(x, y, acc / n);
        }
    return out;
}

void save_ppm(const Image& img, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    std::fprintf(f, "P6\n%d %d\n255\n", img.width, img.height);
    std::vector<std::uint8_t> bytes(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        double v = std::clamp(img.rgb[i], 0.0, 1.0);
        bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

namespace {

void read_pnm_header(std::ifstream& f, const std::string& path, const char* magic, int& w,
                     int& h) {
    std::string m;
    f >> m;
    if (m != magic) throw IoError("bad magic in " + path + ": " + m);
    int maxval = 0;
    f >> w >> h >> maxval;
    if (!f || w <= 0 || h <= 0 || maxval != 255) throw IoError("bad header in " + path);
    f.get(); // single whitespace before the payload
}

} // namespace

Image load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    int w = 0, h = 0;
    read_pnm_header(f, path, "P6", w, h);
    Image img(w, h);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 3);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("truncated image: " + path);
    for (std::size_t i = 0; i < bytes.size(); ++i) img.rgb[i] = bytes[i] / 255.0;
    return img;
}

void save_pgm(const std::vector<std::uint8_t>& mask, int width, int height,
              const std::string& path) {
    if (mask.size() != static_cast<std::size_t>(width) * height)
        throw ShapeError("mask size does not match image dimensions");
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    std::fprintf(f, "P5\n%d %d\n255\n", width, height);
    std::vector<std::uint8_t> bytes(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) bytes[i] = mask[i] ? 255 : 0;
    std::fwrite(bytes.data(), 1, bytes.size(), f);
    if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

std::vector<std::uint8_t> load_pgm(const std::string& path, int& width, int& height) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    read_pnm_header(f, path, "P5", width, height);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("truncated mask: " + path);
    for (std::uint8_t& b : bytes) b = b >= 128 ? 1 : 0;
    return bytes;
}

} // namespace tcr
