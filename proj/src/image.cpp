#include "sceneparse/image.hpp"

#include <algorithm>
#include <cmath>

namespace sceneparse {

bool LabeledImage::fully_unknown() const {
    return std::all_of(labels.begin(), labels.end(), [](std::int32_t v) { return v < 0; });
}

void LabeledImage::validate_shape() const {
    const std::size_t n = pixel_count();
    if (pixels.size() != n * 3)
        throw DataError("image '" + id + "': pixel buffer does not match " +
                        std::to_string(height) + "x" + std::to_string(width));
    if (labels.size() != n)
        throw DataError("image '" + id + "': label map does not match " +
                        std::to_string(height) + "x" + std::to_string(width));
}

void canonicalize_unknown(std::vector<std::int32_t>& labels) {
    for (auto& v : labels)
        if (v < 0) v = -1;
}

namespace {

// Destination pixel center mapped into source pixel coordinates. Integer
// arithmetic: floor((d + 0.5) * src / dst) without rounding surprises.
inline int nearest_source(int d, int src, int dst) {
    return static_cast<int>((static_cast<std::int64_t>(2 * d + 1) * src) / (2 * dst));
}

inline std::uint8_t bilinear_channel(const LabeledImage& img, double fr, double fc, int ch) {
    const int r0 = static_cast<int>(std::floor(fr));
    const int c0 = static_cast<int>(std::floor(fc));
    const int r1 = std::min(r0 + 1, img.height - 1);
    const int c1 = std::min(c0 + 1, img.width - 1);
    const double wr = fr - r0;
    const double wc = fc - c0;
    const double top = (1.0 - wc) * img.channel(r0, c0, ch) + wc * img.channel(r0, c1, ch);
    const double bot = (1.0 - wc) * img.channel(r1, c0, ch) + wc * img.channel(r1, c1, ch);
    const double v = (1.0 - wr) * top + wr * bot;
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

} // namespace

LabeledImage resize_image(const LabeledImage& img, int side) {
    if (side < 16) throw ConfigError("resize side must be >= 16, got " + std::to_string(side));
    img.validate_shape();
    if (img.height == side && img.width == side) return img;

    LabeledImage out;
    out.height = side;
    out.width = side;
    out.id = img.id;
    out.pixels.resize(static_cast<std::size_t>(side) * side * 3);
    out.labels.resize(static_cast<std::size_t>(side) * side);

    for (int r = 0; r < side; ++r) {
        // Pixel-center alignment; clamped to stay inside the source grid.
        double fr = (r + 0.5) * img.height / side - 0.5;
        fr = std::clamp(fr, 0.0, static_cast<double>(img.height - 1));
        const int sr = nearest_source(r, img.height, side);
        for (int c = 0; c < side; ++c) {
            double fc = (c + 0.5) * img.width / side - 0.5;
            fc = std::clamp(fc, 0.0, static_cast<double>(img.width - 1));
            const std::size_t o = (static_cast<std::size_t>(r) * side + c) * 3;
            out.pixels[o + 0] = bilinear_channel(img, fr, fc, 0);
            out.pixels[o + 1] = bilinear_channel(img, fr, fc, 1);
            out.pixels[o + 2] = bilinear_channel(img, fr, fc, 2);
            out.labels[static_cast<std::size_t>(r) * side + c] =
                img.label(sr, nearest_source(c, img.width, side));
        }
    }
    return out;
}

} // namespace sceneparse
