#pragma once

#include <cstdint>

namespace sceneparse {

struct Lab {
    double l, a, b;
};

struct Hsv {
    double h; // degrees in [0, 360)
    double s; // [0, 1]
    double v; // [0, 1]
};

// sRGB (8-bit) to CIE Lab under the D65 reference white.
Lab srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);

Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Rec.601 luma, kept in [0, 255].
double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

} // namespace sceneparse
