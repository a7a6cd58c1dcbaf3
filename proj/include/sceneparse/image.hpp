#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sceneparse/errors.hpp"

namespace sceneparse {

/// RGB raster plus an aligned integer label map. Label -1 means unknown;
/// any other negative value is canonicalized to -1 on construction paths.
struct LabeledImage {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels; // H*W*3 interleaved RGB
    std::vector<std::int32_t> labels; // H*W, -1 = unknown
    std::string id;

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

    std::uint8_t channel(int r, int c, int ch) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }
    std::int32_t label(int r, int c) const {
        return labels[static_cast<std::size_t>(r) * width + c];
    }
    std::int32_t& label(int r, int c) {
        return labels[static_cast<std::size_t>(r) * width + c];
    }

    bool fully_unknown() const;

    /// Throws DataError on shape mismatch between pixels and labels.
    void validate_shape() const;
};

/// Clamps every negative label to -1. Non-negative labels pass through.
void canonicalize_unknown(std::vector<std::int32_t>& labels);

/// Resizes pixels bilinearly and labels by nearest neighbor to side x side.
/// Labels are categorical, so they are never interpolated.
LabeledImage resize_image(const LabeledImage& img, int side);

// --- raster file I/O ------------------------------------------------------

struct Raster8 {
    int height = 0;
    int width = 0;
    int channels = 0; // 1 or 3
    std::vector<std::uint8_t> data;
};

Raster8 read_png(const std::string& path);
void write_png_rgb(const std::string& path, int height, int width, std::span<const std::uint8_t> rgb);
/// 8-bit palette PNG; `indices` must be < palette size, palette is RGB triples.
void write_png_indexed(const std::string& path, int height, int width,
                       std::span<const std::uint8_t> indices,
                       std::span<const std::uint8_t> palette_rgb);

Raster8 read_pnm(const std::string& path); // binary P5 or P6
void write_ppm(const std::string& path, int height, int width, std::span<const std::uint8_t> rgb);
void write_pgm(const std::string& path, int height, int width, std::span<const std::uint8_t> gray);
/// 16-bit PGM used for superpixel assignment dumps. Samples are stored
/// little-endian; a header comment marks the byte order.
void write_pgm16(const std::string& path, int height, int width, std::span<const std::uint16_t> gray);

/// Loads an RGB image; grayscale inputs are replicated to three channels.
Raster8 read_image_any(const std::string& path);

/// Plain-text label map: "H W" header then H rows of W signed integers.
std::vector<std::int32_t> read_label_text(const std::string& path, int& height, int& width);
void write_label_text(const std::string& path, int height, int width, std::span<const std::int32_t> labels);

} // namespace sceneparse
