#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sceneparse/image.hpp"

namespace sceneparse {

struct SuperpixelMap {
    int height = 0;
    int width = 0;
    int n_actual = 0;
    std::vector<std::int32_t> assignment;        // H*W, row-major, values in [0, n_actual)
    std::vector<std::array<double, 2>> centroids; // (row, col) in pixel units
    std::vector<std::vector<std::int32_t>> neighbors;
    std::vector<std::int32_t> block_of;

    std::int32_t at(int r, int c) const {
        return assignment[static_cast<std::size_t>(r) * width + c];
    }
};

struct BlockGrid {
    int g = 0;
    std::vector<int> row_bounds; // g+1 entries, 0 .. H
    std::vector<int> col_bounds; // g+1 entries, 0 .. W

    int block_of_point(double row, double col) const;
};

BlockGrid make_block_grid(int height, int width, int g);

// Near-square tiles from a ceil(sqrt(N))-per-side split with balanced
// boundaries. N = H*W degenerates to one superpixel per pixel.
SuperpixelMap segment_grid(const LabeledImage& img, int n_requested);

// SLIC-style k-means over (L, a, b, row*m/S, col*m/S) with S = sqrt(HW/N),
// grid seeding, a 2S search window, and a 4-connectivity repair pass that
// absorbs orphan components into the largest touching neighbor.
SuperpixelMap segment_slic(const LabeledImage& img, int n_requested, double compactness, int iters);

// 4-connectivity between distinct segments; lists are sorted, symmetric,
// and never contain the segment itself.
std::vector<std::vector<std::int32_t>> build_adjacency(const SuperpixelMap& map);

// Block index of each segment's centroid on a g-per-side grid.
std::vector<std::int32_t> assign_blocks(const SuperpixelMap& map, int g);

// Majority ground-truth label per segment, ignoring unknown (-1) pixels.
// Ties pick the smaller class index; fully unknown segments map to -1.
std::vector<std::int32_t> superpixel_majority_labels(const SuperpixelMap& map,
                                                     const std::vector<std::int32_t>& labels);

// Validates the partition/adjacency invariants, throwing DataError on breakage.
void check_superpixel_invariants(const SuperpixelMap& map);

// Copy of the image with segment boundaries painted black, for debug dumps.
Raster8 overlay_boundaries(const LabeledImage& img, const SuperpixelMap& map);

} // namespace sceneparse
