#include "sceneparse/superpixels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sceneparse/color.hpp"
#include "sceneparse/errors.hpp"

namespace sceneparse {

namespace {

// Balanced integer boundaries: bound[i] = floor(i * extent / parts).
std::vector<int> balanced_bounds(int extent, int parts) {
    std::vector<int> bounds(static_cast<std::size_t>(parts) + 1);
    for (int i = 0; i <= parts; ++i)
        bounds[static_cast<std::size_t>(i)] =
            static_cast<int>(static_cast<std::int64_t>(i) * extent / parts);
    return bounds;
}

std::vector<int> part_of_index(const std::vector<int>& bounds) {
    std::vector<int> part(static_cast<std::size_t>(bounds.back()));
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
        for (int v = bounds[i]; v < bounds[i + 1]; ++v) part[static_cast<std::size_t>(v)] = static_cast<int>(i);
    return part;
}

void compute_centroids(SuperpixelMap& map) {
    std::vector<double> row_sum(static_cast<std::size_t>(map.n_actual), 0.0);
    std::vector<double> col_sum(static_cast<std::size_t>(map.n_actual), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(map.n_actual), 0);
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            const auto s = static_cast<std::size_t>(map.at(r, c));
            row_sum[s] += r;
            col_sum[s] += c;
            ++count[s];
        }
    }
    map.centroids.resize(static_cast<std::size_t>(map.n_actual));
    for (std::size_t s = 0; s < map.centroids.size(); ++s) {
        if (count[s] == 0) throw DataError("superpixel " + std::to_string(s) + " is empty");
        map.centroids[s] = {row_sum[s] / count[s], col_sum[s] / count[s]};
    }
}

void check_segment_count(const LabeledImage& img, int n_requested) {
    img.validate_shape();
    if (n_requested < 4) throw ConfigError("superpixel count must be >= 4");
    if (static_cast<std::size_t>(n_requested) > img.pixel_count())
        throw ConfigError("superpixel count exceeds pixel count");
}

struct GridShape {
    int rows, cols;
};

GridShape grid_shape(int height, int width, int n_requested) {
    const int per_side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_requested))));
    int rows = std::min(per_side, height);
    int cols = std::min(per_side, width);
    while (static_cast<std::int64_t>(rows) * cols < n_requested) {
        if (cols < width)
            ++cols;
        else
            ++rows;
    }
    return {rows, cols};
}

// Dense relabel in order of first appearance over a row-major scan.
void compact_labels(SuperpixelMap& map) {
    std::vector<std::int32_t> remap(map.n_actual > 0 ? static_cast<std::size_t>(map.n_actual) : 0, -1);
    std::int32_t next = 0;
    for (auto& v : map.assignment) {
        auto& slot = remap[static_cast<std::size_t>(v)];
        if (slot < 0) slot = next++;
        v = slot;
    }
    map.n_actual = next;
}

} // namespace

int BlockGrid::block_of_point(double row, double col) const {
    auto locate = [](const std::vector<int>& bounds, double v) {
        int part = 0;
        for (std::size_t i = 1; i + 1 < bounds.size(); ++i)
            if (v >= bounds[i]) part = static_cast<int>(i);
        return part;
    };
    return locate(row_bounds, row) * g + locate(col_bounds, col);
}

BlockGrid make_block_grid(int height, int width, int g) {
    if (g < 1) throw ConfigError("blocks per side must be >= 1");
    if (g > height || g > width) throw ConfigError("blocks per side exceeds image size");
    BlockGrid grid;
    grid.g = g;
    grid.row_bounds = balanced_bounds(height, g);
    grid.col_bounds = balanced_bounds(width, g);
    return grid;
}

SuperpixelMap segment_grid(const LabeledImage& img, int n_requested) {
    check_segment_count(img, n_requested);

    SuperpixelMap map;
    map.height = img.height;
    map.width = img.width;
    map.assignment.resize(static_cast<std::size_t>(img.pixel_count()));

    if (static_cast<std::size_t>(n_requested) == img.pixel_count()) {
        std::iota(map.assignment.begin(), map.assignment.end(), 0);
        map.n_actual = n_requested;
        compute_centroids(map);
        return map;
    }

    const GridShape shape = grid_shape(img.height, img.width, n_requested);
    const auto row_part = part_of_index(balanced_bounds(img.height, shape.rows));
    const auto col_part = part_of_index(balanced_bounds(img.width, shape.cols));
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c)
            map.assignment[static_cast<std::size_t>(r) * img.width + c] =
                row_part[static_cast<std::size_t>(r)] * shape.cols + col_part[static_cast<std::size_t>(c)];
    map.n_actual = shape.rows * shape.cols;
    compute_centroids(map);
    return map;
}

namespace {

struct SlicPoint {
    double l, a, b, sr, sc; // Lab plus spatially scaled row/col
};

struct SlicCenter {
    SlicPoint f;
    double row, col; // unscaled, for the search window
};

double dist2(const SlicPoint& x, const SlicPoint& y) {
    const double dl = x.l - y.l, da = x.a - y.a, db = x.b - y.b;
    const double dr = x.sr - y.sr, dc = x.sc - y.sc;
    return dl * dl + da * da + db * db + dr * dr + dc * dc;
}

// Each cluster keeps only its largest 4-connected component; every other
// component takes the label of the nearest kept component across the
// component graph, so each final segment is a single connected region.
void enforce_connectivity(SuperpixelMap& map) {
    const int h = map.height, w = map.width;
    const std::size_t n_px = map.assignment.size();
    std::vector<std::int32_t> comp_of(n_px, -1);
    std::vector<std::int64_t> comp_size;
    std::vector<std::int32_t> comp_label;

    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n_px; ++start) {
        if (comp_of[start] >= 0) continue;
        const auto comp = static_cast<std::int32_t>(comp_size.size());
        const std::int32_t label = map.assignment[start];
        comp_size.push_back(0);
        comp_label.push_back(label);
        stack.assign(1, start);
        comp_of[start] = comp;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            ++comp_size[static_cast<std::size_t>(comp)];
            const int r = static_cast<int>(p) / w, c = static_cast<int>(p) % w;
            const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (const auto& rc : nbr) {
                if (rc[0] < 0 || rc[0] >= h || rc[1] < 0 || rc[1] >= w) continue;
                const std::size_t q = static_cast<std::size_t>(rc[0]) * w + rc[1];
                if (comp_of[q] < 0 && map.assignment[q] == label) {
                    comp_of[q] = comp;
                    stack.push_back(q);
                }
            }
        }
    }

    const auto n_comp = static_cast<std::int32_t>(comp_size.size());

    // Kept component per cluster: largest, ties to the earliest component.
    std::vector<std::int32_t> kept(static_cast<std::size_t>(map.n_actual), -1);
    for (std::int32_t comp = 0; comp < n_comp; ++comp) {
        auto& best = kept[static_cast<std::size_t>(comp_label[static_cast<std::size_t>(comp)])];
        if (best < 0 || comp_size[static_cast<std::size_t>(comp)] > comp_size[static_cast<std::size_t>(best)])
            best = comp;
    }

    std::vector<std::vector<std::int32_t>> comp_adj(static_cast<std::size_t>(n_comp));
    auto note_edge = [&](std::int32_t a, std::int32_t b) {
        if (a == b) return;
        comp_adj[static_cast<std::size_t>(a)].push_back(b);
        comp_adj[static_cast<std::size_t>(b)].push_back(a);
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t p = static_cast<std::size_t>(r) * w + c;
            if (c + 1 < w) note_edge(comp_of[p], comp_of[p + 1]);
            if (r + 1 < h) note_edge(comp_of[p], comp_of[p + static_cast<std::size_t>(w)]);
        }
    }
    for (auto& adj : comp_adj) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }

    // Breadth-first wave outward from the kept components. Every stray
    // component is reached through a chain of touching components, so the
    // region that ends up under each label stays connected.
    std::vector<std::int32_t> final_label(static_cast<std::size_t>(n_comp), -1);
    std::vector<std::int32_t> frontier;
    frontier.reserve(static_cast<std::size_t>(n_comp));
    for (const std::int32_t comp : kept) {
        final_label[static_cast<std::size_t>(comp)] = comp_label[static_cast<std::size_t>(comp)];
        frontier.push_back(comp);
    }
    for (std::size_t head = 0; head < frontier.size(); ++head) {
        const std::int32_t u = frontier[head];
        for (const std::int32_t v : comp_adj[static_cast<std::size_t>(u)]) {
            if (final_label[static_cast<std::size_t>(v)] >= 0) continue;
            final_label[static_cast<std::size_t>(v)] = final_label[static_cast<std::size_t>(u)];
            frontier.push_back(v);
        }
    }

    for (std::size_t p = 0; p < n_px; ++p)
        map.assignment[p] = final_label[static_cast<std::size_t>(comp_of[p])];
    compact_labels(map);
}

} // namespace

SuperpixelMap segment_slic(const LabeledImage& img, int n_requested, double compactness, int iters) {
    check_segment_count(img, n_requested);
    if (!(compactness > 0.0)) throw ConfigError("compactness must be > 0");
    if (iters < 1) throw ConfigError("slic iteration count must be >= 1");

    const int h = img.height, w = img.width;
    const double s = std::sqrt(static_cast<double>(h) * w / n_requested);
    const double spatial = compactness / s;

    std::vector<SlicPoint> points(static_cast<std::size_t>(img.pixel_count()));
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const std::size_t p = static_cast<std::size_t>(r) * w + c;
            const Lab lab = srgb_to_lab(img.channel(r, c, 0), img.channel(r, c, 1), img.channel(r, c, 2));
            points[p] = {lab.l, lab.a, lab.b, r * spatial, c * spatial};
        }
    }

    const GridShape shape = grid_shape(h, w, n_requested);
    const auto row_bounds = balanced_bounds(h, shape.rows);
    const auto col_bounds = balanced_bounds(w, shape.cols);
    std::vector<SlicCenter> centers;
    centers.reserve(static_cast<std::size_t>(shape.rows) * shape.cols);
    for (int tr = 0; tr < shape.rows; ++tr) {
        for (int tc = 0; tc < shape.cols; ++tc) {
            const int r = (row_bounds[static_cast<std::size_t>(tr)] + row_bounds[static_cast<std::size_t>(tr) + 1] - 1) / 2;
            const int c = (col_bounds[static_cast<std::size_t>(tc)] + col_bounds[static_cast<std::size_t>(tc) + 1] - 1) / 2;
            centers.push_back({points[static_cast<std::size_t>(r) * w + c], static_cast<double>(r), static_cast<double>(c)});
        }
    }

    SuperpixelMap map;
    map.height = h;
    map.width = w;
    map.n_actual = static_cast<int>(centers.size());
    map.assignment.assign(static_cast<std::size_t>(img.pixel_count()), -1);

    const int window = std::max(1, static_cast<int>(std::lround(2.0 * s)));
    std::vector<double> best(static_cast<std::size_t>(img.pixel_count()));

    for (int it = 0; it < iters; ++it) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < centers.size(); ++k) {
            const auto& ctr = centers[k];
            const int r0 = std::max(0, static_cast<int>(std::lround(ctr.row)) - window);
            const int r1 = std::min(h - 1, static_cast<int>(std::lround(ctr.row)) + window);
            const int c0 = std::max(0, static_cast<int>(std::lround(ctr.col)) - window);
            const int c1 = std::min(w - 1, static_cast<int>(std::lround(ctr.col)) + window);
            for (int r = r0; r <= r1; ++r) {
                for (int c = c0; c <= c1; ++c) {
                    const std::size_t p = static_cast<std::size_t>(r) * w + c;
                    const double d = dist2(points[p], ctr.f);
                    if (d < best[p]) {
                        best[p] = d;
                        map.assignment[p] = static_cast<std::int32_t>(k);
                    }
                }
            }
        }
        // Pixels outside every window fall back to a full scan.
        for (std::size_t p = 0; p < map.assignment.size(); ++p) {
            if (map.assignment[p] >= 0) continue;
            double d_best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < centers.size(); ++k) {
                const double d = dist2(points[p], centers[k].f);
                if (d < d_best) {
                    d_best = d;
                    map.assignment[p] = static_cast<std::int32_t>(k);
                }
            }
        }

        std::vector<SlicPoint> sum(centers.size(), SlicPoint{0, 0, 0, 0, 0});
        std::vector<double> row_sum(centers.size(), 0.0), col_sum(centers.size(), 0.0);
        std::vector<std::int64_t> count(centers.size(), 0);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                const std::size_t p = static_cast<std::size_t>(r) * w + c;
                const auto k = static_cast<std::size_t>(map.assignment[p]);
                sum[k].l += points[p].l;
                sum[k].a += points[p].a;
                sum[k].b += points[p].b;
                sum[k].sr += points[p].sr;
                sum[k].sc += points[p].sc;
                row_sum[k] += r;
                col_sum[k] += c;
                ++count[k];
            }
        }
        for (std::size_t k = 0; k < centers.size(); ++k) {
            if (count[k] == 0) continue;
            const double inv = 1.0 / static_cast<double>(count[k]);
            centers[k].f = {sum[k].l * inv, sum[k].a * inv, sum[k].b * inv, sum[k].sr * inv, sum[k].sc * inv};
            centers[k].row = row_sum[k] * inv;
            centers[k].col = col_sum[k] * inv;
        }
    }

    compact_labels(map);
    enforce_connectivity(map);
    compute_centroids(map);
    return map;
}

std::vector<std::vector<std::int32_t>> build_adjacency(const SuperpixelMap& map) {
    std::vector<std::vector<std::int32_t>> adj(static_cast<std::size_t>(map.n_actual));
    auto note = [&](std::int32_t a, std::int32_t b) {
        if (a == b) return;
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    };
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            if (c + 1 < map.width) note(map.at(r, c), map.at(r, c + 1));
            if (r + 1 < map.height) note(map.at(r, c), map.at(r + 1, c));
        }
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

std::vector<std::int32_t> assign_blocks(const SuperpixelMap& map, int g) {
    const BlockGrid grid = make_block_grid(map.height, map.width, g);
    std::vector<std::int32_t> block_of(static_cast<std::size_t>(map.n_actual));
    for (std::size_t s = 0; s < block_of.size(); ++s)
        block_of[s] = static_cast<std::int32_t>(grid.block_of_point(map.centroids[s][0], map.centroids[s][1]));
    return block_of;
}

std::vector<std::int32_t> superpixel_majority_labels(const SuperpixelMap& map,
                                                     const std::vector<std::int32_t>& labels) {
    if (labels.size() != map.assignment.size())
        throw DataError("label raster does not match superpixel map size");
    std::int32_t max_label = -1;
    for (const auto v : labels) max_label = std::max(max_label, v);
    if (max_label < 0) return std::vector<std::int32_t>(static_cast<std::size_t>(map.n_actual), -1);

    std::vector<std::int64_t> counts(static_cast<std::size_t>(map.n_actual) *
                                     (static_cast<std::size_t>(max_label) + 1));
    for (std::size_t p = 0; p < labels.size(); ++p) {
        if (labels[p] < 0) continue;
        counts[static_cast<std::size_t>(map.assignment[p]) * (static_cast<std::size_t>(max_label) + 1) +
               static_cast<std::size_t>(labels[p])]++;
    }

    std::vector<std::int32_t> majority(static_cast<std::size_t>(map.n_actual), -1);
    for (std::int32_t s = 0; s < map.n_actual; ++s) {
        std::int64_t best = 0;
        for (std::int32_t cls = 0; cls <= max_label; ++cls) {
            const std::int64_t n = counts[static_cast<std::size_t>(s) * (static_cast<std::size_t>(max_label) + 1) +
                                          static_cast<std::size_t>(cls)];
            if (n > best) {
                best = n;
                majority[static_cast<std::size_t>(s)] = cls;
            }
        }
    }
    return majority;
}

void check_superpixel_invariants(const SuperpixelMap& map) {
    if (map.assignment.size() != static_cast<std::size_t>(map.height) * map.width)
        throw DataError("assignment size does not match image size");
    std::vector<std::int64_t> count(static_cast<std::size_t>(map.n_actual), 0);
    for (const auto v : map.assignment) {
        if (v < 0 || v >= map.n_actual) throw DataError("superpixel index out of range");
        ++count[static_cast<std::size_t>(v)];
    }
    for (std::size_t s = 0; s < count.size(); ++s)
        if (count[s] == 0) throw DataError("superpixel " + std::to_string(s) + " is empty");
    if (!map.neighbors.empty()) {
        if (map.neighbors.size() != static_cast<std::size_t>(map.n_actual))
            throw DataError("neighbor list count does not match superpixel count");
        for (std::size_t i = 0; i < map.neighbors.size(); ++i) {
            for (const auto j : map.neighbors[i]) {
                if (j < 0 || j >= map.n_actual || static_cast<std::size_t>(j) == i)
                    throw DataError("adjacency list is not irreflexive and in range");
                const auto& back = map.neighbors[static_cast<std::size_t>(j)];
                if (!std::binary_search(back.begin(), back.end(), static_cast<std::int32_t>(i)))
                    throw DataError("adjacency is not symmetric");
            }
        }
    }
}

Raster8 overlay_boundaries(const LabeledImage& img, const SuperpixelMap& map) {
    Raster8 out;
    out.height = img.height;
    out.width = img.width;
    out.channels = 3;
    out.data = img.pixels;
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const bool edge = (c + 1 < img.width && map.at(r, c) != map.at(r, c + 1)) ||
                              (r + 1 < img.height && map.at(r, c) != map.at(r + 1, c));
            if (!edge) continue;
            const std::size_t o = (static_cast<std::size_t>(r) * img.width + c) * 3;
            out.data[o + 0] = out.data[o + 1] = out.data[o + 2] = 0;
        }
    }
    return out;
}

} // namespace sceneparse
