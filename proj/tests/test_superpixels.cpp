#include "doctest.h"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "sceneparse/errors.hpp"
#include "sceneparse/superpixels.hpp"
#include "test_util.hpp"

using namespace sceneparse;

namespace {

// Independent adjacency oracle: scan every horizontal and vertical pixel
// pair and collect ordered segment pairs.
std::set<std::pair<std::int32_t, std::int32_t>> adjacency_oracle(const SuperpixelMap& map) {
    std::set<std::pair<std::int32_t, std::int32_t>> pairs;
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            if (c + 1 < map.width && map.at(r, c) != map.at(r, c + 1)) {
                pairs.emplace(map.at(r, c), map.at(r, c + 1));
                pairs.emplace(map.at(r, c + 1), map.at(r, c));
            }
            if (r + 1 < map.height && map.at(r, c) != map.at(r + 1, c)) {
                pairs.emplace(map.at(r, c), map.at(r + 1, c));
                pairs.emplace(map.at(r + 1, c), map.at(r, c));
            }
        }
    }
    return pairs;
}

std::set<std::pair<std::int32_t, std::int32_t>> adjacency_as_pairs(const SuperpixelMap& map) {
    std::set<std::pair<std::int32_t, std::int32_t>> pairs;
    for (std::int32_t s = 0; s < static_cast<std::int32_t>(map.neighbors.size()); ++s)
        for (std::int32_t t : map.neighbors[static_cast<std::size_t>(s)]) pairs.emplace(s, t);
    return pairs;
}

std::vector<std::size_t> segment_sizes(const SuperpixelMap& map) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(map.n_actual), 0);
    for (std::int32_t s : map.assignment) sizes[static_cast<std::size_t>(s)]++;
    return sizes;
}

// True when every segment is one 4-connected component.
bool segments_connected(const SuperpixelMap& map) {
    std::vector<char> seen(map.assignment.size(), 0);
    std::vector<char> segment_done(static_cast<std::size_t>(map.n_actual), 0);
    for (int r = 0; r < map.height; ++r) {
        for (int c = 0; c < map.width; ++c) {
            const std::size_t start = static_cast<std::size_t>(r) * map.width + c;
            if (seen[start]) continue;
            const std::int32_t s = map.assignment[start];
            if (segment_done[static_cast<std::size_t>(s)]) return false;
            segment_done[static_cast<std::size_t>(s)] = 1;
            std::queue<std::pair<int, int>> frontier;
            frontier.emplace(r, c);
            seen[start] = 1;
            while (!frontier.empty()) {
                const auto [pr, pc] = frontier.front();
                frontier.pop();
                const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int nr = pr + dr[k], nc = pc + dc[k];
                    if (nr < 0 || nr >= map.height || nc < 0 || nc >= map.width) continue;
                    const std::size_t np = static_cast<std::size_t>(nr) * map.width + nc;
                    if (seen[np] || map.assignment[np] != s) continue;
                    seen[np] = 1;
                    frontier.emplace(nr, nc);
                }
            }
        }
    }
    return true;
}

} // namespace

TEST_CASE("10x10 grid with four superpixels gives 5x5 tiles") {
    const LabeledImage img = testutil::uniform_image(10, 10, 128, 128, 128);
    SuperpixelMap map = segment_grid(img, 4);
    REQUIRE(map.n_actual == 4);
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) CHECK(map.at(r, c) == (r / 5) * 2 + (c / 5));
    const auto sizes = segment_sizes(map);
    for (std::size_t size : sizes) CHECK(size == 25);

    // 4-connectivity: corner tiles touch exactly two tiles, diagonals excluded.
    map.neighbors = build_adjacency(map);
    for (const auto& nbrs : map.neighbors) CHECK(nbrs.size() == 2);
    CHECK(map.centroids[0][0] == doctest::Approx(2.0));
    CHECK(map.centroids[0][1] == doctest::Approx(2.0));
    CHECK(map.centroids[3][0] == doctest::Approx(7.0));
    CHECK(map.centroids[3][1] == doctest::Approx(7.0));
}

TEST_CASE("256-superpixel grid on a 256x256 image is a 16x16 tiling") {
    const LabeledImage img = testutil::uniform_image(256, 256, 10, 10, 10);
    const SuperpixelMap map = segment_grid(img, 256);
    CHECK(map.n_actual == 256);
    const auto sizes = segment_sizes(map);
    for (std::size_t size : sizes) CHECK(size == 256);
}

TEST_CASE("one superpixel per pixel at the degenerate maximum") {
    const LabeledImage img = testutil::random_image(6, 7, 2);
    const SuperpixelMap map = segment_grid(img, 42);
    REQUIRE(map.n_actual == 42);
    for (int p = 0; p < 42; ++p) CHECK(map.assignment[static_cast<std::size_t>(p)] == p);
}

TEST_CASE("grid superpixel count stays within its contract bounds") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const LabeledImage img = testutil::random_image(11 + static_cast<int>(seed) * 3, 17, seed);
        for (int n : {4, 5, 9, 12, 30}) {
            const SuperpixelMap map = segment_grid(img, n);
            const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
            CHECK(map.n_actual >= n);
            CHECK(map.n_actual <= side * side);
            check_superpixel_invariants(map);
        }
    }
}

TEST_CASE("segmenters reject out-of-range superpixel counts") {
    const LabeledImage img = testutil::uniform_image(8, 8, 0, 0, 0);
    CHECK_THROWS_AS(segment_grid(img, 3), ConfigError);
    CHECK_THROWS_AS(segment_grid(img, 65), ConfigError);
    CHECK_THROWS_AS(segment_slic(img, 3, 10.0, 5), ConfigError);
    CHECK_THROWS_AS(segment_slic(img, 16, 10.0, 0), ConfigError);
    CHECK_THROWS_AS(segment_slic(img, 16, 0.0, 5), ConfigError);
}

TEST_CASE("slic on a uniform image matches the grid tiling up to tie lines") {
    const LabeledImage img = testutil::uniform_image(32, 32, 77, 77, 77);
    const SuperpixelMap slic = segment_slic(img, 16, 10.0, 10);
    check_superpixel_invariants(slic);
    REQUIRE(slic.n_actual == 16);
    CHECK(segments_connected(slic));

    // With a constant color the clustering is pure spatial Voronoi around the
    // 8x8 tile seeds, so any disagreement with the grid partition can only
    // happen on pixels exactly equidistant between two seeds.
    const SuperpixelMap grid = segment_grid(img, 16);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c)
            if (slic.at(r, c) != grid.at(r, c)) {
                const bool row_tie = r % 8 == 0 && r > 0;
                const bool col_tie = c % 8 == 0 && c > 0;
                CHECK((row_tie || col_tie));
            }
}

TEST_CASE("slic splits a two-tone image at the color boundary") {
    LabeledImage img = testutil::uniform_image(16, 16, 220, 40, 40);
    for (int r = 0; r < 16; ++r)
        for (int c = 8; c < 16; ++c)
            for (int ch = 0; ch < 3; ++ch) img.pixels[(static_cast<std::size_t>(r) * 16 + c) * 3 + ch] =
                static_cast<std::uint8_t>(ch == 2 ? 220 : 40);
    const SuperpixelMap map = segment_slic(img, 4, 1.0, 10);
    check_superpixel_invariants(map);
    // No segment may straddle the tone boundary between columns 7 and 8.
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 8; ++c)
            for (int c2 = 8; c2 < 16; ++c2) CHECK(map.at(r, c) != map.at(r, c2));
    }
}

TEST_CASE("slic is deterministic and connected on random images") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const LabeledImage img = testutil::random_image(24, 31, 100 + seed);
        const SuperpixelMap a = segment_slic(img, 12, 10.0, 6);
        const SuperpixelMap b = segment_slic(img, 12, 10.0, 6);
        CHECK(a.assignment == b.assignment);
        CHECK(a.n_actual == b.n_actual);
        check_superpixel_invariants(a);
        CHECK(segments_connected(a));
    }
}

TEST_CASE("adjacency matches the brute-force pixel-pair oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        LabeledImage img = testutil::random_image(8, 8, 7 + seed);
        SuperpixelMap map = seed % 2 == 0 ? segment_grid(img, 9)
                                          : segment_slic(img, 6, 5.0, 4);
        map.neighbors = build_adjacency(map);
        CHECK(adjacency_as_pairs(map) == adjacency_oracle(map));
    }
}

TEST_CASE("single superpixel has no neighbors") {
    const LabeledImage img = testutil::uniform_image(2, 2, 9, 9, 9);
    const SuperpixelMap map = segment_grid(img, 4);
    SuperpixelMap one;
    one.height = 2;
    one.width = 2;
    one.n_actual = 1;
    one.assignment.assign(4, 0);
    one.centroids = {{0.5, 0.5}};
    const auto nbrs = build_adjacency(one);
    REQUIRE(nbrs.size() == 1);
    CHECK(nbrs[0].empty());
    CHECK(map.n_actual == 4);
}

TEST_CASE("block grid covers the image with disjoint rectangles") {
    const BlockGrid grid = make_block_grid(25, 31, 4);
    REQUIRE(grid.row_bounds.size() == 5);
    REQUIRE(grid.col_bounds.size() == 5);
    CHECK(grid.row_bounds.front() == 0);
    CHECK(grid.row_bounds.back() == 25);
    CHECK(grid.col_bounds.front() == 0);
    CHECK(grid.col_bounds.back() == 31);
    for (std::size_t i = 1; i < grid.row_bounds.size(); ++i)
        CHECK(grid.row_bounds[i] > grid.row_bounds[i - 1]);
}

TEST_CASE("block of a centroid follows floor division on an even grid") {
    const BlockGrid grid = make_block_grid(256, 256, 4);
    CHECK(grid.block_of_point(10.0, 200.0) == 3);
    CHECK(grid.block_of_point(0.0, 0.0) == 0);
    CHECK(grid.block_of_point(255.0, 255.0) == 15);
}

TEST_CASE("g of one puts every superpixel in block zero") {
    const LabeledImage img = testutil::random_image(12, 12, 3);
    SuperpixelMap map = segment_grid(img, 9);
    const auto blocks = assign_blocks(map, 1);
    for (std::int32_t b : blocks) CHECK(b == 0);
}

TEST_CASE("a 16x16 tiling under a 4-per-side block grid gives 16 per block") {
    const LabeledImage img = testutil::uniform_image(256, 256, 50, 50, 50);
    const SuperpixelMap map = segment_grid(img, 256);
    const auto blocks = assign_blocks(map, 4);
    std::map<std::int32_t, int> per_block;
    for (std::int32_t b : blocks) per_block[b]++;
    REQUIRE(per_block.size() == 16);
    for (const auto& [block, count] : per_block) CHECK(count == 16);
}

TEST_CASE("assign_blocks rejects g below one") {
    const LabeledImage img = testutil::uniform_image(8, 8, 0, 0, 0);
    const SuperpixelMap map = segment_grid(img, 4);
    CHECK_THROWS_AS(assign_blocks(map, 0), ConfigError);
}

TEST_CASE("majority labels ignore unknowns and break ties downward") {
    const LabeledImage img = testutil::uniform_image(4, 4, 0, 0, 0);
    const SuperpixelMap map = segment_grid(img, 4); // four 2x2 tiles
    std::vector<std::int32_t> labels(16, -1);
    // Tile 0: labels {2,2,1,-1} -> majority 2.
    labels[0] = 2; labels[1] = 2; labels[4] = 1;
    // Tile 1 (cols 2..3): tie {0,0,3,3} -> smaller class 0.
    labels[2] = 0; labels[3] = 0; labels[6] = 3; labels[7] = 3;
    // Tile 2 (rows 2..3, cols 0..1): all unknown -> -1.
    // Tile 3: single vote.
    labels[10] = 1;
    const auto out = superpixel_majority_labels(map, labels);
    REQUIRE(out.size() == 4);
    CHECK(out[0] == 2);
    CHECK(out[1] == 0);
    CHECK(out[2] == -1);
    CHECK(out[3] == 1);
}

TEST_CASE("invariant checker rejects a broken partition") {
    const LabeledImage img = testutil::uniform_image(4, 4, 0, 0, 0);
    SuperpixelMap map = segment_grid(img, 4);
    map.assignment[0] = 99;
    CHECK_THROWS_AS(check_superpixel_invariants(map), DataError);
}

TEST_CASE("invariant checker rejects asymmetric adjacency") {
    const LabeledImage img = testutil::uniform_image(4, 4, 0, 0, 0);
    SuperpixelMap map = segment_grid(img, 4);
    map.neighbors = build_adjacency(map);
    map.neighbors[0].clear();
    CHECK_THROWS_AS(check_superpixel_invariants(map), DataError);
}

TEST_CASE("boundary overlay blackens segment borders only") {
    const LabeledImage img = testutil::uniform_image(10, 10, 200, 200, 200);
    SuperpixelMap map = segment_grid(img, 4);
    const Raster8 overlay = overlay_boundaries(img, map);
    REQUIRE(overlay.channels == 3);
    CHECK(overlay.data[(4 * 10 + 2) * 3] == 0);   // row boundary inside tile column
    CHECK(overlay.data[(2 * 10 + 4) * 3] == 0);   // column boundary
    CHECK(overlay.data[(1 * 10 + 1) * 3] == 200); // interior untouched
}

TEST_CASE("tile-aligned synthetic regions give label-pure grid superpixels") {
    LabeledImage img = testutil::uniform_image(32, 32, 0, 0, 0);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) img.label(r, c) = r < 16 ? 0 : 1;
    const SuperpixelMap map = segment_grid(img, 16); // 8x8 tiles
    const auto majors = superpixel_majority_labels(map, img.labels);
    std::vector<std::set<std::int32_t>> seen(static_cast<std::size_t>(map.n_actual));
    for (std::size_t p = 0; p < img.labels.size(); ++p)
        seen[static_cast<std::size_t>(map.assignment[p])].insert(img.labels[p]);
    for (std::size_t s = 0; s < seen.size(); ++s) {
        CHECK(seen[s].size() == 1);
        CHECK(*seen[s].begin() == majors[s]);
    }
}
