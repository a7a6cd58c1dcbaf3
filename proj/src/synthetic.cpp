#include "sceneparse/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "sceneparse/rng.hpp"

namespace sceneparse {

namespace {

constexpr int kBandQuantum = 16; // horizon/water boundaries snap to this grid
constexpr double kHorizonJitter = 0.25;
constexpr int kBlobRadiusMin = 8;
constexpr int kBlobRadiusMax = 24;
constexpr int kGroundMargin = 4; // bottom rows stay blob-free so ground is never fully occluded

struct Color {
    double r, g, b;
};

// Sky and water intentionally share this sampler; only vertical position
// and learned context can tell them apart.
Color sample_sky_like(Rng& rng) {
    return {rng.uniform(60.0, 120.0), rng.uniform(110.0, 170.0), rng.uniform(170.0, 230.0)};
}

Color sample_ground(Rng& rng) {
    return {rng.uniform(90.0, 150.0), rng.uniform(80.0, 130.0), rng.uniform(30.0, 80.0)};
}

Color blob_base(int object_class_index, Rng& rng) {
    static constexpr double kBases[3][3] = {
        {205.0, 60.0, 50.0},  // object-a: red
        {230.0, 200.0, 45.0}, // object-b: yellow
        {175.0, 60.0, 205.0}, // object-c: magenta
    };
    const double* base = kBases[object_class_index];
    const double jitter = 20.0;
    return {base[0] + rng.uniform(-jitter, jitter),
            base[1] + rng.uniform(-jitter, jitter),
            base[2] + rng.uniform(-jitter, jitter)};
}

std::uint8_t noisy(double base, Rng& rng) {
    const double v = base + rng.uniform(-14.0, 14.0);
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

int snap_band(double row, int side) {
    const long q = std::lround(row / kBandQuantum);
    const int snapped = static_cast<int>(q) * kBandQuantum;
    return std::clamp(snapped, kBandQuantum, side - kBandQuantum);
}

LabeledImage make_scene(const SceneSpec& spec, std::uint64_t scene_seed, const std::string& id) {
    Rng rng(scene_seed);
    const int side = spec.side;
    LabeledImage img;
    img.id = id;
    img.height = side;
    img.width = side;
    img.pixels.resize(static_cast<std::size_t>(side) * side * 3);
    img.labels.assign(static_cast<std::size_t>(side) * side, -1);

    // Every scene stacks sky, a water band, and ground. Sky never touches
    // ground, so what sits above ground is always water; only that relation
    // and height separate the two sky-like textures. The ground band keeps a
    // quantum-aligned minimum height so blobs have room.
    const int ground_min = kBandQuantum * std::max(1, side / (4 * kBandQuantum));
    const int horizon = std::min(snap_band(side * (0.5 + kHorizonJitter * rng.uniform(-1.0, 1.0)), side),
                                 side - ground_min - kBandQuantum);
    const int water_bottom = std::min(horizon + kBandQuantum, side - ground_min);

    const Color sky = sample_sky_like(rng);
    const Color water = sample_sky_like(rng);
    const Color ground = sample_ground(rng);

    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const Color* base;
            int label;
            if (r < horizon) {
                base = &sky;
                label = 0;
            } else if (r < water_bottom) {
                base = &water;
                label = 1;
            } else {
                base = &ground;
                label = 2;
            }
            const std::size_t o = (static_cast<std::size_t>(r) * side + c) * 3;
            img.pixels[o + 0] = noisy(base->r, rng);
            img.pixels[o + 1] = noisy(base->g, rng);
            img.pixels[o + 2] = noisy(base->b, rng);
            img.labels[static_cast<std::size_t>(r) * side + c] = label;
        }
    }

    const int n_object_classes = spec.n_classes - 3;
    const int n_blobs = static_cast<int>(rng.uniform_int(1, 3));
    for (int b = 0; b < n_blobs; ++b) {
        const int object_idx = static_cast<int>(rng.uniform_int(0, n_object_classes - 1));
        const int label = 3 + object_idx;
        const int radius = static_cast<int>(rng.uniform_int(kBlobRadiusMin, kBlobRadiusMax));
        const int cr = static_cast<int>(rng.uniform_int(water_bottom + 4, side - 5));
        const int cc = static_cast<int>(rng.uniform_int(4, side - 5));
        const Color color = blob_base(object_idx, rng);

        // Blobs are foreground objects on the ground band; rows above
        // water_bottom stay pure sky or water, and the bottom margin stays ground.
        const int r0 = std::max(water_bottom, cr - radius);
        const int r1 = std::min(side - 1 - kGroundMargin, cr + radius);
        const int c0 = std::max(0, cc - radius), c1 = std::min(side - 1, cc + radius);
        for (int r = r0; r <= r1; ++r) {
            for (int c = c0; c <= c1; ++c) {
                const int dr = r - cr, dc = c - cc;
                if (dr * dr + dc * dc > radius * radius) continue;
                const std::size_t o = (static_cast<std::size_t>(r) * side + c) * 3;
                img.pixels[o + 0] = noisy(color.r, rng);
                img.pixels[o + 1] = noisy(color.g, rng);
                img.pixels[o + 2] = noisy(color.b, rng);
                img.labels[static_cast<std::size_t>(r) * side + c] = label;
            }
        }
    }
    return img;
}

} // namespace

Dataset generate_synthetic(const SceneSpec& spec, std::uint64_t seed) {
    if (spec.n_classes < 4 || spec.n_classes > 6)
        throw ConfigError("synthetic class count must be 4..6, got " + std::to_string(spec.n_classes));
    if (spec.side < 3 * kBandQuantum)
        throw ConfigError("synthetic image side must be >= " + std::to_string(3 * kBandQuantum));
    if (spec.scenes < 1) throw ConfigError("synthetic scene count must be >= 1");

    Dataset ds;
    ds.classes.names = {"sky", "water", "ground", "object-a"};
    if (spec.n_classes >= 5) ds.classes.names.push_back("object-b");
    if (spec.n_classes >= 6) ds.classes.names.push_back("object-c");

    ds.images.reserve(static_cast<std::size_t>(spec.scenes));
    for (int s = 0; s < spec.scenes; ++s) {
        char id[32];
        std::snprintf(id, sizeof(id), "synth-%04d", s);
        ds.images.push_back(make_scene(spec, derive_seed(seed, "scene", static_cast<std::uint64_t>(s)), id));
    }
    return ds;
}

} // namespace sceneparse
