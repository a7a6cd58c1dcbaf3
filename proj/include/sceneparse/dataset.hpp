#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sceneparse/image.hpp"

namespace sceneparse {

/// Ordered class names plus an optional raw-label grouping map.
/// Raw labels run through map_raw(): negatives and unmapped raws go to -1.
struct ClassTable {
    std::vector<std::string> names;
    std::map<std::int32_t, std::int32_t> grouping; // raw -> grouped, empty = identity

    int n_classes() const { return static_cast<int>(names.size()); }

    /// Grouped index in [0, n_classes) or -1 for unknown. With an identity
    /// table, a non-negative raw >= n_classes is a data error and throws.
    std::int32_t map_raw(std::int32_t raw) const;

    void validate() const;
    bool operator==(const ClassTable&) const = default;
};

/// Fixed render palette; index is the grouped class index.
std::array<std::uint8_t, 3> class_color(int index);

struct Dataset {
    std::vector<LabeledImage> images;
    ClassTable classes;

    const LabeledImage* find(const std::string& id) const;
};

struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

/// Class config text: `name = <class>` lines in class order, optional
/// `group <raw> -> <index>` lines.
ClassTable parse_class_config(const std::string& path);
void write_class_config(const std::string& path, const ClassTable& table);

/// Loads `root/images/<id>.(png|ppm)` with `root/labels/<id>.(txt|pgm)`,
/// remapping raw labels through the class table.
Dataset load_dataset(const std::string& root, const std::string& class_config_path);

/// Convenience overload: class config at `root/classes.cfg`.
Dataset load_dataset(const std::string& root);

/// Writes images as PNG, labels as text maps, and `classes.cfg`.
void save_dataset(const Dataset& dataset, const std::string& root);

/// Seeded shuffle; |train| = round(ratio * n).
DatasetSplit split_dataset(const std::vector<std::string>& ids, double ratio, std::uint64_t seed);

// --- synthetic desk-scale scenes -----------------------------------------

/// Horizon scenes: sky above, optional water band then ground below, 1-3
/// colored blobs. Sky and water sample the same color model, so only
/// vertical position and context separate them.
struct SceneSpec {
    int side = 128;
    int n_classes = 5; // 4..6: sky, water, ground, then 1-3 object classes
    int scenes = 50;
};

Dataset generate_synthetic(const SceneSpec& spec, std::uint64_t seed);

} // namespace sceneparse
