#include "sceneparse/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sceneparse/rng.hpp"

namespace fs = std::filesystem;

namespace sceneparse {

std::int32_t ClassTable::map_raw(std::int32_t raw) const {
    if (raw < 0) return -1;
    if (grouping.empty()) {
        if (raw >= n_classes())
            throw DataError("raw label " + std::to_string(raw) + " >= " +
                            std::to_string(n_classes()) + " classes after grouping");
        return raw;
    }
    auto it = grouping.find(raw);
    return it == grouping.end() ? -1 : it->second;
}

void ClassTable::validate() const {
    if (names.empty()) throw ConfigError("class table has no classes");
    std::set<std::string> uniq(names.begin(), names.end());
    if (uniq.size() != names.size()) throw ConfigError("class names are not unique");
    if (!grouping.empty()) {
        std::set<std::int32_t> targets;
        for (const auto& [raw, idx] : grouping) {
            if (raw < 0) throw ConfigError("grouping maps negative raw label " + std::to_string(raw));
            if (idx < 0 || idx >= n_classes())
                throw ConfigError("grouping target " + std::to_string(idx) + " outside [0, " +
                                  std::to_string(n_classes()) + ")");
            targets.insert(idx);
        }
        if (static_cast<int>(targets.size()) != n_classes())
            throw ConfigError("grouped indices are not dense in [0, n_classes)");
    }
}

std::array<std::uint8_t, 3> class_color(int index) {
    static constexpr std::array<std::array<std::uint8_t, 3>, 16> kPalette = {{
        {70, 130, 220},  {60, 180, 200},  {120, 90, 50},   {220, 60, 50},
        {235, 200, 40},  {170, 60, 200},  {60, 200, 80},   {240, 130, 30},
        {130, 130, 130}, {250, 100, 170}, {40, 90, 40},    {200, 200, 230},
        {100, 50, 140},  {20, 20, 90},    {180, 140, 100}, {0, 0, 0},
    }};
    if (index < 0) return {0, 0, 0};
    return kPalette[static_cast<std::size_t>(index) % kPalette.size()];
}

const LabeledImage* Dataset::find(const std::string& id) const {
    for (const auto& img : images)
        if (img.id == id) return &img;
    return nullptr;
}

namespace {

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

ClassTable parse_class_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open class config '" + path + "'");
    ClassTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.rfind("name", 0) == 0) {
            std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'name = <class>'");
            table.names.push_back(strip(s.substr(eq + 1)));
        } else if (s.rfind("group", 0) == 0) {
            std::istringstream ss(s.substr(5));
            std::int32_t raw = 0, idx = 0;
            std::string arrow;
            if (!(ss >> raw >> arrow >> idx) || arrow != "->")
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'group <raw> -> <idx>'");
            table.grouping[raw] = idx;
        } else {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unrecognized line '" + s + "'");
        }
    }
    table.validate();
    return table;
}

void write_class_config(const std::string& path, const ClassTable& table) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (const auto& name : table.names) out << "name = " << name << "\n";
    for (const auto& [raw, idx] : table.grouping) out << "group " << raw << " -> " << idx << "\n";
}

namespace {

std::vector<std::int32_t> load_label_file(const fs::path& labels_dir, const std::string& id,
                                          int& height, int& width) {
    const fs::path txt = labels_dir / (id + ".txt");
    if (fs::exists(txt)) return read_label_text(txt.string(), height, width);
    const fs::path pgm = labels_dir / (id + ".pgm");
    if (fs::exists(pgm)) {
        Raster8 r = read_pnm(pgm.string());
        if (r.channels != 1) throw DataError("label file '" + pgm.string() + "' is not grayscale");
        height = r.height;
        width = r.width;
        return std::vector<std::int32_t>(r.data.begin(), r.data.end());
    }
    throw DataError("missing label file for image '" + id + "'");
}

} // namespace

Dataset load_dataset(const std::string& root, const std::string& class_config_path) {
    Dataset ds;
    ds.classes = parse_class_config(class_config_path);

    const fs::path images_dir = fs::path(root) / "images";
    const fs::path labels_dir = fs::path(root) / "labels";
    if (!fs::is_directory(images_dir))
        throw DataError("dataset root '" + root + "' has no images/ directory");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(images_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".ppm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no images found under '" + images_dir.string() + "'");

    for (const auto& file : files) {
        LabeledImage img;
        img.id = file.stem().string();
        Raster8 raster = read_image_any(file.string());
        img.height = raster.height;
        img.width = raster.width;
        img.pixels = std::move(raster.data);

        int lh = 0, lw = 0;
        std::vector<std::int32_t> raw = load_label_file(labels_dir, img.id, lh, lw);
        if (lh != img.height || lw != img.width)
            throw DataError("image '" + img.id + "': label map is " + std::to_string(lh) + "x" +
                            std::to_string(lw) + " but image is " + std::to_string(img.height) +
                            "x" + std::to_string(img.width));
        img.labels.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i)
            img.labels[i] = ds.classes.map_raw(raw[i]);
        img.validate_shape();
        ds.images.push_back(std::move(img));
    }
    return ds;
}

Dataset load_dataset(const std::string& root) {
    return load_dataset(root, (fs::path(root) / "classes.cfg").string());
}

void save_dataset(const Dataset& dataset, const std::string& root) {
    const fs::path images_dir = fs::path(root) / "images";
    const fs::path labels_dir = fs::path(root) / "labels";
    fs::create_directories(images_dir);
    fs::create_directories(labels_dir);
    write_class_config((fs::path(root) / "classes.cfg").string(), dataset.classes);
    for (const auto& img : dataset.images) {
        write_png_rgb((images_dir / (img.id + ".png")).string(), img.height, img.width, img.pixels);
        write_label_text((labels_dir / (img.id + ".txt")).string(), img.height, img.width, img.labels);
    }
}

DatasetSplit split_dataset(const std::vector<std::string>& ids, double ratio, std::uint64_t seed) {
    if (ids.empty()) throw DataError("cannot split an empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw ConfigError("split ratio must be in (0, 1), got " + std::to_string(ratio));

    std::vector<std::string> shuffled = ids;
    Rng rng(seed);
    rng.shuffle(shuffled);

    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ids.size())));
    DatasetSplit split;
    split.seed = seed;
    split.train.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(n_train), shuffled.end());
    return split;
}

} // namespace sceneparse
