#pragma once

#include <string>
#include <vector>

#include "sceneparse/image.hpp"
#include "sceneparse/matrix.hpp"
#include "sceneparse/superpixels.hpp"

namespace sceneparse {

struct CatalogEntry {
    std::string name;
    int dims;
};

// Fixed, versioned feature layout. Saved models record the version so a
// feature mask is never applied to a layout it was not selected on.
struct FeatureCatalog {
    int version = 0;
    std::vector<CatalogEntry> entries;

    int total_dims() const;
    std::vector<std::string> dim_names() const;
};

// Version 1, 60 dimensions:
//   rgb mean/std (6), hsv circular-hue mean as cos+sin, sat/val mean+std (6),
//   8-bin per-channel rgb histogram (24), gradient magnitude mean/std (2),
//   8-bin gradient orientation histogram (8), reduced lbp histogram (10),
//   normalized centroid (2), normalized area (1), bounding-box aspect (1).
FeatureCatalog default_catalog();

// One row per superpixel, columns per default_catalog().
Matrix extract_features(const LabeledImage& img, const SuperpixelMap& map);

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> stddev; // entries below 1e-12 are clamped to 1

    void apply_row(double* row, std::size_t n) const;
};

Standardizer fit_standardizer(const Matrix& train_rows);
void apply_standardizer(const Standardizer& st, Matrix& rows);

void write_features_csv(std::ostream& out, const FeatureCatalog& catalog, const Matrix& rows);

} // namespace sceneparse
