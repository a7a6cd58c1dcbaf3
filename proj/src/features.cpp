#include "sceneparse/features.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sceneparse/color.hpp"
#include "sceneparse/errors.hpp"

namespace sceneparse {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Accum {
    // Color sums; RGB uses integer accumulators so uniform regions come out
    // with an exact zero standard deviation.
    std::int64_t rgb_sum[3] = {0, 0, 0};
    std::int64_t rgb_sq[3] = {0, 0, 0};
    double hue_cos = 0, hue_sin = 0;
    double sat = 0, sat_sq = 0, val = 0, val_sq = 0;
    std::int64_t hist[3][8] = {};
    double grad_sum = 0, grad_sq = 0;
    double orient[8] = {};
    std::int64_t lbp[10] = {};
    std::int64_t count = 0;
    std::int64_t row_sum = 0, col_sum = 0;
    int row_min = 1 << 30, row_max = -1, col_min = 1 << 30, col_max = -1;
};

double safe_std(double sum, double sum_sq, double n) {
    const double var = sum_sq / n - (sum / n) * (sum / n);
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

int orientation_bin(double gy, double gx) {
    const double theta = std::atan2(gy, gx); // (-pi, pi]
    int bin = static_cast<int>((theta + kPi) / (2.0 * kPi / 8.0));
    return std::clamp(bin, 0, 7);
}

int lbp_bucket(unsigned code) {
    int transitions = 0;
    for (int i = 0; i < 8; ++i) {
        const unsigned a = (code >> i) & 1u;
        const unsigned b = (code >> ((i + 1) % 8)) & 1u;
        transitions += static_cast<int>(a != b);
    }
    if (transitions > 2) return 9;
    return static_cast<int>(__builtin_popcount(code));
}

} // namespace

int FeatureCatalog::total_dims() const {
    int total = 0;
    for (const auto& e : entries) total += e.dims;
    return total;
}

std::vector<std::string> FeatureCatalog::dim_names() const {
    std::vector<std::string> names;
    for (const auto& e : entries) {
        if (e.dims == 1) {
            names.push_back(e.name);
        } else {
            for (int i = 0; i < e.dims; ++i) names.push_back(e.name + "_" + std::to_string(i));
        }
    }
    return names;
}

FeatureCatalog default_catalog() {
    FeatureCatalog cat;
    cat.version = 1;
    cat.entries = {
        {"rgb_mean", 3},    {"rgb_std", 3},     {"hue_mean_cos_sin", 2},
        {"sat_mean_std", 2}, {"val_mean_std", 2}, {"hist_r", 8},
        {"hist_g", 8},      {"hist_b", 8},      {"grad_mag_mean_std", 2},
        {"grad_orient", 8}, {"lbp", 10},        {"centroid", 2},
        {"area", 1},        {"aspect", 1},
    };
    return cat;
}

Matrix extract_features(const LabeledImage& img, const SuperpixelMap& map) {
    const int h = img.height, w = img.width;
    std::vector<Accum> acc(static_cast<std::size_t>(map.n_actual));

    std::vector<double> gray(static_cast<std::size_t>(h) * w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            gray[static_cast<std::size_t>(r) * w + c] =
                luma(img.channel(r, c, 0), img.channel(r, c, 1), img.channel(r, c, 2));

    auto gray_at = [&](int r, int c) {
        r = std::clamp(r, 0, h - 1);
        c = std::clamp(c, 0, w - 1);
        return gray[static_cast<std::size_t>(r) * w + c];
    };

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            auto& a = acc[static_cast<std::size_t>(map.at(r, c))];
            const std::uint8_t red = img.channel(r, c, 0);
            const std::uint8_t green = img.channel(r, c, 1);
            const std::uint8_t blue = img.channel(r, c, 2);
            const std::uint8_t rgb[3] = {red, green, blue};
            for (int ch = 0; ch < 3; ++ch) {
                a.rgb_sum[ch] += rgb[ch];
                a.rgb_sq[ch] += static_cast<std::int64_t>(rgb[ch]) * rgb[ch];
                a.hist[ch][rgb[ch] / 32]++;
            }

            const Hsv hsv = rgb_to_hsv(red, green, blue);
            const double hue_rad = hsv.h * kPi / 180.0;
            a.hue_cos += std::cos(hue_rad);
            a.hue_sin += std::sin(hue_rad);
            a.sat += hsv.s;
            a.sat_sq += hsv.s * hsv.s;
            a.val += hsv.v;
            a.val_sq += hsv.v * hsv.v;

            const double gx = gray_at(r - 1, c + 1) + 2.0 * gray_at(r, c + 1) + gray_at(r + 1, c + 1) -
                              gray_at(r - 1, c - 1) - 2.0 * gray_at(r, c - 1) - gray_at(r + 1, c - 1);
            const double gy = gray_at(r + 1, c - 1) + 2.0 * gray_at(r + 1, c) + gray_at(r + 1, c + 1) -
                              gray_at(r - 1, c - 1) - 2.0 * gray_at(r - 1, c) - gray_at(r - 1, c + 1);
            const double mag = std::sqrt(gx * gx + gy * gy);
            a.grad_sum += mag;
            a.grad_sq += mag * mag;
            if (mag > 0.0) {
                a.orient[orientation_bin(gy, gx)] += 1.0;
            } else {
                // Orientation of a zero gradient is undefined; spread the
                // vote so constant regions get an exactly flat histogram.
                for (double& bin : a.orient) bin += 1.0 / 8.0;
            }

            const double center = gray[static_cast<std::size_t>(r) * w + c];
            static constexpr int kRing[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, 1},
                                                {1, 1},   {1, 0},  {1, -1}, {0, -1}};
            unsigned code = 0;
            for (int i = 0; i < 8; ++i)
                if (gray_at(r + kRing[i][0], c + kRing[i][1]) >= center) code |= 1u << i;
            a.lbp[lbp_bucket(code)]++;

            ++a.count;
            a.row_sum += r;
            a.col_sum += c;
            a.row_min = std::min(a.row_min, r);
            a.row_max = std::max(a.row_max, r);
            a.col_min = std::min(a.col_min, c);
            a.col_max = std::max(a.col_max, c);
        }
    }

    Matrix out(static_cast<std::size_t>(map.n_actual), static_cast<std::size_t>(default_catalog().total_dims()));
    for (std::size_t s = 0; s < acc.size(); ++s) {
        const Accum& a = acc[s];
        const auto n = static_cast<double>(a.count);
        double* f = out.row(s).data();
        std::size_t i = 0;
        for (int ch = 0; ch < 3; ++ch) f[i++] = static_cast<double>(a.rgb_sum[ch]) / n / 255.0;
        for (int ch = 0; ch < 3; ++ch)
            f[i++] = safe_std(static_cast<double>(a.rgb_sum[ch]), static_cast<double>(a.rgb_sq[ch]), n) / 255.0;
        f[i++] = a.hue_cos / n;
        f[i++] = a.hue_sin / n;
        f[i++] = a.sat / n;
        f[i++] = safe_std(a.sat, a.sat_sq, n);
        f[i++] = a.val / n;
        f[i++] = safe_std(a.val, a.val_sq, n);
        for (int ch = 0; ch < 3; ++ch)
            for (int b = 0; b < 8; ++b) f[i++] = static_cast<double>(a.hist[ch][b]) / n;
        f[i++] = a.grad_sum / n;
        f[i++] = safe_std(a.grad_sum, a.grad_sq, n);
        for (int b = 0; b < 8; ++b) f[i++] = a.orient[b] / n;
        for (int b = 0; b < 10; ++b) f[i++] = static_cast<double>(a.lbp[b]) / n;
        f[i++] = (static_cast<double>(a.row_sum) / n + 0.5) / h;
        f[i++] = (static_cast<double>(a.col_sum) / n + 0.5) / w;
        f[i++] = n / (static_cast<double>(h) * w);
        f[i++] = static_cast<double>(a.col_max - a.col_min + 1) / (a.row_max - a.row_min + 1);
    }
    return out;
}

void Standardizer::apply_row(double* row, std::size_t n) const {
    if (n != mean.size()) throw DataError("feature width does not match standardizer");
    for (std::size_t j = 0; j < n; ++j) row[j] = (row[j] - mean[j]) / stddev[j];
}

Standardizer fit_standardizer(const Matrix& train_rows) {
    if (train_rows.rows < 2) throw DataError("standardizer needs at least 2 rows");
    Standardizer st;
    st.mean.assign(train_rows.cols, 0.0);
    st.stddev.assign(train_rows.cols, 0.0);
    for (std::size_t r = 0; r < train_rows.rows; ++r)
        for (std::size_t j = 0; j < train_rows.cols; ++j) st.mean[j] += train_rows.at(r, j);
    for (auto& m : st.mean) m /= static_cast<double>(train_rows.rows);
    for (std::size_t r = 0; r < train_rows.rows; ++r) {
        for (std::size_t j = 0; j < train_rows.cols; ++j) {
            const double d = train_rows.at(r, j) - st.mean[j];
            st.stddev[j] += d * d;
        }
    }
    for (auto& s : st.stddev) {
        s = std::sqrt(s / static_cast<double>(train_rows.rows));
        if (s < 1e-12) s = 1.0;
    }
    return st;
}

void apply_standardizer(const Standardizer& st, Matrix& rows) {
    for (std::size_t r = 0; r < rows.rows; ++r) st.apply_row(rows.row(r).data(), rows.cols);
}

void write_features_csv(std::ostream& out, const FeatureCatalog& catalog, const Matrix& rows) {
    const auto names = catalog.dim_names();
    if (names.size() != rows.cols) throw DataError("feature matrix width does not match catalog");
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << "\n";
    out.precision(17);
    for (std::size_t r = 0; r < rows.rows; ++r) {
        for (std::size_t j = 0; j < rows.cols; ++j) out << (j ? "," : "") << rows.at(r, j);
        out << "\n";
    }
}

} // namespace sceneparse
