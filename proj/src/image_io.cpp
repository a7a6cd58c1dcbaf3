#include "sceneparse/image.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace sceneparse {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw DataError("cannot open '" + path + "'");
    return f;
}

} // namespace

Raster8 read_png(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    png_byte header[8];
    if (std::fread(header, 1, 8, f.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw DataError("'" + path + "' is not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("failed to decode PNG '" + path + "'");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // Normalize whatever we get to 8-bit RGB.
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_set_palette_to_rgb(png);
    png_read_update_info(png, info);

    Raster8 out;
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.channels = 3;
    out.data.resize(static_cast<std::size_t>(out.height) * out.width * 3);

    const std::size_t stride = png_get_rowbytes(png, info);
    if (stride != static_cast<std::size_t>(out.width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unexpected PNG row layout in '" + path + "'");
    }
    std::vector<png_bytep> rows(out.height);
    for (int r = 0; r < out.height; ++r)
        rows[r] = out.data.data() + static_cast<std::size_t>(r) * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

namespace {

void write_png_impl(const std::string& path, int height, int width, int color_type,
                    std::span<const std::uint8_t> data,
                    std::span<const std::uint8_t> palette_rgb) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng init failed for '" + path + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("failed to encode PNG '" + path + "'");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

    std::vector<png_color> palette;
    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        palette.resize(palette_rgb.size() / 3);
        for (std::size_t i = 0; i < palette.size(); ++i) {
            palette[i].red = palette_rgb[i * 3 + 0];
            palette[i].green = palette_rgb[i * 3 + 1];
            palette[i].blue = palette_rgb[i * 3 + 2];
        }
        png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
    }
    png_write_info(png, info);

    const std::size_t stride = static_cast<std::size_t>(width) *
                               (color_type == PNG_COLOR_TYPE_RGB ? 3 : 1);
    for (int r = 0; r < height; ++r)
        png_write_row(png, const_cast<png_bytep>(data.data() + static_cast<std::size_t>(r) * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace

void write_png_rgb(const std::string& path, int height, int width, std::span<const std::uint8_t> rgb) {
    if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
        throw DataError("write_png_rgb: buffer size mismatch for '" + path + "'");
    write_png_impl(path, height, width, PNG_COLOR_TYPE_RGB, rgb, {});
}

void write_png_indexed(const std::string& path, int height, int width,
                       std::span<const std::uint8_t> indices,
                       std::span<const std::uint8_t> palette_rgb) {
    if (indices.size() != static_cast<std::size_t>(height) * width)
        throw DataError("write_png_indexed: buffer size mismatch for '" + path + "'");
    write_png_impl(path, height, width, PNG_COLOR_TYPE_PALETTE, indices, palette_rgb);
}

// --- PNM ---------------------------------------------------------------

namespace {

// Skips whitespace and '#' comments between PNM header tokens.
int next_pnm_int(std::istream& in, const std::string& path) {
    for (;;) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int v = 0;
    if (!(in >> v)) throw DataError("truncated PNM header in '" + path + "'");
    return v;
}

} // namespace

Raster8 read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[2] = {0, 0};
    in.read(magic, 2);
    int channels = 0;
    if (magic[0] == 'P' && magic[1] == '6') channels = 3;
    else if (magic[0] == 'P' && magic[1] == '5') channels = 1;
    else throw DataError("'" + path + "' is not a binary PPM/PGM file");

    Raster8 out;
    out.width = next_pnm_int(in, path);
    out.height = next_pnm_int(in, path);
    const int maxval = next_pnm_int(in, path);
    if (maxval <= 0 || maxval > 255)
        throw DataError("'" + path + "': unsupported PNM maxval " + std::to_string(maxval));
    in.get(); // single whitespace after maxval
    out.channels = channels;
    out.data.resize(static_cast<std::size_t>(out.height) * out.width * channels);
    in.read(reinterpret_cast<char*>(out.data.data()), static_cast<std::streamsize>(out.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(out.data.size()))
        throw DataError("truncated PNM payload in '" + path + "'");
    return out;
}

void write_ppm(const std::string& path, int height, int width, std::span<const std::uint8_t> rgb) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
}

void write_pgm(const std::string& path, int height, int width, std::span<const std::uint8_t> gray) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
}

void write_pgm16(const std::string& path, int height, int width, std::span<const std::uint16_t> gray) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "P5\n# 16-bit samples, little-endian\n" << width << " " << height << "\n65535\n";
    for (std::uint16_t v : gray) {
        char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
        out.write(bytes, 2);
    }
}

Raster8 read_image_any(const std::string& path) {
    Raster8 r;
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0)
        r = read_png(path);
    else
        r = read_pnm(path);
    if (r.channels == 1) {
        Raster8 rgb;
        rgb.height = r.height;
        rgb.width = r.width;
        rgb.channels = 3;
        rgb.data.resize(r.data.size() * 3);
        for (std::size_t i = 0; i < r.data.size(); ++i) {
            rgb.data[i * 3 + 0] = r.data[i];
            rgb.data[i * 3 + 1] = r.data[i];
            rgb.data[i * 3 + 2] = r.data[i];
        }
        return rgb;
    }
    return r;
}

std::vector<std::int32_t> read_label_text(const std::string& path, int& height, int& width) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    if (!(in >> height >> width) || height <= 0 || width <= 0)
        throw DataError("bad label header in '" + path + "'");
    std::vector<std::int32_t> labels(static_cast<std::size_t>(height) * width);
    for (auto& v : labels)
        if (!(in >> v)) throw DataError("truncated label map in '" + path + "'");
    return labels;
}

void write_label_text(const std::string& path, int height, int width, std::span<const std::int32_t> labels) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << height << " " << width << "\n";
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            if (c) out << ' ';
            out << labels[static_cast<std::size_t>(r) * width + c];
        }
        out << '\n';
    }
}

} // namespace sceneparse
