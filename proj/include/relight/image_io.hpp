#pragma once

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <png.h>

#include "relight/errors.hpp"
#include "relight/image.hpp"

namespace relight {

namespace detail {

struct FileCloser {
    std::FILE* fp = nullptr;
    ~FileCloser() {
        if (fp) std::fclose(fp);
    }
};

inline ImageTensor read_png(const std::string& path) {
    FileCloser file{std::fopen(path.c_str(), "rb")};
    if (!file.fp) throw IoError("cannot open image: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed: " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed: " + path);
    }
    std::vector<png_byte> storage;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("malformed PNG: " + path);
    }
    png_init_io(png, file.fp);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    int bit_depth = png_get_bit_depth(png, info);

    if (color_type & PNG_COLOR_MASK_ALPHA) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("alpha channels are not supported: " + path);
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_swap(png);  // 16-bit PNG is big-endian on disk
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported channel count in " + path);
    }

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    storage.assign(rowbytes * height, 0);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) rows[r] = storage.data() + r * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    ImageTensor img(static_cast<int>(height), static_cast<int>(width), channels);
    if (bit_depth == 16) {
        for (png_uint_32 r = 0; r < height; ++r) {
            const std::uint16_t* src = reinterpret_cast<const std::uint16_t*>(rows[r]);
            for (png_uint_32 c = 0; c < width; ++c) {
                for (int ch = 0; ch < channels; ++ch) {
                    img.at(r, c, ch) = src[c * channels + ch] / 65535.0;
                }
            }
        }
    } else {
        for (png_uint_32 r = 0; r < height; ++r) {
            const png_byte* src = rows[r];
            for (png_uint_32 c = 0; c < width; ++c) {
                for (int ch = 0; ch < channels; ++ch) {
                    img.at(r, c, ch) = src[c * channels + ch] / 255.0;
                }
            }
        }
    }
    return img;
}

inline void write_png(const ImageTensor& img, const std::string& path) {
    FileCloser file{std::fopen(path.c_str(), "wb")};
    if (!file.fp) throw IoError("cannot write image: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed: " + path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed: " + path);
    }
    std::vector<png_byte> storage;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed: " + path);
    }
    png_init_io(png, file.fp);
    png_set_IHDR(png, info, img.width(), img.height(), 8,
                 img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::size_t rowbytes = static_cast<std::size_t>(img.width()) * img.channels();
    storage.resize(rowbytes * img.height());
    rows.resize(img.height());
    for (int r = 0; r < img.height(); ++r) {
        png_bytep row = storage.data() + static_cast<std::size_t>(r) * rowbytes;
        rows[r] = row;
        for (int c = 0; c < img.width(); ++c) {
            for (int ch = 0; ch < img.channels(); ++ch) {
                const double v = std::min(1.0, std::max(0.0, img.at(r, c, ch)));
                row[c * img.channels() + ch] = static_cast<png_byte>(std::lround(v * 255.0));
            }
        }
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline ImageTensor read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);

    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw IoError("unsupported PNM magic in " + path);
    const int channels = magic == "P6" ? 3 : 1;

    const auto next_int = [&]() {
        // Skip whitespace and '#' comment lines between header fields.
        int ch = in.get();
        while (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n' || ch == '#') {
            if (ch == '#') {
                while (ch != '\n' && ch != EOF) ch = in.get();
            }
            ch = in.get();
        }
        long value = 0;
        bool any = false;
        while (ch >= '0' && ch <= '9') {
            value = value * 10 + (ch - '0');
            any = true;
            ch = in.get();
        }
        if (!any) throw IoError("malformed PNM header: " + path);
        return value;
    };

    const long width = next_int();
    const long height = next_int();
    const long maxval = next_int();
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) {
        throw IoError("malformed PNM header: " + path);
    }

    const int bytes = maxval > 255 ? 2 : 1;
    const std::size_t total = static_cast<std::size_t>(width) * height * channels;
    std::vector<unsigned char> raw(total * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw IoError("truncated PNM data: " + path);
    }

    ImageTensor img(static_cast<int>(height), static_cast<int>(width), channels);
    for (std::size_t i = 0; i < total; ++i) {
        if (bytes == 2) {
            const unsigned v = (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
            img.data()[i] = static_cast<double>(v) / maxval;
        } else {
            img.data()[i] = static_cast<double>(raw[i]) / maxval;
        }
    }
    return img;
}

inline void write_pnm(const ImageTensor& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image: " + path);
    out << (img.channels() == 3 ? "P6" : "P5") << "\n"
        << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.data()[i]));
        raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing image: " + path);
}

inline std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

}  // namespace detail

inline bool is_supported_image(const std::string& path) {
    const std::string ext = detail::lower_ext(path);
    return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

/// Loads an 8/16-bit PNG or binary PPM/PGM as unit-range intensities.
inline ImageTensor read_image(const std::string& path) {
    const std::string ext = detail::lower_ext(path);
    if (ext == ".png") return detail::read_png(path);
    if (ext == ".ppm" || ext == ".pgm") return detail::read_pnm(path);
    throw IoError("unsupported image format: " + path);
}

/// Writes 8-bit output (round(v * 255)); the format follows the extension.
inline void write_image(const ImageTensor& img, const std::string& path) {
    const std::string ext = detail::lower_ext(path);
    if (ext == ".png") {
        detail::write_png(img, path);
    } else if (ext == ".ppm" || ext == ".pgm") {
        detail::write_pnm(img, path);
    } else {
        throw IoError("unsupported image format: " + path);
    }
}

/// Sorted list of supported image files directly inside dir.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_supported_image(entry.path().string())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace relight
