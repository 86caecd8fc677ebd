#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/image.hpp"

namespace prnu {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("read failed for '" + path.string() + "'");
    }
    return bytes;
}

/// Parses a binary (P5) PGM with maxval <= 255.
inline Image decode_pgm(const std::vector<std::uint8_t>& bytes, const std::string& name)
{
    std::size_t pos = 2;
    auto next_token = [&]() -> std::size_t {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) {
                ++pos;
            }
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
            throw FormatError("malformed PGM header in '" + name + "'");
        }
        std::size_t value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (value > (1u << 24)) {
                throw FormatError("PGM header value too large in '" + name + "'");
            }
            ++pos;
        }
        return value;
    };

    const std::size_t width = next_token();
    const std::size_t height = next_token();
    const std::size_t maxval = next_token();
    if (width == 0 || height == 0) {
        throw FormatError("PGM with zero dimension in '" + name + "'");
    }
    if (maxval == 0 || maxval > 255) {
        throw FormatError("unsupported PGM maxval " + std::to_string(maxval) + " in '" + name +
                          "' (only 8-bit is supported)");
    }
    // Exactly one whitespace byte separates the header from the raster.
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw FormatError("malformed PGM header in '" + name + "'");
    }
    ++pos;
    if (bytes.size() - pos < width * height) {
        throw FormatError("truncated PGM raster in '" + name + "'");
    }
    RealPlane px(height, width);
    for (std::size_t i = 0; i < width * height; ++i) {
        px.data()[i] = static_cast<double>(bytes[pos + i]);
    }
    return Image(std::move(px));
}

/// Integer luma so that equal channels map back to the channel value exactly.
inline double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept
{
    return static_cast<double>(299 * r + 587 * g + 114 * b) / 1000.0;
}

inline Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw FormatError("cannot decode PNG '" + name + "': " + image.message);
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw FormatError("unsupported PNG bit depth in '" + name + "' (only 8-bit is supported)");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    const bool alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    std::size_t channels = 1;
    if (color) {
        image.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
        channels = alpha ? 4 : 3;
    } else {
        image.format = alpha ? PNG_FORMAT_GA : PNG_FORMAT_GRAY;
        channels = alpha ? 2 : 1;
    }
    std::vector<std::uint8_t> raster(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, raster.data(), 0, nullptr)) {
        throw FormatError("cannot decode PNG '" + name + "': " + image.message);
    }
    const std::size_t h = image.height;
    const std::size_t w = image.width;
    RealPlane px(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        const std::uint8_t* p = raster.data() + i * channels;
        px.data()[i] = color ? luma(p[0], p[1], p[2]) : static_cast<double>(p[0]);
    }
    return Image(std::move(px));
}

} // namespace detail

inline bool is_supported_image_path(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".pgm" || ext == ".png";
}

/// Supported image files directly inside `dir`, in file-name order.
inline std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_supported_image_path(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Decodes an 8-bit PGM (P5) or PNG file. Colour PNGs are converted with the
/// 0.299/0.587/0.114 luma weights.
inline Image load_image(const std::filesystem::path& path, std::optional<Dims> expected = std::nullopt)
{
    const auto bytes = detail::read_file_bytes(path);
    static constexpr std::array<std::uint8_t, 8> kPngMagic{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

    Image img;
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
        img = detail::decode_pgm(bytes, path.string());
    } else if (bytes.size() >= kPngMagic.size() && std::equal(kPngMagic.begin(), kPngMagic.end(), bytes.begin())) {
        img = detail::decode_png(bytes, path.string());
    } else {
        throw FormatError("unsupported image format: '" + path.string() + "'");
    }
    if (expected && img.dims() != *expected) {
        throw DimensionMismatch("'" + path.string() + "' is " + to_string(img.dims()) + ", expected " +
                                to_string(*expected));
    }
    return img;
}

/// Writes a binary PGM (P5); pixels are quantized on the way out.
inline void save_pgm(const std::filesystem::path& path, const Image& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot create '" + path.string() + "'");
    }
    out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
    const auto raster = quantize(img);
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

} // namespace prnu
