#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image_io.hpp"

namespace prnu {

namespace detail {

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    const std::vector<std::uint8_t>& buffer() const noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& buf, std::string name) : buf_(buf), name_(std::move(name)) {}

    std::string_view bytes(std::size_t n)
    {
        need(n);
        std::string_view s(reinterpret_cast<const char*>(buf_.data()) + pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8()
    {
        need(1);
        return buf_[pos_++];
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * i);
        }
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    bool at_end() const noexcept { return pos_ == buf_.size(); }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (buf_.size() - pos_ < n) {
            throw FormatError("truncated file '" + name_ + "'");
        }
    }

    const std::vector<std::uint8_t>& buf_;
    std::string name_;
    std::size_t pos_ = 0;
};

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot create '" + path.string() + "'");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

/// Shared layout of ".prnu" and ".synk" files: magic, u32 height, u32 width,
/// u32 count, u8 flag, u8 id length + id, then f32 values row-major.
inline std::vector<std::uint8_t> encode_field(std::string_view magic, const RealPlane& values,
                                              std::uint32_t count, bool flag, std::string_view id)
{
    if (id.size() > 255) {
        throw InvalidArgument("sensor id longer than 255 bytes: '" + std::string(id) + "'");
    }
    ByteWriter w;
    w.bytes(magic);
    w.u32(static_cast<std::uint32_t>(values.height()));
    w.u32(static_cast<std::uint32_t>(values.width()));
    w.u32(count);
    w.u8(flag ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(id.size()));
    w.bytes(id);
    for (double v : values) {
        w.f32(static_cast<float>(v));
    }
    return w.buffer();
}

struct DecodedField {
    RealPlane values;
    std::uint32_t count = 0;
    bool flag = false;
    std::string id;
};

inline DecodedField decode_field(std::string_view magic, const std::vector<std::uint8_t>& bytes,
                                 const std::string& name)
{
    ByteReader r(bytes, name);
    if (bytes.size() < magic.size() || r.bytes(magic.size()) != magic) {
        throw FormatError("'" + name + "' is not a " + std::string(magic) + " file");
    }
    const std::size_t h = r.u32();
    const std::size_t w = r.u32();
    DecodedField f;
    f.count = r.u32();
    const std::uint8_t flag = r.u8();
    if (flag > 1) {
        throw FormatError("invalid flag byte in '" + name + "'");
    }
    f.flag = flag == 1;
    f.id = std::string(r.bytes(r.u8()));
    if (h == 0 || w == 0 || r.remaining() != h * w * 4) {
        throw FormatError("payload size does not match " + std::to_string(h) + "x" + std::to_string(w) +
                          " in '" + name + "'");
    }
    f.values = RealPlane(h, w);
    for (double& v : f.values) {
        const float x = r.f32();
        if (!std::isfinite(x)) {
            throw FormatError("non-finite value in '" + name + "'");
        }
        v = static_cast<double>(x);
    }
    return f;
}

} // namespace detail

inline constexpr std::string_view kPatternMagic = "PRNU1";
inline constexpr std::string_view kPatternExtension = ".prnu";

inline std::vector<std::uint8_t> encode_pattern(const ReferencePattern& p)
{
    return detail::encode_field(kPatternMagic, p.values, static_cast<std::uint32_t>(p.train_count),
                                p.postprocessed, p.sensor_id);
}

inline ReferencePattern decode_pattern(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>")
{
    auto f = detail::decode_field(kPatternMagic, bytes, name);
    if (f.count == 0) {
        throw FormatError("train_count must be >= 1 in '" + name + "'");
    }
    return ReferencePattern{std::move(f.values), std::move(f.id), f.count, f.flag};
}

inline void save_pattern(const std::filesystem::path& path, const ReferencePattern& p)
{
    detail::write_file_bytes(path, encode_pattern(p));
}

inline ReferencePattern load_pattern(const std::filesystem::path& path)
{
    return decode_pattern(detail::read_file_bytes(path), path.string());
}

/// Writes one `<sensor_id>.prnu` per sensor into `dir` (created if needed).
inline void save_gallery(const std::filesystem::path& dir, const SensorGallery& gallery)
{
    std::filesystem::create_directories(dir);
    for (const auto& p : gallery.patterns()) {
        save_pattern(dir / (p.sensor_id + std::string(kPatternExtension)), p);
    }
}

/// Loads every `.prnu` file of `dir` in file-name order.
inline SensorGallery load_gallery(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("gallery directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == kPatternExtension) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw IoError("gallery directory '" + dir.string() + "' contains no " + std::string(kPatternExtension) +
                      " files");
    }
    SensorGallery gallery;
    for (const auto& f : files) {
        gallery.add(load_pattern(f));
    }
    return gallery;
}

} // namespace prnu
