#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/plane.hpp"

namespace prnu {

inline constexpr double kMaxIntensity = 255.0;

inline double saturate(double v) noexcept
{
    // NaN maps to 0 so that a saturated value is always a valid intensity.
    if (!(v > 0.0)) {
        return 0.0;
    }
    return v > kMaxIntensity ? kMaxIntensity : v;
}

/// Grayscale image with real-valued intensities in [0, 255].
///
/// Pixels stay floating point so that sub-integer perturbations survive
/// between iterations; quantization to 8 bits only happens on export.
class Image {
public:
    Image() = default;

    /// Validating constructor: throws InvalidArgument when the plane is empty
    /// or holds a value outside [0, 255].
    explicit Image(RealPlane pixels) : pixels_(std::move(pixels))
    {
        if (pixels_.height() == 0 || pixels_.width() == 0) {
            throw InvalidArgument("Image: height and width must be >= 1");
        }
        for (double v : pixels_) {
            if (!(v >= 0.0 && v <= kMaxIntensity)) {
                throw InvalidArgument("Image: pixel value " + std::to_string(v) + " outside [0, 255]");
            }
        }
    }

    Image(std::size_t height, std::size_t width, double fill) : Image(RealPlane(height, width, fill)) {}

    std::size_t height() const noexcept { return pixels_.height(); }
    std::size_t width() const noexcept { return pixels_.width(); }
    Dims dims() const noexcept { return pixels_.dims(); }
    std::size_t size() const noexcept { return pixels_.size(); }

    double operator()(std::size_t r, std::size_t c) const noexcept { return pixels_(r, c); }
    const RealPlane& plane() const noexcept { return pixels_; }
    std::span<const double> values() const noexcept { return pixels_.values(); }

    friend bool operator==(const Image&, const Image&) = default;

private:
    RealPlane pixels_;
};

/// Saturates every value into [0, 255].
inline Image clamp(const RealPlane& p)
{
    RealPlane out(p.dims());
    std::transform(p.begin(), p.end(), out.begin(), saturate);
    return Image(std::move(out));
}

inline Image clamp(const Image& img) { return clamp(img.plane()); }

/// Round half away from zero, then saturate to [0, 255].
inline std::uint8_t quantize_pixel(double v) noexcept
{
    return static_cast<std::uint8_t>(saturate(std::round(v)));
}

inline std::vector<std::uint8_t> quantize(const Image& img)
{
    std::vector<std::uint8_t> out(img.size());
    std::transform(img.values().begin(), img.values().end(), out.begin(), quantize_pixel);
    return out;
}

/// The image as it would be after an 8-bit export/import round trip.
inline Image quantized(const Image& img)
{
    RealPlane out(img.dims());
    std::transform(img.values().begin(), img.values().end(), out.begin(),
                   [](double v) { return static_cast<double>(quantize_pixel(v)); });
    return Image(std::move(out));
}

/// Bilinear resize with pixel centers at half-integer positions
/// (align-centers). Sample positions outside the source grid are clamped to
/// the border pixels.
inline Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w)
{
    if (out_h == 0 || out_w == 0) {
        throw InvalidArgument("resize_bilinear: target dimensions must be >= 1");
    }
    const std::size_t in_h = img.height();
    const std::size_t in_w = img.width();
    if (in_h == out_h && in_w == out_w) {
        return img;
    }

    struct Tap {
        std::size_t i0, i1;
        double t;
    };
    auto taps = [](std::size_t in, std::size_t out) {
        std::vector<Tap> result(out);
        const double scale = static_cast<double>(in) / static_cast<double>(out);
        const double hi = static_cast<double>(in - 1);
        for (std::size_t i = 0; i < out; ++i) {
            double x = (static_cast<double>(i) + 0.5) * scale - 0.5;
            x = std::clamp(x, 0.0, hi);
            const auto i0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t i1 = std::min(i0 + 1, in - 1);
            result[i] = {i0, i1, x - static_cast<double>(i0)};
        }
        return result;
    };
    const auto ry = taps(in_h, out_h);
    const auto rx = taps(in_w, out_w);

    const RealPlane& src = img.plane();
    RealPlane out(out_h, out_w);
    for (std::size_t r = 0; r < out_h; ++r) {
        const auto [y0, y1, ty] = ry[r];
        for (std::size_t c = 0; c < out_w; ++c) {
            const auto [x0, x1, tx] = rx[c];
            const double top = src(y0, x0) * (1.0 - tx) + src(y0, x1) * tx;
            const double bottom = src(y1, x0) * (1.0 - tx) + src(y1, x1) * tx;
            out(r, c) = saturate(top * (1.0 - ty) + bottom * ty);
        }
    }
    return Image(std::move(out));
}

inline Image resize_bilinear(const Image& img, Dims d) { return resize_bilinear(img, d.height, d.width); }

} // namespace prnu
