#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/image.hpp"
#include "prnu/pattern_io.hpp"
#include "prnu/plane.hpp"
#include "prnu/rng.hpp"

namespace prnu {

/// Simulated sensor with a multiplicative PRNU field k ~ strength * N(0, 1).
struct SyntheticSensor {
    std::string sensor_id;
    RealPlane prnu_field;
    double strength = 0.02;
    double read_noise_sigma = 2.0;
    std::uint64_t rng_seed = 0;

    Dims dims() const noexcept { return prnu_field.dims(); }
};

inline SyntheticSensor make_sensor(std::string sensor_id, Dims dims, std::uint64_t rng_seed,
                                   double strength = 0.02, double read_noise_sigma = 2.0)
{
    if (!(strength > 0.0)) {
        throw InvalidArgument("synthetic sensor strength must be > 0");
    }
    if (!(read_noise_sigma >= 0.0)) {
        throw InvalidArgument("synthetic sensor read noise must be >= 0");
    }
    if (dims.height == 0 || dims.width == 0) {
        throw InvalidArgument("synthetic sensor dimensions must be >= 1");
    }
    Rng rng = make_rng(rng_seed, "synth.prnu_field");
    std::normal_distribution<double> gauss(0.0, 1.0);
    RealPlane k(dims);
    for (double& v : k) {
        v = strength * gauss(rng);
    }
    return SyntheticSensor{std::move(sensor_id), std::move(k), strength, read_noise_sigma, rng_seed};
}

/// Sensor output model: quantize(clamp(scene * (1 + k) + N(0, sigma^2))).
inline Image capture(const SyntheticSensor& sensor, const Image& scene, std::uint64_t shot_seed)
{
    require_same_dims(sensor.dims(), scene.dims(), "capture");
    Rng rng = make_rng(sensor.rng_seed, "synth.capture", shot_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    RealPlane out(scene.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double noise = sensor.read_noise_sigma > 0.0 ? sensor.read_noise_sigma * gauss(rng) : 0.0;
        const double v = scene.plane().data()[i] * (1.0 + sensor.prnu_field.data()[i]) + noise;
        out.data()[i] = static_cast<double>(quantize_pixel(v));
    }
    return Image(std::move(out));
}

namespace detail {

/// Smooth random field: uniform values on a coarse grid, bilinearly upsampled.
inline RealPlane smooth_field(Dims d, std::size_t grid_h, std::size_t grid_w, Rng& rng)
{
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    RealPlane coarse(grid_h, grid_w);
    for (double& v : coarse) {
        v = uni(rng);
    }
    RealPlane out(d);
    for (std::size_t r = 0; r < d.height; ++r) {
        const double y = static_cast<double>(r) / static_cast<double>(std::max<std::size_t>(d.height - 1, 1)) *
                         static_cast<double>(grid_h - 1);
        const auto y0 = std::min(static_cast<std::size_t>(y), grid_h - 2);
        const double ty = y - static_cast<double>(y0);
        for (std::size_t c = 0; c < d.width; ++c) {
            const double x = static_cast<double>(c) /
                             static_cast<double>(std::max<std::size_t>(d.width - 1, 1)) *
                             static_cast<double>(grid_w - 1);
            const auto x0 = std::min(static_cast<std::size_t>(x), grid_w - 2);
            const double tx = x - static_cast<double>(x0);
            const double top = coarse(y0, x0) * (1 - tx) + coarse(y0, x0 + 1) * tx;
            const double bottom = coarse(y0 + 1, x0) * (1 - tx) + coarse(y0 + 1, x0 + 1) * tx;
            out(r, c) = top * (1 - ty) + bottom * ty;
        }
    }
    return out;
}

/// One iris-like scene: smooth background, a textured annulus with radial
/// and concentric structure, and a dark pupil disk.
inline Image make_scene(Dims d, Rng& rng)
{
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double h = static_cast<double>(d.height);
    const double w = static_cast<double>(d.width);
    const double short_side = std::min(h, w);

    const double cy = h * (0.45 + 0.1 * uni(rng));
    const double cx = w * (0.45 + 0.1 * uni(rng));
    const double iris_r = short_side * (0.30 + 0.08 * uni(rng));
    const double pupil_r = iris_r * (0.30 + 0.15 * uni(rng));
    const double background = 135.0 + 30.0 * uni(rng);
    const double iris_level = 95.0 + 25.0 * uni(rng);
    const double pupil_level = 25.0 + 15.0 * uni(rng);
    const double ring_period = 3.0 + 4.0 * uni(rng);
    const double ring_phase = 2.0 * std::numbers::pi * uni(rng);
    const double spokes = std::floor(12.0 + 20.0 * uni(rng));
    const double spoke_phase = 2.0 * std::numbers::pi * uni(rng);

    const RealPlane illumination = smooth_field(d, 4, 5, rng);
    const RealPlane texture = smooth_field(d, std::max<std::size_t>(d.height / 6, 2),
                                           std::max<std::size_t>(d.width / 6, 2), rng);

    RealPlane px(d);
    for (std::size_t r = 0; r < d.height; ++r) {
        for (std::size_t c = 0; c < d.width; ++c) {
            const double dy = static_cast<double>(r) + 0.5 - cy;
            const double dx = static_cast<double>(c) + 0.5 - cx;
            const double rho = std::hypot(dx, dy);
            const double theta = std::atan2(dy, dx);
            double v = 0.0;
            if (rho < pupil_r) {
                v = pupil_level;
            } else if (rho < iris_r) {
                const double rings = std::sin(2.0 * std::numbers::pi * rho / ring_period + ring_phase);
                const double fibres = std::sin(spokes * theta + spoke_phase + 0.15 * rho);
                v = iris_level + 10.0 * rings + 8.0 * fibres + 12.0 * texture(r, c);
            } else {
                v = background + 8.0 * texture(r, c);
            }
            v += 20.0 * illumination(r, c);
            px(r, c) = std::clamp(v, 5.0, 250.0);
        }
    }
    return Image(std::move(px));
}

} // namespace detail

/// Deterministic bank of `count` distinct iris-like scenes.
inline std::vector<Image> make_scene_bank(std::size_t count, Dims dims, std::uint64_t rng_seed)
{
    if (count == 0) {
        throw InvalidArgument("make_scene_bank: count must be >= 1");
    }
    if (dims.height < 2 || dims.width < 2) {
        throw InvalidArgument("make_scene_bank: dimensions must be at least 2x2");
    }
    std::vector<Image> bank;
    bank.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = make_rng(rng_seed, "synth.scene", i);
        bank.push_back(detail::make_scene(dims, rng));
    }
    return bank;
}

inline constexpr std::string_view kSensorMagic = "SYNK1";

/// Ground-truth field file; uses the pattern layout with a distinct magic.
inline void save_sensor_field(const std::filesystem::path& path, const SyntheticSensor& s)
{
    detail::write_file_bytes(path, detail::encode_field(kSensorMagic, s.prnu_field, 1, false, s.sensor_id));
}

struct SensorField {
    std::string sensor_id;
    RealPlane prnu_field;
};

inline SensorField load_sensor_field(const std::filesystem::path& path)
{
    auto f = detail::decode_field(kSensorMagic, detail::read_file_bytes(path), path.string());
    return SensorField{std::move(f.id), std::move(f.values)};
}

} // namespace prnu
