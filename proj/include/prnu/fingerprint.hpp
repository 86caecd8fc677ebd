#pragma once

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/image.hpp"
#include "prnu/parallel.hpp"
#include "prnu/plane.hpp"

namespace prnu {

/// Where zero-mean and Wiener cleanup are applied during estimation.
enum class Postprocess {
    /// Once, on the aggregated reference pattern.
    reference_pattern,
    /// On every training residual before aggregation.
    per_residual,
};

inline std::string_view to_string(Postprocess p)
{
    return p == Postprocess::reference_pattern ? "reference_pattern" : "per_residual";
}

inline Postprocess parse_postprocess(std::string_view s)
{
    if (s == "reference_pattern") {
        return Postprocess::reference_pattern;
    }
    if (s == "per_residual") {
        return Postprocess::per_residual;
    }
    throw InvalidArgument("unknown postprocess mode '" + std::string(s) +
                          "' (expected reference_pattern or per_residual)");
}

/// Sensor fingerprint K-hat estimated from training images.
struct ReferencePattern {
    RealPlane values;
    std::string sensor_id;
    std::size_t train_count = 0;
    bool postprocessed = false;

    Dims dims() const noexcept { return values.dims(); }
    friend bool operator==(const ReferencePattern&, const ReferencePattern&) = default;
};

struct NCCScore {
    std::string sensor_id;
    double value = 0.0;

    friend bool operator==(const NCCScore&, const NCCScore&) = default;
};

/// Mean-subtracted, L2-normalized copy of a plane flattened row-major.
/// A constant (zero-norm) input maps to the zero vector.
inline std::vector<double> normalized_vector(const RealPlane& p)
{
    std::vector<double> v(p.begin(), p.end());
    const double mu = mean(p);
    double norm2 = 0.0;
    for (double& x : v) {
        x -= mu;
        norm2 += x * x;
    }
    const double norm = std::sqrt(norm2);
    if (norm > 0.0) {
        for (double& x : v) {
            x /= norm;
        }
    } else {
        std::fill(v.begin(), v.end(), 0.0);
    }
    return v;
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

/// Inner product of two already-normalized vectors, saturated into [-1, 1].
inline double normalized_correlation(std::span<const double> a, std::span<const double> b)
{
    return std::clamp(dot(a, b), -1.0, 1.0);
}

/// Normalized cross-correlation of two equally sized planes.
inline double ncc(const RealPlane& a, const RealPlane& b)
{
    require_same_dims(a.dims(), b.dims(), "ncc");
    return normalized_correlation(normalized_vector(a), normalized_vector(b));
}

inline NCCScore ncc(const NoiseResidual& w, const ReferencePattern& pattern)
{
    return {pattern.sensor_id, ncc(w.values, pattern.values)};
}

/// Subtracts every column's mean, then every row's mean.
inline RealPlane zero_mean(const RealPlane& p)
{
    RealPlane out = p;
    const std::size_t h = out.height();
    const std::size_t w = out.width();
    if (h == 0 || w == 0) {
        return out;
    }
    std::vector<double> col_mean(w, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        const double* row = out.row(r);
        for (std::size_t c = 0; c < w; ++c) {
            col_mean[c] += row[c];
        }
    }
    for (double& m : col_mean) {
        m /= static_cast<double>(h);
    }
    for (std::size_t r = 0; r < h; ++r) {
        double* row = out.row(r);
        double row_mean = 0.0;
        for (std::size_t c = 0; c < w; ++c) {
            row[c] -= col_mean[c];
            row_mean += row[c];
        }
        row_mean /= static_cast<double>(w);
        for (std::size_t c = 0; c < w; ++c) {
            row[c] -= row_mean;
        }
    }
    return out;
}

namespace detail {

using ComplexPlane = std::vector<std::complex<double>>;

/// In-place separable 2D FFT (forward or inverse with 1/N scaling).
inline void fft2(ComplexPlane& data, std::size_t h, std::size_t w, bool inverse)
{
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> in;
    std::vector<std::complex<double>> out;

    in.resize(w);
    for (std::size_t r = 0; r < h; ++r) {
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(r * w), w, in.begin());
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        std::copy(out.begin(), out.end(), data.begin() + static_cast<std::ptrdiff_t>(r * w));
    }
    in.resize(h);
    for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t r = 0; r < h; ++r) {
            in[r] = data[r * w + c];
        }
        inverse ? fft.inv(out, in) : fft.fwd(out, in);
        for (std::size_t r = 0; r < h; ++r) {
            data[r * w + c] = out[r];
        }
    }
}

} // namespace detail

/// Frequency-domain Wiener cleanup of a pattern.
///
/// The unitary-scaled DFT magnitude is split with the local-variance Wiener
/// estimator (noise power = the pattern's global variance) and only the
/// noise-like part is kept: a flat, PRNU-like spectrum passes unchanged while
/// periodic peaks are suppressed. Phases are kept.
inline RealPlane wiener_dft(const RealPlane& p, const std::vector<std::size_t>& window_sizes = {3, 5, 7, 9})
{
    const double noise = variance(p);
    if (!(noise > 0.0)) {
        return p;
    }
    const std::size_t h = p.height();
    const std::size_t w = p.width();
    detail::ComplexPlane spectrum(p.begin(), p.end());
    detail::fft2(spectrum, h, w, false);

    const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
    RealPlane magnitude(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        magnitude.data()[i] = std::abs(spectrum[i]) * scale;
    }
    DenoiseParams wp;
    wp.noise_variance = noise;
    wp.window_sizes = window_sizes;
    const RealPlane shrunk = wiener_subband(magnitude, wp);
    for (std::size_t i = 0; i < h * w; ++i) {
        const double m = magnitude.data()[i];
        const double kept = m - shrunk.data()[i];
        spectrum[i] = m > 0.0 ? spectrum[i] * (kept / m) : std::complex<double>{};
    }
    detail::fft2(spectrum, h, w, true);

    RealPlane out(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        out.data()[i] = spectrum[i].real();
    }
    return out;
}

/// Zero-mean followed by frequency-domain Wiener cleanup.
inline RealPlane postprocess_pattern(const RealPlane& p) { return wiener_dft(zero_mean(p)); }

namespace detail {

inline void validate_training_set(std::span<const Image> train)
{
    if (train.empty()) {
        throw InvalidArgument("estimate_reference: no training images");
    }
    for (const Image& img : train) {
        require_same_dims(train.front().dims(), img.dims(), "estimate_reference");
    }
}

/// K = sum(w_i * I_i) / sum(I_i^2) given per-image residuals; pixels dark in
/// every image map to 0.
inline RealPlane mle_combine(std::span<const Image> train, std::span<const RealPlane> residuals)
{
    const Dims d = train.front().dims();
    RealPlane numerator(d, 0.0);
    RealPlane denominator(d, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double* px = train[i].plane().data();
        const double* wr = residuals[i].data();
        for (std::size_t p = 0; p < d.area(); ++p) {
            numerator.data()[p] += wr[p] * px[p];
            denominator.data()[p] += px[p] * px[p];
        }
    }
    RealPlane k(d, 0.0);
    for (std::size_t p = 0; p < d.area(); ++p) {
        const double den = denominator.data()[p];
        k.data()[p] = den > 0.0 ? numerator.data()[p] / den : 0.0;
    }
    return k;
}

inline std::vector<RealPlane> training_residuals(std::span<const Image> train, const DenoiseParams& params,
                                                 bool clean_each, unsigned jobs)
{
    std::vector<RealPlane> residuals(train.size());
    parallel_for(train.size(), jobs, [&](std::size_t i) {
        RealPlane w = residual(train[i], params).values;
        residuals[i] = clean_each ? postprocess_pattern(w) : std::move(w);
    });
    return residuals;
}

} // namespace detail

/// Maximum-likelihood aggregate before any post-processing. In per-residual
/// mode the residuals are cleaned before being combined.
inline RealPlane estimate_raw_reference(std::span<const Image> train, const DenoiseParams& params,
                                        Postprocess mode = Postprocess::reference_pattern, unsigned jobs = 1)
{
    detail::validate_training_set(train);
    validate(params);
    const auto residuals =
        detail::training_residuals(train, params, mode == Postprocess::per_residual, jobs);
    return detail::mle_combine(train, residuals);
}

/// Reference pattern of one sensor from its training images.
inline ReferencePattern estimate_reference(std::span<const Image> train, const DenoiseParams& params,
                                           std::string sensor_id,
                                           Postprocess mode = Postprocess::reference_pattern, unsigned jobs = 1)
{
    RealPlane k = estimate_raw_reference(train, params, mode, jobs);
    if (mode == Postprocess::reference_pattern) {
        k = postprocess_pattern(k);
    } else {
        k = zero_mean(k);
    }
    return ReferencePattern{std::move(k), std::move(sensor_id), train.size(), true};
}

/// Ordered set of reference patterns sharing one size, with unique ids.
class SensorGallery {
public:
    SensorGallery() = default;

    explicit SensorGallery(std::vector<ReferencePattern> patterns)
    {
        for (auto& p : patterns) {
            add(std::move(p));
        }
    }

    void add(ReferencePattern pattern)
    {
        if (!patterns_.empty()) {
            require_same_dims(patterns_.front().dims(), pattern.dims(), "SensorGallery");
        }
        if (find(pattern.sensor_id) != nullptr) {
            throw InvalidArgument("SensorGallery: duplicate sensor id '" + pattern.sensor_id + "'");
        }
        unit_.push_back(normalized_vector(pattern.values));
        patterns_.push_back(std::move(pattern));
    }

    const std::vector<ReferencePattern>& patterns() const noexcept { return patterns_; }
    std::size_t size() const noexcept { return patterns_.size(); }
    bool empty() const noexcept { return patterns_.empty(); }
    Dims dims() const noexcept { return patterns_.empty() ? Dims{} : patterns_.front().dims(); }

    const ReferencePattern* find(std::string_view id) const noexcept
    {
        for (const auto& p : patterns_) {
            if (p.sensor_id == id) {
                return &p;
            }
        }
        return nullptr;
    }

    const ReferencePattern& at(std::string_view id) const
    {
        if (const auto* p = find(id)) {
            return *p;
        }
        throw InvalidArgument("SensorGallery: unknown sensor id '" + std::string(id) + "'");
    }

    /// Normalized pattern vector of the i-th sensor.
    std::span<const double> unit(std::size_t i) const { return unit_.at(i); }

private:
    std::vector<ReferencePattern> patterns_;
    std::vector<std::vector<double>> unit_;
};

struct Classification {
    std::string predicted;
    std::vector<NCCScore> scores;
};

/// Scores a residual against every gallery sensor; the first maximal score wins.
inline Classification classify_residual(const NoiseResidual& w, const SensorGallery& gallery)
{
    if (gallery.empty()) {
        throw InvalidArgument("classify: empty gallery");
    }
    require_same_dims(gallery.dims(), w.dims(), "classify");
    const auto test = normalized_vector(w.values);
    Classification result;
    result.scores.reserve(gallery.size());
    std::size_t best = 0;
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        const double v = normalized_correlation(test, gallery.unit(i));
        result.scores.push_back({gallery.patterns()[i].sensor_id, v});
        if (v > result.scores[best].value) {
            best = i;
        }
    }
    result.predicted = result.scores[best].sensor_id;
    return result;
}

/// argmax_i NCC(residual(img), K_i).
inline Classification classify(const Image& img, const SensorGallery& gallery, const DenoiseParams& params)
{
    if (gallery.empty()) {
        throw InvalidArgument("classify: empty gallery");
    }
    require_same_dims(gallery.dims(), img.dims(), "classify");
    return classify_residual(residual(img, params), gallery);
}

} // namespace prnu
