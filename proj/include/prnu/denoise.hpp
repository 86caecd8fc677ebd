#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/image.hpp"
#include "prnu/plane.hpp"
#include "prnu/wavelet.hpp"

namespace prnu {

struct DenoiseParams {
    /// Decomposition depth of the db4 transform.
    unsigned levels = 4;
    /// Noise variance sigma_0^2 assumed in every detail subband.
    double noise_variance = 9.0;
    /// Odd window sizes for the local variance estimate.
    std::vector<std::size_t> window_sizes{3, 5, 7, 9};

    friend bool operator==(const DenoiseParams&, const DenoiseParams&) = default;
};

inline void validate(const DenoiseParams& p)
{
    if (p.levels == 0) {
        throw InvalidArgument("denoise: levels must be >= 1");
    }
    if (!(p.noise_variance > 0.0)) {
        throw InvalidArgument("denoise: noise_variance must be > 0");
    }
    if (p.window_sizes.empty()) {
        throw InvalidArgument("denoise: window_sizes must not be empty");
    }
    for (std::size_t w : p.window_sizes) {
        if (w == 0 || w % 2 == 0) {
            throw InvalidArgument("denoise: window sizes must be odd and positive, got " + std::to_string(w));
        }
    }
}

/// Noise residual w = I - F(I) of one image.
struct NoiseResidual {
    RealPlane values;

    Dims dims() const noexcept { return values.dims(); }
};

/// Locally adaptive Wiener shrinkage of one detail subband.
///
/// Each coefficient c becomes c * s / (s + sigma0^2), where s is the minimum
/// over all window sizes of max(0, mean(c^2 over window) - sigma0^2). Windows
/// are centered and replicate the subband's edge values.
inline RealPlane wiener_subband(const RealPlane& coeffs, const DenoiseParams& params)
{
    validate(params);
    const std::size_t h = coeffs.height();
    const std::size_t w = coeffs.width();
    RealPlane out(h, w);
    if (h == 0 || w == 0) {
        return out;
    }

    const std::size_t max_window = *std::max_element(params.window_sizes.begin(), params.window_sizes.end());
    const std::size_t pad = max_window / 2;
    const std::size_t ph = h + 2 * pad;
    const std::size_t pw = w + 2 * pad;

    // Squared coefficients with edge replication.
    std::vector<double> sq(ph * pw);
    for (std::size_t r = 0; r < ph; ++r) {
        const std::size_t sr = std::min(r > pad ? r - pad : 0, h - 1);
        for (std::size_t c = 0; c < pw; ++c) {
            const std::size_t sc = std::min(c > pad ? c - pad : 0, w - 1);
            const double v = coeffs(sr, sc);
            sq[r * pw + c] = v * v;
        }
    }

    // Row-wise prefix sums; prefix[r][c] = sum of sq[r][0..c).
    std::vector<double> prefix(ph * (pw + 1));
    for (std::size_t r = 0; r < ph; ++r) {
        const double* src = sq.data() + r * pw;
        double* dst = prefix.data() + r * (pw + 1);
        dst[0] = 0.0;
        for (std::size_t c = 0; c < pw; ++c) {
            dst[c + 1] = dst[c] + src[c];
        }
    }

    const double sigma0 = params.noise_variance;
    std::vector<double> signal_var(h * w, std::numeric_limits<double>::infinity());
    std::vector<double> row_sums(ph * w);
    std::vector<double> col_prefix((ph + 1) * w);
    for (std::size_t win : params.window_sizes) {
        const std::size_t half = win / 2;
        for (std::size_t r = 0; r < ph; ++r) {
            const double* p = prefix.data() + r * (pw + 1) + pad - half;
            double* dst = row_sums.data() + r * w;
            for (std::size_t c = 0; c < w; ++c) {
                dst[c] = p[c + win] - p[c];
            }
        }
        std::fill_n(col_prefix.begin(), w, 0.0);
        for (std::size_t r = 0; r < ph; ++r) {
            const double* prev = col_prefix.data() + r * w;
            const double* add = row_sums.data() + r * w;
            double* dst = col_prefix.data() + (r + 1) * w;
            for (std::size_t c = 0; c < w; ++c) {
                dst[c] = prev[c] + add[c];
            }
        }
        const double inv_area = 1.0 / static_cast<double>(win * win);
        for (std::size_t r = 0; r < h; ++r) {
            const double* top = col_prefix.data() + (r + pad - half) * w;
            const double* bottom = col_prefix.data() + (r + pad - half + win) * w;
            double* var = signal_var.data() + r * w;
            for (std::size_t c = 0; c < w; ++c) {
                const double est = std::max(0.0, (bottom[c] - top[c]) * inv_area - sigma0);
                var[c] = std::min(var[c], est);
            }
        }
    }

    for (std::size_t i = 0; i < h * w; ++i) {
        const double s = signal_var[i];
        out.data()[i] = s > 0.0 ? coeffs.data()[i] * (s / (s + sigma0)) : 0.0;
    }
    return out;
}

/// Wavelet-domain denoising filter F: db4 decomposition, Wiener shrinkage of
/// every detail subband (approximation untouched), reconstruction.
inline RealPlane denoise(const RealPlane& img, const DenoiseParams& params)
{
    validate(params);
    WaveletPyramid pyr = dwt2(img, params.levels);
    for (DetailBands& b : pyr.details) {
        b.lh = wiener_subband(b.lh, params);
        b.hl = wiener_subband(b.hl, params);
        b.hh = wiener_subband(b.hh, params);
    }
    return idwt2(pyr);
}

inline RealPlane denoise(const Image& img, const DenoiseParams& params) { return denoise(img.plane(), params); }

/// w = I - F(I).
inline NoiseResidual residual(const RealPlane& img, const DenoiseParams& params)
{
    return NoiseResidual{img - denoise(img, params)};
}

inline NoiseResidual residual(const Image& img, const DenoiseParams& params)
{
    return residual(img.plane(), params);
}

} // namespace prnu
