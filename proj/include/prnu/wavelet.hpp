#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "prnu/error.hpp"
#include "prnu/plane.hpp"

namespace prnu {

/// Daubechies orthogonal filter with four vanishing moments (8 taps, "db4").
/// Coefficients are the reconstruction lowpass; analysis correlates with them.
struct Daubechies4 {
    static constexpr std::size_t taps = 8;
    static constexpr std::array<double, taps> lowpass{
        0.23037781330885523,  0.7148465705525415,   0.6308807679295904,  -0.02798376941698385,
        -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278,
    };

    /// Quadrature mirror highpass g[k] = (-1)^k h[L-1-k].
    static constexpr std::array<double, taps> highpass = [] {
        std::array<double, taps> g{};
        for (std::size_t k = 0; k < taps; ++k) {
            g[k] = (k % 2 == 0 ? 1.0 : -1.0) * lowpass[taps - 1 - k];
        }
        return g;
    }();
};

/// Detail subbands of one decomposition level. `lh` is lowpass along rows and
/// highpass along columns, `hl` the reverse, `hh` highpass in both directions.
struct DetailBands {
    RealPlane lh;
    RealPlane hl;
    RealPlane hh;
};

struct WaveletPyramid {
    /// details[0] is the finest level.
    std::vector<DetailBands> details;
    RealPlane approximation;
    /// Dimensions of the (possibly padded) plane that was transformed.
    Dims padded_dims;
    /// Dimensions of the caller's plane; idwt2 crops back to these.
    Dims source_dims;

    std::size_t levels() const noexcept { return details.size(); }
};

namespace detail {

/// Half-sample symmetric index: ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
inline std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept
{
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) {
        m += period;
    }
    return m < static_cast<std::ptrdiff_t>(n) ? static_cast<std::size_t>(m)
                                              : static_cast<std::size_t>(period - 1 - m);
}

inline std::size_t round_up(std::size_t n, std::size_t multiple) noexcept
{
    return (n + multiple - 1) / multiple * multiple;
}

/// Extends `src` at its bottom/right edges by mirror reflection.
inline RealPlane pad_symmetric(const RealPlane& src, Dims target)
{
    if (target == src.dims()) {
        return src;
    }
    std::vector<std::size_t> cols(target.width);
    for (std::size_t c = 0; c < target.width; ++c) {
        cols[c] = reflect_index(static_cast<std::ptrdiff_t>(c), src.width());
    }
    RealPlane out(target);
    for (std::size_t r = 0; r < target.height; ++r) {
        const double* s = src.row(reflect_index(static_cast<std::ptrdiff_t>(r), src.height()));
        double* d = out.row(r);
        for (std::size_t c = 0; c < target.width; ++c) {
            d[c] = s[cols[c]];
        }
    }
    return out;
}

inline RealPlane crop(const RealPlane& src, Dims target)
{
    if (target == src.dims()) {
        return src;
    }
    RealPlane out(target);
    for (std::size_t r = 0; r < target.height; ++r) {
        std::copy_n(src.row(r), target.width, out.row(r));
    }
    return out;
}

/// Periodized analysis along rows: `in` (h x w) -> lo, hi (h x w/2).
/// Polyphase form so the inner loops run over contiguous memory.
template <typename Filter>
void analyze_rows(const RealPlane& in, RealPlane& lo, RealPlane& hi)
{
    constexpr std::size_t L = Filter::taps;
    constexpr std::size_t P = L / 2;
    const std::size_t w = in.width();
    const std::size_t half = w / 2;
    lo = RealPlane(in.height(), half);
    hi = RealPlane(in.height(), half);
    std::vector<double> even(half + P);
    std::vector<double> odd(half + P);
    for (std::size_t r = 0; r < in.height(); ++r) {
        const double* src = in.row(r);
        for (std::size_t j = 0; j < half; ++j) {
            even[j] = src[2 * j];
            odd[j] = src[2 * j + 1];
        }
        for (std::size_t j = half; j < half + P; ++j) {
            even[j] = src[(2 * j) % w];
            odd[j] = src[(2 * j + 1) % w];
        }
        double* l = lo.row(r);
        double* h = hi.row(r);
        for (std::size_t m = 0; m < P; ++m) {
            const double le = Filter::lowpass[2 * m];
            const double lo_odd = Filter::lowpass[2 * m + 1];
            const double he = Filter::highpass[2 * m];
            const double ho = Filter::highpass[2 * m + 1];
            const double* xe = even.data() + m;
            const double* xo = odd.data() + m;
            for (std::size_t i = 0; i < half; ++i) {
                l[i] += le * xe[i] + lo_odd * xo[i];
                h[i] += he * xe[i] + ho * xo[i];
            }
        }
    }
}

/// Periodized analysis along columns: `in` (h x w) -> lo, hi (h/2 x w).
template <typename Filter>
void analyze_cols(const RealPlane& in, RealPlane& lo, RealPlane& hi)
{
    constexpr std::size_t L = Filter::taps;
    const std::size_t n = in.height();
    const std::size_t w = in.width();
    const std::size_t half = n / 2;
    lo = RealPlane(half, w);
    hi = RealPlane(half, w);
    for (std::size_t i = 0; i < half; ++i) {
        double* l = lo.row(i);
        double* h = hi.row(i);
        for (std::size_t k = 0; k < L; ++k) {
            const double* x = in.row((2 * i + k) % n);
            const double cl = Filter::lowpass[k];
            const double ch = Filter::highpass[k];
            for (std::size_t c = 0; c < w; ++c) {
                l[c] += cl * x[c];
                h[c] += ch * x[c];
            }
        }
    }
}

/// Adjoint of analyze_rows.
template <typename Filter>
RealPlane synthesize_rows(const RealPlane& lo, const RealPlane& hi)
{
    constexpr std::size_t L = Filter::taps;
    constexpr std::size_t P = L / 2;
    const std::size_t half = lo.width();
    const std::size_t w = 2 * half;
    RealPlane out(lo.height(), w);
    std::vector<double> even(half + P);
    std::vector<double> odd(half + P);
    for (std::size_t r = 0; r < lo.height(); ++r) {
        std::fill(even.begin(), even.end(), 0.0);
        std::fill(odd.begin(), odd.end(), 0.0);
        const double* l = lo.row(r);
        const double* h = hi.row(r);
        for (std::size_t m = 0; m < P; ++m) {
            const double le = Filter::lowpass[2 * m];
            const double lo_odd = Filter::lowpass[2 * m + 1];
            const double he = Filter::highpass[2 * m];
            const double ho = Filter::highpass[2 * m + 1];
            double* xe = even.data() + m;
            double* xo = odd.data() + m;
            for (std::size_t i = 0; i < half; ++i) {
                xe[i] += le * l[i] + he * h[i];
                xo[i] += lo_odd * l[i] + ho * h[i];
            }
        }
        double* dst = out.row(r);
        for (std::size_t q = 0; q < half; ++q) {
            dst[2 * q] = even[q];
            dst[2 * q + 1] = odd[q];
        }
        for (std::size_t q = half; q < half + P; ++q) {
            dst[(2 * q) % w] += even[q];
            dst[(2 * q + 1) % w] += odd[q];
        }
    }
    return out;
}

/// Adjoint of analyze_cols.
template <typename Filter>
RealPlane synthesize_cols(const RealPlane& lo, const RealPlane& hi)
{
    constexpr std::size_t L = Filter::taps;
    const std::size_t half = lo.height();
    const std::size_t n = 2 * half;
    const std::size_t w = lo.width();
    RealPlane out(n, w);
    for (std::size_t i = 0; i < half; ++i) {
        const double* l = lo.row(i);
        const double* h = hi.row(i);
        for (std::size_t k = 0; k < L; ++k) {
            double* x = out.row((2 * i + k) % n);
            const double cl = Filter::lowpass[k];
            const double ch = Filter::highpass[k];
            for (std::size_t c = 0; c < w; ++c) {
                x[c] += cl * l[c] + ch * h[c];
            }
        }
    }
    return out;
}

} // namespace detail

/// Padded size used for a `levels`-deep transform: each dimension rounded up
/// to a multiple of 2^levels.
inline Dims wavelet_padded_dims(Dims d, unsigned levels)
{
    const std::size_t block = std::size_t{1} << levels;
    return {detail::round_up(d.height, block), detail::round_up(d.width, block)};
}

/// Orthogonal separable 2D DWT to `levels` depth.
///
/// Dimensions that are not a multiple of 2^levels are first extended by
/// mirror reflection; the transform itself is periodized, which keeps it an
/// exact orthogonal map on the padded plane.
template <typename Filter = Daubechies4>
WaveletPyramid dwt2(const RealPlane& img, unsigned levels)
{
    if (levels == 0) {
        throw InvalidArgument("dwt2: levels must be >= 1");
    }
    if (levels > 20) {
        throw InvalidArgument("dwt2: levels too large");
    }
    const std::size_t block = std::size_t{1} << levels;
    if (img.height() < block || img.width() < block) {
        throw InvalidArgument("dwt2: image " + to_string(img.dims()) + " too small for " +
                              std::to_string(levels) + " decomposition levels");
    }

    WaveletPyramid pyr;
    pyr.source_dims = img.dims();
    pyr.padded_dims = wavelet_padded_dims(img.dims(), levels);
    pyr.details.reserve(levels);

    RealPlane current = detail::pad_symmetric(img, pyr.padded_dims);
    RealPlane row_lo;
    RealPlane row_hi;
    for (unsigned lvl = 0; lvl < levels; ++lvl) {
        detail::analyze_rows<Filter>(current, row_lo, row_hi);
        DetailBands bands;
        RealPlane ll;
        detail::analyze_cols<Filter>(row_lo, ll, bands.lh);
        detail::analyze_cols<Filter>(row_hi, bands.hl, bands.hh);
        pyr.details.push_back(std::move(bands));
        current = std::move(ll);
    }
    pyr.approximation = std::move(current);
    return pyr;
}

/// Inverse of dwt2; the result is cropped to the pyramid's source dimensions.
template <typename Filter = Daubechies4>
RealPlane idwt2(const WaveletPyramid& pyr)
{
    RealPlane current = pyr.approximation;
    for (std::size_t lvl = pyr.details.size(); lvl-- > 0;) {
        const DetailBands& b = pyr.details[lvl];
        if (b.lh.dims() != current.dims() || b.hl.dims() != current.dims() || b.hh.dims() != current.dims()) {
            throw DimensionMismatch("idwt2: inconsistent subband dimensions at level " + std::to_string(lvl));
        }
        RealPlane row_lo = detail::synthesize_cols<Filter>(current, b.lh);
        RealPlane row_hi = detail::synthesize_cols<Filter>(b.hl, b.hh);
        current = detail::synthesize_rows<Filter>(row_lo, row_hi);
    }
    return detail::crop(current, pyr.source_dims);
}

} // namespace prnu
