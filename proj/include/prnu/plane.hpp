#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "prnu/error.hpp"

namespace prnu {

struct Dims {
    std::size_t height = 0;
    std::size_t width = 0;

    constexpr std::size_t area() const noexcept { return height * width; }
    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(Dims d)
{
    return std::to_string(d.height) + "x" + std::to_string(d.width);
}

inline void require_same_dims(Dims a, Dims b, const char* what)
{
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": dimension mismatch (" + to_string(a) + " vs " +
                                to_string(b) + ")");
    }
}

/// Dense row-major 2D grid. The workhorse container for images, residuals,
/// wavelet subbands and reference patterns.
template <typename T>
class Plane {
public:
    using value_type = T;

    Plane() = default;

    Plane(std::size_t height, std::size_t width, T fill = T{})
        : height_(height), width_(width), data_(height * width, fill)
    {
    }

    Plane(std::size_t height, std::size_t width, std::vector<T> data)
        : height_(height), width_(width), data_(std::move(data))
    {
        if (data_.size() != height_ * width_) {
            throw InvalidArgument("Plane: data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(height_) + "x" +
                                  std::to_string(width_));
        }
    }

    explicit Plane(Dims d, T fill = T{}) : Plane(d.height, d.width, fill) {}

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    Dims dims() const noexcept { return {height_, width_}; }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * width_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * width_ + c]; }

    T* row(std::size_t r) noexcept { return data_.data() + r * width_; }
    const T* row(std::size_t r) const noexcept { return data_.data() + r * width_; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<T> data_;
};

using RealPlane = Plane<double>;

template <typename T>
bool all_finite(const Plane<T>& p)
{
    return std::all_of(p.begin(), p.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
Plane<T> operator-(const Plane<T>& a, const Plane<T>& b)
{
    require_same_dims(a.dims(), b.dims(), "subtract");
    Plane<T> out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] - b.data()[i];
    }
    return out;
}

template <typename T>
Plane<T> operator+(const Plane<T>& a, const Plane<T>& b)
{
    require_same_dims(a.dims(), b.dims(), "add");
    Plane<T> out(a.dims());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.data()[i] = a.data()[i] + b.data()[i];
    }
    return out;
}

template <typename T>
double mean(const Plane<T>& p)
{
    if (p.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (T v : p) {
        s += static_cast<double>(v);
    }
    return s / static_cast<double>(p.size());
}

/// Population variance.
template <typename T>
double variance(const Plane<T>& p)
{
    if (p.empty()) {
        return 0.0;
    }
    const double mu = mean(p);
    double s = 0.0;
    for (T v : p) {
        const double d = static_cast<double>(v) - mu;
        s += d * d;
    }
    return s / static_cast<double>(p.size());
}

template <typename T>
T max_abs(const Plane<T>& p)
{
    T m{};
    for (T v : p) {
        m = std::max(m, static_cast<T>(std::abs(v)));
    }
    return m;
}

template <typename T>
double max_abs_diff(const Plane<T>& a, const Plane<T>& b)
{
    require_same_dims(a.dims(), b.dims(), "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    }
    return m;
}

} // namespace prnu
