#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dielink::imaging {

/// Row-major 2D raster with at least one pixel.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        check_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * height)
            throw std::invalid_argument("raster: pixel count does not match dimensions");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    T at(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& at(int x, int y) noexcept { return data_[index(x, y)]; }

    std::span<const T> row(int y) const noexcept {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }
    std::span<T> row(int y) noexcept {
        return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
    }

    std::span<const T> pixels() const noexcept { return data_; }
    std::span<T> pixels() noexcept { return data_; }

    bool same_shape(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static void check_dims(int w, int h) {
        if (w < 1 || h < 1) throw std::invalid_argument("raster: width and height must be >= 1");
    }
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_;
    int height_;
    std::vector<T> data_;
};

/// Luminance image, values in [0,1].
using GrayImage = Raster<float>;

/// Binary mask, 0 = excluded, 1 = included.
using Mask = Raster<std::uint8_t>;

/// Clamp every pixel into [0,1].
void clamp_unit(GrayImage& img);

/// Axis-aligned bounds in pixel coordinates, inclusive.
struct BoundingBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const noexcept { return x1 - x0 + 1; }
    int height() const noexcept { return y1 - y0 + 1; }
};

/// Coin extent in pixels: the larger side of the coin's bounding box.
struct EffectiveSize {
    int extent = 1;
};

/// Canonical working image: the coin brought down to about 400px.
struct NormalizedImage {
    GrayImage image;
    double scale_applied = 1.0;
    std::string source_name;
    int effective_extent = 1;
    bool quality_warning = false;
};

}  // namespace dielink::imaging
