#include "dielink/imaging/filters.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dielink::imaging {

std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma, int radius) {
    const auto taps = gaussian_kernel(sigma, radius);
    const int r = static_cast<int>(taps.size() / 2);
    const int w = img.width();
    const int h = img.height();

    GrayImage tmp(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        auto src = img.row(y);
        auto dst = tmp.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                acc += taps[k + r] * src[xx];
            }
            dst[x] = static_cast<float>(acc);
        }
    }

    GrayImage out(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += taps[k + r] * tmp.at(x, yy);
            }
            dst[x] = static_cast<float>(acc);
        }
    }
    return out;
}

namespace {

struct Footprint {
    int first = 0;
    std::vector<double> weights;
};

// Source coverage of each output cell along one axis, weights summing to 1.
std::vector<Footprint> area_footprints(int in, int out) {
    std::vector<Footprint> fps(out);
    const double step = static_cast<double>(in) / out;
    for (int j = 0; j < out; ++j) {
        const double lo = j * step;
        const double hi = std::min<double>(in, (j + 1) * step);
        const int first = static_cast<int>(std::floor(lo));
        const int last = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
        Footprint& fp = fps[j];
        fp.first = first;
        double total = 0.0;
        for (int i = first; i <= last; ++i) {
            const double cover = std::min<double>(hi, i + 1) - std::max<double>(lo, i);
            fp.weights.push_back(std::max(0.0, cover));
            total += fp.weights.back();
        }
        for (double& wgt : fp.weights) wgt /= total;
    }
    return fps;
}

}  // namespace

GrayImage resample_area(const GrayImage& img, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1)
        throw std::invalid_argument("resample_area: output must be at least 1x1");
    if (out_width == img.width() && out_height == img.height()) return img;

    const auto fx = area_footprints(img.width(), out_width);
    const auto fy = area_footprints(img.height(), out_height);

    GrayImage horiz(out_width, img.height());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height(); ++y) {
        auto src = img.row(y);
        auto dst = horiz.row(y);
        for (int x = 0; x < out_width; ++x) {
            const Footprint& fp = fx[x];
            double acc = 0.0;
            for (std::size_t k = 0; k < fp.weights.size(); ++k) acc += fp.weights[k] * src[fp.first + k];
            dst[x] = static_cast<float>(acc);
        }
    }

    GrayImage out(out_width, out_height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_height; ++y) {
        const Footprint& fp = fy[y];
        auto dst = out.row(y);
        for (int x = 0; x < out_width; ++x) {
            double acc = 0.0;
            for (std::size_t k = 0; k < fp.weights.size(); ++k)
                acc += fp.weights[k] * horiz.at(x, fp.first + static_cast<int>(k));
            dst[x] = static_cast<float>(acc);
        }
    }
    return out;
}

float sample_bilinear(const GrayImage& img, double x, double y) noexcept {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ax = x - x0;
    const double ay = y - y0;
    const double top = img.at(x0, y0) + ax * (img.at(x1, y0) - img.at(x0, y0));
    const double bottom = img.at(x0, y1) + ax * (img.at(x1, y1) - img.at(x0, y1));
    return static_cast<float>(top + ay * (bottom - top));
}

}  // namespace dielink::imaging
