#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "dielink/errors.hpp"
#include "dielink/imaging/normalize.hpp"

namespace dielink::imaging {

namespace {

constexpr int kBins = 256;
constexpr int kCloseRadius = 3;

int bin_of(float v) {
    return std::clamp(static_cast<int>(v * (kBins - 1) + 0.5f), 0, kBins - 1);
}

// Largest 8-connected component of `fg`; ties go to the component found first in raster order.
Mask largest_component(const Mask& fg) {
    const int w = fg.width();
    const int h = fg.height();
    std::vector<int> label(fg.size(), -1);
    std::vector<int> stack;
    int best_label = -1;
    std::size_t best_size = 0;
    int next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t start = static_cast<std::size_t>(y) * w + x;
            if (!fg.at(x, y) || label[start] >= 0) continue;
            std::size_t size = 0;
            label[start] = next;
            stack.assign(1, static_cast<int>(start));
            while (!stack.empty()) {
                const int idx = stack.back();
                stack.pop_back();
                ++size;
                const int cx = idx % w;
                const int cy = idx / w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx;
                        const int ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
                        if (fg.at(nx, ny) && label[n] < 0) {
                            label[n] = next;
                            stack.push_back(static_cast<int>(n));
                        }
                    }
                }
            }
            if (size > best_size) {
                best_size = size;
                best_label = next;
            }
            ++next;
        }
    }
    Mask out(w, h, 0);
    if (best_label < 0) return out;
    auto dst = out.pixels();
    for (std::size_t i = 0; i < label.size(); ++i) dst[i] = label[i] == best_label ? 1 : 0;
    return out;
}

// Disc structuring element; outside the raster is background.
Mask morph(const Mask& in, int radius, bool dilate) {
    const int w = in.width();
    const int h = in.height();
    std::vector<std::pair<int, int>> offsets;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
    Mask out(w, h, 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool hit = !dilate;
            for (auto [dx, dy] : offsets) {
                const int nx = x + dx;
                const int ny = y + dy;
                const bool v = nx >= 0 && ny >= 0 && nx < w && ny < h && in.at(nx, ny);
                if (dilate && v) {
                    hit = true;
                    break;
                }
                if (!dilate && !v) {
                    hit = false;
                    break;
                }
            }
            out.at(x, y) = hit ? 1 : 0;
        }
    }
    return out;
}

// Closing on a padded copy so shapes touching the border are not eroded.
Mask close(const Mask& in, int radius) {
    const int pad = radius + 1;
    Mask padded(in.width() + 2 * pad, in.height() + 2 * pad, 0);
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) padded.at(x + pad, y + pad) = in.at(x, y);
    const Mask closed = morph(morph(padded, radius, true), radius, false);
    Mask out(in.width(), in.height(), 0);
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x) out.at(x, y) = closed.at(x + pad, y + pad);
    return out;
}

}  // namespace

std::optional<double> otsu_threshold(const GrayImage& img) {
    std::array<double, kBins> hist{};
    for (float v : img.pixels()) hist[bin_of(v)] += 1.0;
    const double total = static_cast<double>(img.size());
    double sum_all = 0.0;
    for (int i = 0; i < kBins; ++i) sum_all += i * hist[i];

    double w0 = 0.0;
    double sum0 = 0.0;
    double best = -1.0;
    int best_t = -1;
    for (int t = 0; t < kBins - 1; ++t) {
        w0 += hist[t];
        sum0 += t * hist[t];
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_t = t;
        }
    }
    if (best_t < 0 || best <= 0.0) return std::nullopt;
    // Pixels in bins <= best_t are class 0.
    return (best_t + 0.5) / (kBins - 1);
}

Mask segment_coin(const GrayImage& img) {
    const auto threshold = otsu_threshold(img);
    if (!threshold) throw SegmentationFailure("uniform image: no foreground");

    const int w = img.width();
    const int h = img.height();
    Mask bright(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) bright.at(x, y) = img.at(x, y) > *threshold ? 1 : 0;

    // The class that dominates the border is the background.
    std::size_t border = 0;
    std::size_t border_bright = 0;
    for (int x = 0; x < w; ++x) {
        border_bright += bright.at(x, 0) + bright.at(x, h - 1);
        border += 2;
    }
    for (int y = 1; y + 1 < h; ++y) {
        border_bright += bright.at(0, y) + bright.at(w - 1, y);
        border += 2;
    }
    const bool coin_is_bright = 2 * border_bright <= border;
    Mask fg(w, h, 0);
    {
        auto src = bright.pixels();
        auto dst = fg.pixels();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] != 0) == coin_is_bright ? 1 : 0;
    }

    Mask coin = largest_component(fg);
    if (std::none_of(coin.pixels().begin(), coin.pixels().end(), [](auto v) { return v != 0; }))
        throw SegmentationFailure("no foreground component");
    return close(coin, kCloseRadius);
}

EffectiveSize estimate_effective_size(const GrayImage& img) {
    const Mask coin = segment_coin(img);
    BoundingBox box{img.width(), img.height(), -1, -1};
    for (int y = 0; y < coin.height(); ++y) {
        for (int x = 0; x < coin.width(); ++x) {
            if (!coin.at(x, y)) continue;
            box.x0 = std::min(box.x0, x);
            box.y0 = std::min(box.y0, y);
            box.x1 = std::max(box.x1, x);
            box.y1 = std::max(box.y1, y);
        }
    }
    if (box.x1 < 0) throw SegmentationFailure("closed foreground is empty");
    return EffectiveSize{std::max(box.width(), box.height())};
}

EffectiveSize effective_size_or_fallback(const GrayImage& img) {
    try {
        return estimate_effective_size(img);
    } catch (const SegmentationFailure&) {
        return EffectiveSize{std::max(img.width(), img.height())};
    }
}

}  // namespace dielink::imaging
