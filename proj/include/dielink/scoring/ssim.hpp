#pragma once

#include <vector>

#include "dielink/imaging/gray_image.hpp"

namespace dielink::scoring {

/// Separable window: weight(i, j) = horizontal[i] * vertical[j]. Windows are
/// anchored at their top-left corner and only placed fully inside the image.
struct SsimWindow {
    std::vector<double> horizontal;
    std::vector<double> vertical;

    int width() const noexcept { return static_cast<int>(horizontal.size()); }
    int height() const noexcept { return static_cast<int>(vertical.size()); }

    static SsimWindow gaussian(int size = 11, double sigma = 1.5);
    static SsimWindow uniform(int width, int height);
};

struct SsimParams {
    SsimWindow window = SsimWindow::gaussian();
    double dynamic_range = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;
    /// Windows with fewer valid pixels than this fraction are skipped.
    double min_valid_fraction = 0.8;

    double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
};

/// Local SSIM of one window from its weighted moments.
double ssim_from_moments(double mu_x, double mu_y, double var_x, double var_y, double cov_xy,
                         const SsimParams& params) noexcept;

/// Mean SSIM over every qualifying window. Moments inside a window use the
/// window weights restricted to valid pixels and renormalized. OpenMP over rows.
/// Throws EmptyOverlap when no window qualifies, std::invalid_argument on shape mismatch.
double ssim(const imaging::GrayImage& a, const imaging::GrayImage& b, const imaging::Mask& mask,
            const SsimParams& params = {});
double ssim(const imaging::GrayImage& a, const imaging::GrayImage& b, const SsimParams& params = {});

/// Serial reference: every window summed directly, no separable passes.
double ssim_reference(const imaging::GrayImage& a, const imaging::GrayImage& b, const imaging::Mask& mask,
                      const SsimParams& params = {});

}  // namespace dielink::scoring
