#include "dielink/registration/keypoints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "dielink/errors.hpp"
#include "dielink/imaging/filters.hpp"

namespace dielink::registration {

using imaging::GrayImage;

namespace {

constexpr int kPatchRadius = 15;
// Rotated sampling offsets reach kPatchRadius * sqrt(2); keep one extra pixel for bilinear taps.
constexpr int kBorder = 23;
constexpr int kNmsRadius = 2;
constexpr double kSmoothSigma = 1.0;
constexpr double kTensorSigma = 1.5;
constexpr double kDescriptorSigma = 2.0;

struct TestPair {
    double x1, y1, x2, y2;
};

// BRIEF sampling pattern: isotropic Gaussian with sigma = patch/5, clipped to the
// patch disc. Drawn from a fixed mt19937_64 stream with our own Box-Muller so the
// pattern does not depend on the standard library's distributions.
const std::vector<TestPair>& brief_pattern() {
    static const std::vector<TestPair> pattern = [] {
        std::mt19937_64 rng(0x5eed'b41e'f00dULL);
        const double sigma = (2.0 * kPatchRadius + 1.0) / 5.0;
        auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
        auto sample = [&](double& x, double& y) {
            for (;;) {
                const double u1 = uniform();
                const double u2 = uniform();
                const double r = std::sqrt(-2.0 * std::log(u1)) * sigma;
                x = r * std::cos(2.0 * std::numbers::pi * u2);
                y = r * std::sin(2.0 * std::numbers::pi * u2);
                if (x * x + y * y <= kPatchRadius * kPatchRadius) return;
            }
        };
        std::vector<TestPair> p(kDescriptorBits);
        for (auto& t : p) {
            sample(t.x1, t.y1);
            do {
                sample(t.x2, t.y2);
            } while (t.x1 == t.x2 && t.y1 == t.y2);
        }
        return p;
    }();
    return pattern;
}

struct Candidate {
    double x;
    double y;
    float response;
};

GrayImage harris_response(const GrayImage& img, double k) {
    const GrayImage smooth = imaging::gaussian_blur(img, kSmoothSigma);
    const int w = img.width();
    const int h = img.height();
    GrayImage ixx(w, h);
    GrayImage iyy(w, h);
    GrayImage ixy(w, h);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, w - 1);
            // Sobel
            const double gx = (smooth.at(xp, ym) + 2.0 * smooth.at(xp, y) + smooth.at(xp, yp)) -
                              (smooth.at(xm, ym) + 2.0 * smooth.at(xm, y) + smooth.at(xm, yp));
            const double gy = (smooth.at(xm, yp) + 2.0 * smooth.at(x, yp) + smooth.at(xp, yp)) -
                              (smooth.at(xm, ym) + 2.0 * smooth.at(x, ym) + smooth.at(xp, ym));
            ixx.at(x, y) = static_cast<float>(gx * gx / 64.0);
            iyy.at(x, y) = static_cast<float>(gy * gy / 64.0);
            ixy.at(x, y) = static_cast<float>(gx * gy / 64.0);
        }
    }
    const GrayImage sxx = imaging::gaussian_blur(ixx, kTensorSigma);
    const GrayImage syy = imaging::gaussian_blur(iyy, kTensorSigma);
    const GrayImage sxy = imaging::gaussian_blur(ixy, kTensorSigma);
    GrayImage response(w, h);
    auto out = response.pixels();
    auto a = sxx.pixels();
    auto b = syy.pixels();
    auto c = sxy.pixels();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double det = static_cast<double>(a[i]) * b[i] - static_cast<double>(c[i]) * c[i];
        const double tr = static_cast<double>(a[i]) + b[i];
        out[i] = static_cast<float>(det - k * tr * tr);
    }
    return response;
}

std::vector<Candidate> local_maxima(const GrayImage& r, const DetectorParams& params) {
    const int w = r.width();
    const int h = r.height();
    if (w <= 2 * kBorder || h <= 2 * kBorder) return {};
    float peak = 0.0f;
    for (int y = kBorder; y < h - kBorder; ++y)
        for (int x = kBorder; x < w - kBorder; ++x) peak = std::max(peak, r.at(x, y));
    const double floor = std::max(params.absolute_threshold, params.relative_threshold * peak);

    std::vector<std::vector<Candidate>> rows(h);
#pragma omp parallel for schedule(static)
    for (int y = kBorder; y < h - kBorder; ++y) {
        for (int x = kBorder; x < w - kBorder; ++x) {
            const float v = r.at(x, y);
            if (v <= floor) continue;
            bool is_max = true;
            for (int dy = -kNmsRadius; dy <= kNmsRadius && is_max; ++dy) {
                for (int dx = -kNmsRadius; dx <= kNmsRadius; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const float n = r.at(x + dx, y + dy);
                    // Plateaus keep the first pixel in raster order.
                    if (n > v || (n == v && (dy < 0 || (dy == 0 && dx < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            // Parabolic subpixel refinement.
            auto offset = [](double m, double c, double p) {
                const double denom = m - 2.0 * c + p;
                if (denom >= 0.0) return 0.0;
                return std::clamp(0.5 * (m - p) / denom, -0.5, 0.5);
            };
            const double ox = offset(r.at(x - 1, y), v, r.at(x + 1, y));
            const double oy = offset(r.at(x, y - 1), v, r.at(x, y + 1));
            rows[y].push_back({x + ox, y + oy, v});
        }
    }
    std::vector<Candidate> all;
    for (auto& row : rows) all.insert(all.end(), row.begin(), row.end());
    return all;
}

double centroid_orientation(const GrayImage& img, int cx, int cy) {
    double m01 = 0.0;
    double m10 = 0.0;
    for (int dy = -kPatchRadius; dy <= kPatchRadius; ++dy) {
        for (int dx = -kPatchRadius; dx <= kPatchRadius; ++dx) {
            if (dx * dx + dy * dy > kPatchRadius * kPatchRadius) continue;
            const double v = img.at(cx + dx, cy + dy);
            m10 += dx * v;
            m01 += dy * v;
        }
    }
    return std::atan2(m01, m10);
}

Descriptor describe(const GrayImage& img, double x, double y, double angle) {
    const auto& pattern = brief_pattern();
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    Descriptor d{};
    for (int i = 0; i < kDescriptorBits; ++i) {
        const TestPair& t = pattern[i];
        const float v1 = imaging::sample_bilinear(img, x + c * t.x1 - s * t.y1, y + s * t.x1 + c * t.y1);
        const float v2 = imaging::sample_bilinear(img, x + c * t.x2 - s * t.y2, y + s * t.x2 + c * t.y2);
        if (v1 < v2) d[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    return d;
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const GrayImage& img, const DetectorParams& params) {
    if (params.levels < 1 || params.level_scale <= 1.0 || params.max_keypoints < 1)
        throw std::invalid_argument("detect_keypoints: invalid parameters");

    std::vector<GrayImage> levels;
    std::vector<double> factors;
    double total_area = 0.0;
    for (int l = 0; l < params.levels; ++l) {
        const double f = std::pow(params.level_scale, l);
        const int w = static_cast<int>(std::lround(img.width() / f));
        const int h = static_cast<int>(std::lround(img.height() / f));
        if (w <= 2 * kBorder || h <= 2 * kBorder) break;
        levels.push_back(l == 0 ? img : imaging::resample_area(img, w, h));
        factors.push_back(f);
        total_area += static_cast<double>(w) * h;
    }

    std::vector<Keypoint> keypoints;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const GrayImage& level = levels[l];
        const double share = static_cast<double>(level.width()) * level.height() / total_area;
        const auto quota = static_cast<std::size_t>(std::lround(params.max_keypoints * share));

        auto candidates = local_maxima(harris_response(level, params.harris_k), params);
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Candidate& a, const Candidate& b) { return a.response > b.response; });
        if (candidates.size() > quota) candidates.resize(quota);

        const GrayImage patch_img = imaging::gaussian_blur(level, kDescriptorSigma);
        std::vector<Keypoint> found(candidates.size());
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const Candidate& c = candidates[i];
            const int cx = static_cast<int>(std::lround(c.x));
            const int cy = static_cast<int>(std::lround(c.y));
            Keypoint& kp = found[i];
            kp.orientation = centroid_orientation(patch_img, cx, cy);
            kp.descriptor = describe(patch_img, c.x, c.y, kp.orientation);
            kp.x = c.x * factors[l];
            kp.y = c.y * factors[l];
            kp.size = (2.0 * kPatchRadius + 1.0) * factors[l];
            kp.octave = static_cast<int>(l);
            kp.response = c.response;
        }
        keypoints.insert(keypoints.end(), found.begin(), found.end());
    }
    if (keypoints.size() > static_cast<std::size_t>(params.max_keypoints)) {
        std::stable_sort(keypoints.begin(), keypoints.end(),
                         [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
        keypoints.resize(params.max_keypoints);
    }
    if (keypoints.size() < static_cast<std::size_t>(params.min_keypoints))
        throw TooFewKeypoints("found " + std::to_string(keypoints.size()) + " keypoints, need " +
                              std::to_string(params.min_keypoints));
    return keypoints;
}

std::vector<Keypoint> detect_keypoints(const imaging::NormalizedImage& img, const DetectorParams& params) {
    return detect_keypoints(img.image, params);
}

}  // namespace dielink::registration
