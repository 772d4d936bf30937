#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dielink/imaging/gray_image.hpp"

namespace dielink::registration {

/// 256-bit binary descriptor.
using Descriptor = std::array<std::uint64_t, 4>;
inline constexpr int kDescriptorBits = 256;

struct Keypoint {
    double x = 0.0;  ///< level-0 pixel coordinates
    double y = 0.0;
    double size = 0.0;         ///< patch diameter in level-0 pixels
    double orientation = 0.0;  ///< radians
    int octave = 0;
    float response = 0.0f;
    Descriptor descriptor{};
};

struct DetectorParams {
    int max_keypoints = 1000;
    int min_keypoints = 8;
    int levels = 4;
    double level_scale = 1.25;
    double harris_k = 0.04;
    /// Responses below this fraction of the level maximum are dropped.
    double relative_threshold = 1e-3;
    /// Absolute floor; a flat image produces no response at all.
    double absolute_threshold = 1e-10;
};

/// Multi-scale Harris corners with intensity-centroid orientation and
/// rotated BRIEF descriptors. Deterministic. Returns at most max_keypoints.
/// Throws TooFewKeypoints when fewer than min_keypoints are found.
std::vector<Keypoint> detect_keypoints(const imaging::GrayImage& img, const DetectorParams& params = {});
std::vector<Keypoint> detect_keypoints(const imaging::NormalizedImage& img, const DetectorParams& params = {});

}  // namespace dielink::registration
