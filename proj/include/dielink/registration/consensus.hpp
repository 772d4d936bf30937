#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dielink/registration/matching.hpp"
#include "dielink/registration/transform.hpp"

namespace dielink::registration {

/// A source point (image B) paired with its target (image A).
struct Correspondence {
    Point2 source;
    Point2 target;
};

struct ConsensusParams {
    int iterations = 2000;
    double inlier_threshold = 3.0;  ///< pixels
    double min_inlier_ratio = 0.3;
    int min_inliers = 3;
    std::uint64_t seed = 0;
};

struct TransformEstimate {
    SimilarityTransform transform;  ///< maps source (B) coordinates onto target (A)
    std::vector<int> inliers;       ///< indices into the correspondence list
    double inlier_ratio = 0.0;
    double rms_residual = 0.0;  ///< over inliers, pixels
};

/// Random-sample consensus over 2-point similarity hypotheses followed by
/// iterated least-squares refits on the inlier set. Deterministic for a fixed seed.
/// Throws DegenerateGeometry (< 3 correspondences, or all points coincident)
/// and ConsensusFailure (inlier ratio or count below the thresholds).
TransformEstimate estimate_transform(std::span<const Correspondence> correspondences,
                                     const ConsensusParams& params = {});

/// Same, on matched keypoints: the result maps b's frame onto a's.
TransformEstimate estimate_transform(const MatchSet& matches, std::span<const Keypoint> a,
                                     std::span<const Keypoint> b, const ConsensusParams& params = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept;

/// Per-pair seed from the two (canonically ordered) file names and a run seed.
std::uint64_t pair_seed(std::string_view name1, std::string_view name2, std::uint64_t run_seed) noexcept;

}  // namespace dielink::registration
