#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dielink/imaging/gray_image.hpp"
#include "dielink/registration/consensus.hpp"
#include "dielink/registration/keypoints.hpp"
#include "dielink/registration/transform.hpp"
#include "dielink/scoring/ssim.hpp"

namespace dielink::scoring {

/// Canonically ordered pair (name1 < name2) with its distance in [0,1].
struct PairScore {
    std::string name1;
    std::string name2;
    double distance = 1.0;
    bool alignable = false;
    /// Maps name2's normalized frame onto name1's, when alignable.
    std::optional<registration::SimilarityTransform> transform;
    int inliers = 0;
};

struct ScoringParams {
    registration::DetectorParams detector;
    double ratio = registration::kDefaultRatio;
    registration::ConsensusParams consensus{.iterations = 2000,
                                            .inlier_threshold = 3.0,
                                            .min_inlier_ratio = 0.3,
                                            .min_inliers = 8,
                                            .seed = 0};
    SsimParams ssim;
    std::uint64_t run_seed = 0;
};

/// A normalized image with its keypoints; nullopt keypoints means too few were found.
struct PreparedImage {
    imaging::NormalizedImage image;
    std::optional<std::vector<registration::Keypoint>> keypoints;
};

PreparedImage prepare(imaging::NormalizedImage image, const ScoringParams& params = {});

/// Result of registering `source` onto `target` and comparing in target's frame.
struct DirectedScore {
    double distance = 1.0;
    double ssim = -1.0;
    bool alignable = false;
    std::optional<registration::SimilarityTransform> transform;  ///< source -> target
    int inliers = 0;
};

/// SSIM in [-1,1] mapped onto a distance in [0,1], 0 = identical.
double ssim_to_distance(double s) noexcept;

/// One direction only; unalignable outcomes return distance 1.
DirectedScore register_and_score(const PreparedImage& target, const PreparedImage& source, std::uint64_t seed,
                                 const ScoringParams& params = {});

/// The stored, symmetric pair distance. The smaller-extent image is registered
/// onto the larger (ties: name2 onto name1), seeded from the two names.
PairScore score_pair(const PreparedImage& a, const PreparedImage& b, const ScoringParams& params = {});

/// Convenience: prepare both and score.
PairScore pair_distance(const imaging::NormalizedImage& a, const imaging::NormalizedImage& b,
                        const ScoringParams& params = {});

}  // namespace dielink::scoring
