#include "dielink/scoring/pair_distance.hpp"

#include <algorithm>

#include "dielink/errors.hpp"
#include "dielink/registration/matching.hpp"
#include "dielink/registration/warp.hpp"

namespace dielink::scoring {

namespace reg = dielink::registration;

PreparedImage prepare(imaging::NormalizedImage image, const ScoringParams& params) {
    PreparedImage out{std::move(image), std::nullopt};
    try {
        out.keypoints = reg::detect_keypoints(out.image, params.detector);
    } catch (const TooFewKeypoints&) {
    }
    return out;
}

double ssim_to_distance(double s) noexcept {
    return std::clamp((1.0 - s) / 2.0, 0.0, 1.0);
}

DirectedScore register_and_score(const PreparedImage& target, const PreparedImage& source, std::uint64_t seed,
                                 const ScoringParams& params) {
    DirectedScore out;
    if (!target.keypoints || !source.keypoints) return out;
    try {
        const reg::MatchSet matches = reg::match_keypoints(*target.keypoints, *source.keypoints, params.ratio);
        reg::ConsensusParams consensus = params.consensus;
        consensus.seed = seed;
        const reg::TransformEstimate est =
            reg::estimate_transform(matches, *target.keypoints, *source.keypoints, consensus);
        const auto& tgt = target.image.image;
        const reg::WarpedImage warped = reg::warp(source.image.image, est.transform, tgt.width(), tgt.height());
        out.ssim = scoring::ssim(tgt, warped.image, warped.valid, params.ssim);
        out.distance = ssim_to_distance(out.ssim);
        out.alignable = true;
        out.transform = est.transform;
        out.inliers = static_cast<int>(est.inliers.size());
    } catch (const RegistrationError&) {
        return DirectedScore{};
    } catch (const EmptyOverlap&) {
        return DirectedScore{};
    }
    return out;
}

PairScore score_pair(const PreparedImage& a, const PreparedImage& b, const ScoringParams& params) {
    const bool a_first = a.image.source_name <= b.image.source_name;
    const PreparedImage& first = a_first ? a : b;
    const PreparedImage& second = a_first ? b : a;

    PairScore score;
    score.name1 = first.image.source_name;
    score.name2 = second.image.source_name;

    // Target is the larger coin; on equal extents name2 is registered onto name1.
    const bool second_is_target = second.image.effective_extent > first.image.effective_extent;
    const PreparedImage& target = second_is_target ? second : first;
    const PreparedImage& source = second_is_target ? first : second;

    const DirectedScore d =
        register_and_score(target, source, reg::pair_seed(score.name1, score.name2, params.run_seed), params);
    score.distance = d.distance;
    score.alignable = d.alignable;
    score.inliers = d.inliers;
    if (d.transform) score.transform = second_is_target ? d.transform->inverse() : *d.transform;
    return score;
}

PairScore pair_distance(const imaging::NormalizedImage& a, const imaging::NormalizedImage& b,
                        const ScoringParams& params) {
    return score_pair(prepare(a, params), prepare(b, params), params);
}

}  // namespace dielink::scoring
