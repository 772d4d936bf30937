#pragma once

#include <span>
#include <vector>

#include "dielink/registration/keypoints.hpp"

namespace dielink::registration {

inline constexpr double kDefaultRatio = 0.75;

struct Match {
    int index_a = 0;
    int index_b = 0;
    int distance = 0;  ///< Hamming distance between descriptors; lower is better
};

/// One-to-one correspondences, sorted by index_a.
struct MatchSet {
    std::vector<Match> pairs;

    std::size_t size() const noexcept { return pairs.size(); }
    bool empty() const noexcept { return pairs.empty(); }
};

int hamming(const Descriptor& a, const Descriptor& b) noexcept;

/// Nearest-neighbour matching a -> b with the nearest/second-nearest ratio
/// test, then one-to-one: each b keeps only its closest a.
/// Throws NoMatches when nothing survives; std::invalid_argument on empty input.
MatchSet match_keypoints(std::span<const Keypoint> a, std::span<const Keypoint> b, double ratio = kDefaultRatio);

}  // namespace dielink::registration
