#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "dielink/scoring/pair_distance.hpp"

namespace dielink::scoring {

/// All N(N-1)/2 unordered pairs of a dataset, each exactly once.
struct DistanceMatrix {
    std::vector<std::string> coin_names;
    std::vector<PairScore> scores;

    static constexpr std::size_t pair_count(std::size_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

    /// Distance between two named coins (either order); nullopt if unknown.
    std::optional<double> distance(const std::string& a, const std::string& b) const;
};

/// Throws std::invalid_argument when a name is duplicated, a pair is missing or repeated.
void validate_matrix(const DistanceMatrix& m);

struct ScoreOptions {
    /// Worker threads for the pair loop; 0 = OpenMP default.
    int threads = 0;
    /// Incremented once per scored pair.
    std::atomic<std::size_t>* progress = nullptr;
};

/// Score every pair. Keypoints are computed once per image. Pairs are spread
/// over an OpenMP worker pool; results are identical to the serial path.
/// Throws DatasetTooSmall when fewer than 2 images, std::invalid_argument on duplicate names.
DistanceMatrix score_dataset(const std::vector<imaging::NormalizedImage>& images, const ScoringParams& params = {},
                             const ScoreOptions& options = {});

/// Single-threaded reference of score_dataset.
DistanceMatrix score_dataset_serial(const std::vector<imaging::NormalizedImage>& images,
                                    const ScoringParams& params = {});

}  // namespace dielink::scoring
