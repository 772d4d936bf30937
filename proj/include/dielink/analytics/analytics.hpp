#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dielink/scoring/score_dataset.hpp"

namespace dielink::analytics {

using scoring::DistanceMatrix;
using scoring::PairScore;

/// Pairs by ascending distance, ties by (name1, name2).
struct RankedPairs {
    std::vector<PairScore> entries;
};

RankedPairs rank_pairs(const DistanceMatrix& m);
RankedPairs rank_pairs(std::vector<PairScore> scores);

/// Strict weak order used by rank_pairs.
bool ranks_before(const PairScore& a, const PairScore& b) noexcept;

struct CurvePoint {
    std::size_t rank = 0;  ///< 1-based
    double distance = 0.0;
};

struct DistanceCurve {
    std::vector<CurvePoint> points;
    /// Rank of the slope break; absent with < 3 points or a straight curve.
    std::optional<std::size_t> knee_rank;
};

/// Knee = the point farthest (perpendicular, in (rank, distance) units) from
/// the chord joining the first and last points.
DistanceCurve build_curve(const RankedPairs& ranked);

/// Knee rank of an ascending series; shared by build_curve.
std::optional<std::size_t> chord_knee(const std::vector<double>& ascending);

struct EmbeddingPoint {
    std::string coin_name;
    double x = 0.0;
    double y = 0.0;
};

/// Classical MDS details, for callers who need the spectrum.
struct MdsResult {
    Eigen::MatrixX2d coordinates;
    Eigen::VectorXd eigenvalues;  ///< descending, before clamping
    /// Squared embedded distances exceed squared inputs by at most this.
    double clamp_residual_bound = 0.0;
};

/// Classical MDS of a symmetric distance matrix with zero diagonal.
MdsResult classical_mds(const Eigen::MatrixXd& distances);

/// Dense symmetric matrix in coin_names order.
Eigen::MatrixXd dense_distances(const DistanceMatrix& m);

/// 2D classical MDS: square, double-center, two leading eigenpairs, negative
/// eigenvalues clamped to zero. Each axis is flipped so its first non-zero
/// loading is positive.
std::vector<EmbeddingPoint> embed_2d(const DistanceMatrix& m);

struct ClusterLabel {
    std::string coin_name;
    int cluster_id = 0;
    bool provisional = true;
};

/// Single-linkage clusters cut at `threshold`: coins joined by a chain of
/// distances <= threshold share an id. Ids are contiguous from 0 in
/// coin_names order. Throws std::invalid_argument unless 0 <= threshold <= 1.
std::vector<ClusterLabel> cluster(const DistanceMatrix& m, double threshold);

}  // namespace dielink::analytics
