#include <algorithm>

#include "dielink/analytics/analytics.hpp"

namespace dielink::analytics {

bool ranks_before(const PairScore& a, const PairScore& b) noexcept {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.name1 != b.name1) return a.name1 < b.name1;
    return a.name2 < b.name2;
}

RankedPairs rank_pairs(std::vector<PairScore> scores) {
    std::sort(scores.begin(), scores.end(), ranks_before);
    return RankedPairs{std::move(scores)};
}

RankedPairs rank_pairs(const DistanceMatrix& m) {
    return rank_pairs(m.scores);
}

}  // namespace dielink::analytics
