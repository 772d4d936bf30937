#include <algorithm>
#include <cmath>

#include "dielink/analytics/analytics.hpp"

namespace dielink::analytics {

namespace {

// Deviations below this are rounding noise on a straight series.
constexpr double kStraightTolerance = 1e-12;

}  // namespace

std::optional<std::size_t> chord_knee(const std::vector<double>& d) {
    const std::size_t n = d.size();
    if (n < 3) return std::nullopt;
    // Chord from (1, d[0]) to (n, d[n-1]); distance of (r, d[r-1]) to that line.
    const double dx = static_cast<double>(n - 1);
    const double dy = d[n - 1] - d[0];
    const double norm = std::hypot(dx, dy);
    double best = 0.0;
    std::size_t best_rank = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double px = static_cast<double>(i);
        const double py = d[i] - d[0];
        const double dev = std::abs(dx * py - dy * px) / norm;
        if (dev > best) {
            best = dev;
            best_rank = i + 1;
        }
    }
    if (best <= kStraightTolerance * std::max(1.0, std::abs(dy))) return std::nullopt;
    return best_rank;
}

DistanceCurve build_curve(const RankedPairs& ranked) {
    DistanceCurve curve;
    std::vector<double> values;
    values.reserve(ranked.entries.size());
    for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
        curve.points.push_back({i + 1, ranked.entries[i].distance});
        values.push_back(ranked.entries[i].distance);
    }
    curve.knee_rank = chord_knee(values);
    return curve;
}

}  // namespace dielink::analytics
