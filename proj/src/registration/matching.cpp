#include "dielink/registration/matching.hpp"

#include <bit>
#include <limits>
#include <stdexcept>

#include "dielink/errors.hpp"

namespace dielink::registration {

int hamming(const Descriptor& a, const Descriptor& b) noexcept {
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(a[i] ^ b[i]);
    return d;
}

MatchSet match_keypoints(std::span<const Keypoint> a, std::span<const Keypoint> b, double ratio) {
    if (a.empty() || b.empty()) throw std::invalid_argument("match_keypoints: empty keypoint list");

    constexpr int kNone = -1;
    std::vector<Match> candidate(a.size(), Match{kNone, kNone, 0});
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < a.size(); ++i) {
        int best = std::numeric_limits<int>::max();
        int second = std::numeric_limits<int>::max();
        int best_j = kNone;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const int d = hamming(a[i].descriptor, b[j].descriptor);
            if (d < best) {
                second = best;
                best = d;
                best_j = static_cast<int>(j);
            } else if (d < second) {
                second = d;
            }
        }
        // With a single candidate in b there is no second neighbour to compare against.
        const bool passes = b.size() == 1 ? true : best < ratio * second;
        if (best_j != kNone && passes) candidate[i] = Match{static_cast<int>(i), best_j, best};
    }

    // One-to-one: the closest a wins each b, ties to the lower a index.
    std::vector<int> owner(b.size(), kNone);
    for (const Match& m : candidate) {
        if (m.index_a == kNone) continue;
        int& o = owner[m.index_b];
        if (o == kNone || m.distance < candidate[o].distance) o = m.index_a;
    }
    MatchSet out;
    for (const Match& m : candidate)
        if (m.index_a != kNone && owner[m.index_b] == m.index_a) out.pairs.push_back(m);
    if (out.empty()) throw NoMatches("no descriptor survived the ratio test");
    return out;
}

}  // namespace dielink::registration
