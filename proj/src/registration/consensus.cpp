#include "dielink/registration/consensus.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "dielink/errors.hpp"

namespace dielink::registration {

namespace {

double residual2(const SimilarityTransform& t, const Correspondence& c) noexcept {
    const Point2 p = t.apply(c.source);
    const double dx = p.x - c.target.x;
    const double dy = p.y - c.target.y;
    return dx * dx + dy * dy;
}

struct Score {
    std::size_t count = 0;
    double cost = 0.0;  // truncated squared residuals, MSAC-style tie-break
};

Score score(const SimilarityTransform& t, std::span<const Correspondence> cs, double thr2) {
    Score s;
    for (const auto& c : cs) {
        const double r2 = residual2(t, c);
        if (r2 < thr2) {
            ++s.count;
            s.cost += r2;
        } else {
            s.cost += thr2;
        }
    }
    return s;
}

bool better(const Score& a, const Score& b) {
    return a.count > b.count || (a.count == b.count && a.cost < b.cost);
}

std::vector<int> inliers_of(const SimilarityTransform& t, std::span<const Correspondence> cs, double thr2) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (residual2(t, cs[i]) < thr2) idx.push_back(static_cast<int>(i));
    return idx;
}

SimilarityTransform refit(std::span<const Correspondence> cs, const std::vector<int>& idx) {
    std::vector<Point2> src;
    std::vector<Point2> dst;
    src.reserve(idx.size());
    dst.reserve(idx.size());
    for (int i : idx) {
        src.push_back(cs[i].source);
        dst.push_back(cs[i].target);
    }
    return fit_similarity(src, dst);
}

bool all_coincident(std::span<const Correspondence> cs, bool source) {
    const Point2 first = source ? cs[0].source : cs[0].target;
    for (const auto& c : cs) {
        const Point2 p = source ? c.source : c.target;
        if (std::hypot(p.x - first.x, p.y - first.y) > 1e-9) return false;
    }
    return true;
}

}  // namespace

TransformEstimate estimate_transform(std::span<const Correspondence> cs, const ConsensusParams& params) {
    if (cs.size() < 3)
        throw DegenerateGeometry("need at least 3 correspondences, got " + std::to_string(cs.size()));
    if (all_coincident(cs, true) || all_coincident(cs, false))
        throw DegenerateGeometry("correspondences are coincident");

    const double thr2 = params.inlier_threshold * params.inlier_threshold;
    std::mt19937_64 rng(params.seed);
    const std::uint64_t n = cs.size();

    SimilarityTransform best;
    Score best_score{0, std::numeric_limits<double>::infinity()};
    for (int it = 0; it < params.iterations; ++it) {
        const auto i = static_cast<std::size_t>(rng() % n);
        auto j = static_cast<std::size_t>(rng() % (n - 1));
        if (j >= i) ++j;
        const Point2 s[2] = {cs[i].source, cs[j].source};
        const Point2 d[2] = {cs[i].target, cs[j].target};
        if (std::hypot(s[0].x - s[1].x, s[0].y - s[1].y) < 1e-6) continue;
        if (std::hypot(d[0].x - d[1].x, d[0].y - d[1].y) < 1e-6) continue;
        const SimilarityTransform hyp = fit_similarity(s, d);
        const Score sc = score(hyp, cs, thr2);
        if (better(sc, best_score)) {
            best_score = sc;
            best = hyp;
        }
    }
    if (best_score.count < 2) throw ConsensusFailure("no consistent hypothesis");

    std::vector<int> inliers = inliers_of(best, cs, thr2);
    for (int round = 0; round < 10 && inliers.size() >= 2; ++round) {
        SimilarityTransform fitted;
        try {
            fitted = refit(cs, inliers);
        } catch (const DegenerateGeometry&) {
            break;
        }
        std::vector<int> next = inliers_of(fitted, cs, thr2);
        if (next.size() < inliers.size()) break;
        best = fitted;
        if (next == inliers) break;
        inliers = std::move(next);
    }

    TransformEstimate est;
    est.transform = best;
    est.inliers = inliers;
    est.inlier_ratio = static_cast<double>(inliers.size()) / static_cast<double>(cs.size());
    double sum = 0.0;
    for (int i : inliers) sum += residual2(best, cs[i]);
    est.rms_residual = inliers.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(inliers.size()));

    if (static_cast<int>(inliers.size()) < params.min_inliers || est.inlier_ratio < params.min_inlier_ratio)
        throw ConsensusFailure("inliers " + std::to_string(inliers.size()) + "/" + std::to_string(cs.size()) +
                               " below consensus threshold");
    return est;
}

TransformEstimate estimate_transform(const MatchSet& matches, std::span<const Keypoint> a,
                                     std::span<const Keypoint> b, const ConsensusParams& params) {
    std::vector<Correspondence> cs;
    cs.reserve(matches.size());
    for (const Match& m : matches.pairs) {
        if (m.index_a < 0 || m.index_b < 0 || static_cast<std::size_t>(m.index_a) >= a.size() ||
            static_cast<std::size_t>(m.index_b) >= b.size())
            throw std::out_of_range("estimate_transform: match index out of range");
        cs.push_back({{b[m.index_b].x, b[m.index_b].y}, {a[m.index_a].x, a[m.index_a].y}});
    }
    return estimate_transform(cs, params);
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t hash) noexcept {
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::uint64_t pair_seed(std::string_view name1, std::string_view name2, std::uint64_t run_seed) noexcept {
    std::uint64_t h = fnv1a(name1);
    h = fnv1a(std::string_view("\0", 1), h);
    h = fnv1a(name2, h);
    // splitmix64 finalizer over the mixed value
    std::uint64_t z = h ^ (run_seed + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace dielink::registration
