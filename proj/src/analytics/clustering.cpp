#include <map>
#include <numeric>
#include <stdexcept>

#include "dielink/analytics/analytics.hpp"

namespace dielink::analytics {

namespace {

class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<int> rank_;
};

}  // namespace

std::vector<ClusterLabel> cluster(const DistanceMatrix& m, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw std::invalid_argument("cluster: threshold must lie in [0, 1]");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m.coin_names.size(); ++i) index[m.coin_names[i]] = i;

    DisjointSet sets(m.coin_names.size());
    for (const auto& s : m.scores) {
        if (s.distance > threshold) continue;
        const auto a = index.find(s.name1);
        const auto b = index.find(s.name2);
        if (a == index.end() || b == index.end())
            throw std::invalid_argument("distance matrix names an unknown coin");
        sets.unite(a->second, b->second);
    }

    std::map<std::size_t, int> ids;
    std::vector<ClusterLabel> labels;
    labels.reserve(m.coin_names.size());
    for (std::size_t i = 0; i < m.coin_names.size(); ++i) {
        const auto [it, inserted] = ids.emplace(sets.find(i), static_cast<int>(ids.size()));
        labels.push_back({m.coin_names[i], it->second, true});
    }
    return labels;
}

}  // namespace dielink::analytics
