#include "dielink/scoring/score_dataset.hpp"

#include <map>
#include <set>
#include <stdexcept>
#include <utility>

#include <omp.h>

#include "dielink/errors.hpp"

namespace dielink::scoring {

std::optional<double> DistanceMatrix::distance(const std::string& a, const std::string& b) const {
    const auto& [lo, hi] = a < b ? std::pair{a, b} : std::pair{b, a};
    for (const auto& s : scores)
        if (s.name1 == lo && s.name2 == hi) return s.distance;
    return std::nullopt;
}

void validate_matrix(const DistanceMatrix& m) {
    const std::set<std::string> names(m.coin_names.begin(), m.coin_names.end());
    if (names.size() != m.coin_names.size()) throw std::invalid_argument("distance matrix: duplicate coin name");
    if (m.scores.size() != DistanceMatrix::pair_count(names.size()))
        throw std::invalid_argument("distance matrix: expected " +
                                    std::to_string(DistanceMatrix::pair_count(names.size())) + " pairs, got " +
                                    std::to_string(m.scores.size()));
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& s : m.scores) {
        if (!(s.name1 < s.name2)) throw std::invalid_argument("distance matrix: pair not canonical");
        if (!names.count(s.name1) || !names.count(s.name2))
            throw std::invalid_argument("distance matrix: pair names an unknown coin");
        if (!seen.emplace(s.name1, s.name2).second)
            throw std::invalid_argument("distance matrix: duplicate pair " + s.name1 + "," + s.name2);
    }
}

namespace {

void check_names(const std::vector<imaging::NormalizedImage>& images) {
    if (images.size() < 2)
        throw DatasetTooSmall("need at least 2 images, got " + std::to_string(images.size()));
    std::set<std::string> names;
    for (const auto& img : images)
        if (!names.insert(img.source_name).second)
            throw std::invalid_argument("duplicate image name: " + img.source_name);
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(DistanceMatrix::pair_count(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    return pairs;
}

DistanceMatrix assemble(const std::vector<imaging::NormalizedImage>& images, std::vector<PairScore> scores) {
    DistanceMatrix m;
    m.coin_names.reserve(images.size());
    for (const auto& img : images) m.coin_names.push_back(img.source_name);
    m.scores = std::move(scores);
    return m;
}

}  // namespace

DistanceMatrix score_dataset(const std::vector<imaging::NormalizedImage>& images, const ScoringParams& params,
                             const ScoreOptions& options) {
    check_names(images);
    const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
    const auto n = static_cast<long long>(images.size());

    std::vector<std::optional<PreparedImage>> prepared(images.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long i = 0; i < n; ++i) prepared[i] = prepare(images[i], params);

    const auto pairs = all_pairs(images.size());
    std::vector<PairScore> scores(pairs.size());
    const auto count = static_cast<long long>(pairs.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (long long k = 0; k < count; ++k) {
        scores[k] = score_pair(*prepared[pairs[k].first], *prepared[pairs[k].second], params);
        if (options.progress) options.progress->fetch_add(1, std::memory_order_relaxed);
    }
    return assemble(images, std::move(scores));
}

DistanceMatrix score_dataset_serial(const std::vector<imaging::NormalizedImage>& images,
                                    const ScoringParams& params) {
    check_names(images);
    std::vector<PreparedImage> prepared;
    prepared.reserve(images.size());
    for (const auto& img : images) prepared.push_back(prepare(img, params));
    std::vector<PairScore> scores;
    for (const auto& [i, j] : all_pairs(images.size())) scores.push_back(score_pair(prepared[i], prepared[j], params));
    return assemble(images, std::move(scores));
}

}  // namespace dielink::scoring
