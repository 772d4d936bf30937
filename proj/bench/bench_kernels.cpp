// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include <map>

#include "dielink/imaging/normalize.hpp"
#include "dielink/scoring/score_dataset.hpp"
#include "dielink/scoring/ssim.hpp"
#include "synthetic.hpp"

using namespace dielink;

namespace {

struct SsimInputs {
    imaging::GrayImage a, b;
    imaging::Mask mask;
};

const SsimInputs& ssim_inputs(int size) {
    static std::map<int, SsimInputs> cache;
    auto it = cache.find(size);
    if (it == cache.end()) {
        const auto a = testing::make_die(3, size, size * 3 / 4);
        SsimInputs in{a, testing::add_noise(a, 0.05, 4), imaging::Mask(size, size, 1)};
        it = cache.emplace(size, std::move(in)).first;
    }
    return it->second;
}

void BM_Ssim(benchmark::State& state) {
    const auto& in = ssim_inputs(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(scoring::ssim(in.a, in.b, in.mask));
}

void BM_SsimReference(benchmark::State& state) {
    const auto& in = ssim_inputs(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(scoring::ssim_reference(in.a, in.b, in.mask));
}

const std::vector<imaging::NormalizedImage>& dataset() {
    static const auto images = [] {
        const auto f = testing::die_link_fixture(2, 4, 7);
        std::vector<imaging::NormalizedImage> out;
        for (std::size_t i = 0; i < f.images.size(); ++i) out.push_back(imaging::normalize_image(f.images[i], f.names[i]));
        return out;
    }();
    return images;
}

void BM_ScoreDataset(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(scoring::score_dataset(dataset()).scores.size());
    state.counters["pairs"] = 28;
}

void BM_ScoreDatasetSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(scoring::score_dataset_serial(dataset()).scores.size());
    state.counters["pairs"] = 28;
}

}  // namespace

BENCHMARK(BM_Ssim)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SsimReference)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreDataset)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK(BM_ScoreDatasetSerial)->Unit(benchmark::kMillisecond)->Iterations(2);

BENCHMARK_MAIN();
