#include "doctest.h"

#include <cmath>

#include "dielink/errors.hpp"
#include "dielink/imaging/normalize.hpp"
#include "dielink/scoring/pair_distance.hpp"
#include "dielink/scoring/score_dataset.hpp"
#include "dielink/scoring/ssim.hpp"
#include "synthetic.hpp"

using namespace dielink;
using namespace dielink::scoring;
using imaging::GrayImage;
using imaging::Mask;

namespace {

/// Textbook SSIM of one block with equal weights: population moments.
double block_ssim_oracle(const GrayImage& a, const GrayImage& b, int x0, int y0, int w, int h) {
    const long double n = static_cast<long double>(w) * h;
    long double ma = 0, mb = 0;
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) {
            ma += a.at(x, y);
            mb += b.at(x, y);
        }
    ma /= n;
    mb /= n;
    long double va = 0, vb = 0, cov = 0;
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) {
            const long double da = a.at(x, y) - ma;
            const long double db = b.at(x, y) - mb;
            va += da * da;
            vb += db * db;
            cov += da * db;
        }
    va /= n;
    vb /= n;
    cov /= n;
    const long double c1 = 0.01L * 0.01L;
    const long double c2 = 0.03L * 0.03L;
    return static_cast<double>(((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
}

imaging::NormalizedImage named(const GrayImage& img, const std::string& name) {
    return imaging::normalize_image(img, name);
}

GrayImage invert(const GrayImage& img) {
    GrayImage out = img;
    for (float& v : out.pixels()) v = 1.0f - v;
    return out;
}

}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto x = testing::uniform_noise(40 + int(seed) * 7, seed);
        CHECK(ssim(x, x) == 1.0);
        CHECK(ssim_reference(x, x, Mask(x.width(), x.height(), 1)) == 1.0);
    }
    const auto die = testing::make_die(4, 120, 100);
    CHECK(ssim(die, die) == 1.0);
}

TEST_CASE("ssim equals the textbook formula on an 8x8 block") {
    SsimParams p;
    p.window = SsimWindow::uniform(8, 8);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = testing::uniform_noise(8, seed);
        const auto b = testing::uniform_noise(8, seed + 100);
        const double oracle = block_ssim_oracle(a, b, 0, 0, 8, 8);
        CHECK(std::abs(ssim(a, b, p) - oracle) < 1e-9);
        CHECK(std::abs(ssim_reference(a, b, Mask(8, 8, 1), p) - oracle) < 1e-9);
    }
}

TEST_CASE("ssim against an inverted symmetric pattern is negative") {
    const auto x = testing::checkerboard(8, 2);
    const auto y = invert(x);
    SsimParams p;
    p.window = SsimWindow::uniform(8, 8);
    const double s = ssim(x, y, p);
    CHECK(s < 0.0);
    CHECK(std::abs(s - block_ssim_oracle(x, y, 0, 0, 8, 8)) < 1e-9);
    CHECK(ssim(testing::checkerboard(64, 4), invert(testing::checkerboard(64, 4))) < 0.0);
}

TEST_CASE("ssim of independent noise images is near zero") {
    const auto a = testing::uniform_noise(400, 1);
    const auto b = testing::uniform_noise(400, 2);
    CHECK(std::abs(ssim(a, b)) < 0.1);
}

TEST_CASE("ssim: mean of brute-force 8x8 windows over a larger image") {
    SsimParams p;
    p.window = SsimWindow::uniform(8, 8);
    const auto a = testing::uniform_noise(20, 5);
    const auto b = testing::add_noise(a, 0.1, 6);
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y + 8 <= 20; ++y)
        for (int x = 0; x + 8 <= 20; ++x) {
            sum += block_ssim_oracle(a, b, x, y, 8, 8);
            ++n;
        }
    CHECK(std::abs(ssim(a, b, p) - sum / n) < 1e-9);
}

TEST_CASE("ssim: separable path agrees with the reference under masks") {
    const auto a = testing::make_die(7, 96, 80);
    const auto b = testing::add_noise(a, 0.05, 3);
    Mask mask(96, 96, 1);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x)
            if (x + y < 40 || (x > 60 && y > 60 && (x * 7 + y * 3) % 5 == 0)) mask.at(x, y) = 0;
    const double fast = ssim(a, b, mask);
    const double ref = ssim_reference(a, b, mask);
    CHECK(std::abs(fast - ref) < 1e-9);
    CHECK(fast < 1.0);
    CHECK(fast > 0.0);
}

TEST_CASE("ssim: windows below the valid fraction are skipped") {
    const auto a = testing::uniform_noise(30, 1);
    auto b = testing::uniform_noise(30, 2);
    // Left half identical, right half masked out: only fully-left windows count.
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 15; ++x) b.at(x, y) = a.at(x, y);
    Mask mask(30, 30, 1);
    for (int y = 0; y < 30; ++y)
        for (int x = 15; x < 30; ++x) mask.at(x, y) = 0;
    SsimParams p;
    p.window = SsimWindow::uniform(8, 8);
    p.min_valid_fraction = 1.0;
    CHECK(ssim(a, b, mask, p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim errors") {
    const auto a = testing::uniform_noise(30, 1);
    CHECK_THROWS_AS(ssim(a, a, Mask(30, 30, 0)), EmptyOverlap);
    CHECK_THROWS_AS(ssim(a, testing::uniform_noise(31, 1)), std::invalid_argument);
    CHECK_THROWS_AS(ssim(GrayImage(5, 5), GrayImage(5, 5)), EmptyOverlap);
}

TEST_CASE("distance mapping") {
    CHECK(ssim_to_distance(1.0) == 0.0);
    CHECK(ssim_to_distance(-1.0) == 1.0);
    CHECK(ssim_to_distance(0.0) == 0.5);
    CHECK(ssim_to_distance(2.0) == 0.0);
    CHECK(ssim_to_distance(-3.0) == 1.0);
}

TEST_CASE("pair distance: self pair is near zero") {
    const auto x = named(testing::make_die(8), "x.png");
    const auto y = named(testing::make_die(8), "y.png");
    const auto s = pair_distance(x, y);
    CHECK(s.alignable);
    CHECK(s.distance <= 0.01);
    CHECK(s.name1 == "x.png");
    CHECK(s.name2 == "y.png");
}

TEST_CASE("pair distance: uniform image is unalignable") {
    const auto flat = named(GrayImage(300, 300, 0.5f), "flat.png");
    const auto die = named(testing::make_die(1), "die.png");
    const auto s = pair_distance(flat, die);
    CHECK_FALSE(s.alignable);
    CHECK(s.distance == 1.0);
    CHECK_FALSE(s.transform.has_value());
}

TEST_CASE("pair distance: symmetric and canonically named") {
    testing::Rng rng(40);
    const auto die = testing::make_die(40);
    const auto a = named(testing::make_coin(die, rng), "b_coin.png");
    const auto b = named(testing::make_coin(die, rng), "a_coin.png");
    const auto ab = pair_distance(a, b);
    const auto ba = pair_distance(b, a);
    CHECK(ab.name1 == "a_coin.png");
    CHECK(ab.name2 == "b_coin.png");
    CHECK(ab.distance == ba.distance);
    CHECK(ab.alignable);
    CHECK(ab.distance >= 0.0);
    CHECK(ab.distance <= 1.0);
}

TEST_CASE("pair distance: registration direction changes the value only slightly") {
    testing::Rng rng(41);
    ScoringParams params;
    for (int k = 0; k < 3; ++k) {
        const auto die = testing::make_die(rng.next());
        const auto a = prepare(named(testing::make_coin(die, rng), "a.png"), params);
        const auto b = prepare(named(testing::make_coin(die, rng), "b.png"), params);
        const auto seed = registration::pair_seed("a.png", "b.png", 0);
        const auto onto_a = register_and_score(a, b, seed, params);
        const auto onto_b = register_and_score(b, a, seed, params);
        REQUIRE(onto_a.alignable);
        REQUIRE(onto_b.alignable);
        CHECK(std::abs(onto_a.distance - onto_b.distance) < 0.02);
    }
}

TEST_CASE("pair distance: struck copy beats an unrelated coin in 95 of 100 trials") {
    testing::Rng rng(77);
    int wins = 0;
    for (int t = 0; t < 100; ++t) {
        const auto die = testing::make_die(rng.next(), 220, 170);
        const auto other = testing::make_die(rng.next(), 220, 170);
        const auto x = named(die, "x.png");
        const auto same = named(testing::make_coin(die, rng), "same.png");
        const auto diff = named(testing::make_coin(other, rng), "diff.png");
        if (pair_distance(x, same).distance < pair_distance(x, diff).distance) ++wins;
    }
    CHECK(wins >= 95);
}

TEST_CASE("pair distance grows with noise") {
    const auto die = testing::make_die(50);
    const auto base = named(die, "base.png");
    double last = -1.0;
    for (double sigma : {0.01, 0.05, 0.1}) {
        const auto noisy = named(testing::add_noise(die, sigma, 9), "noisy.png");
        const double d = pair_distance(base, noisy).distance;
        CAPTURE(sigma);
        CHECK(d >= last);
        last = d;
    }
}

TEST_CASE("score_dataset cardinality and errors") {
    std::vector<imaging::NormalizedImage> imgs;
    CHECK_THROWS_AS(score_dataset(imgs), DatasetTooSmall);
    imgs.push_back(named(testing::make_die(1, 160, 120), "a.png"));
    CHECK_THROWS_AS(score_dataset(imgs), DatasetTooSmall);
    imgs.push_back(named(testing::make_die(2, 160, 120), "b.png"));
    CHECK(score_dataset(imgs).scores.size() == 1);
    imgs.push_back(named(testing::make_die(3, 160, 120), "a.png"));
    CHECK_THROWS_AS(score_dataset(imgs), std::invalid_argument);
    for (std::size_t n = 0; n <= 100; ++n) CHECK(DistanceMatrix::pair_count(n) == (n < 2 ? 0 : n * (n - 1) / 2));
}

TEST_CASE("score_dataset: parallel equals serial, progress counts pairs") {
    const auto f = testing::die_link_fixture(2, 3, 5);
    std::vector<imaging::NormalizedImage> imgs;
    for (std::size_t i = 0; i < f.images.size(); ++i) imgs.push_back(named(f.images[i], f.names[i]));
    std::atomic<std::size_t> progress{0};
    ScoreOptions opt;
    opt.threads = 3;
    opt.progress = &progress;
    const auto par = score_dataset(imgs, {}, opt);
    const auto ser = score_dataset_serial(imgs);
    CHECK(progress.load() == 15);
    REQUIRE(par.scores.size() == 15);
    REQUIRE(ser.scores.size() == 15);
    CHECK_NOTHROW(validate_matrix(par));
    for (std::size_t k = 0; k < par.scores.size(); ++k) {
        CHECK(par.scores[k].name1 == ser.scores[k].name1);
        CHECK(par.scores[k].name2 == ser.scores[k].name2);
        CHECK(par.scores[k].distance == ser.scores[k].distance);
        CHECK(par.scores[k].distance >= 0.0);
        CHECK(par.scores[k].distance <= 1.0);
    }
    CHECK(par.distance("die0_coin1.png", "die0_coin0.png") == par.distance("die0_coin0.png", "die0_coin1.png"));
    CHECK_FALSE(par.distance("die0_coin0.png", "nope.png").has_value());
}

TEST_CASE("validate_matrix catches broken matrices") {
    DistanceMatrix m;
    m.coin_names = {"a", "b", "c"};
    m.scores = {{"a", "b", 0.1}, {"a", "c", 0.2}};
    CHECK_THROWS_AS(validate_matrix(m), std::invalid_argument);
    m.scores.push_back({"b", "a", 0.3});
    CHECK_THROWS_AS(validate_matrix(m), std::invalid_argument);
    m.scores.back() = {"a", "b", 0.3};
    CHECK_THROWS_AS(validate_matrix(m), std::invalid_argument);
    m.scores.back() = {"b", "c", 0.3};
    CHECK_NOTHROW(validate_matrix(m));
}
