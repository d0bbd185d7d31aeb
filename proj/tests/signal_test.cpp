#include "p2s/signal.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using p2s::SimilaritySequence;

namespace {

SimilaritySequence seq(std::vector<double> v, double fps = 5.0)
{
    return SimilaritySequence(std::move(v), fps);
}

std::vector<double> values(const SimilaritySequence& s)
{
    return {s.values().begin(), s.values().end()};
}

} // namespace

TEST(SimilaritySequence, RejectsInvalidConstruction)
{
    EXPECT_THROW(seq({}), std::invalid_argument);
    EXPECT_THROW(seq({0.1}, 0.0), std::invalid_argument);
    EXPECT_THROW(seq({0.1, NAN}), std::invalid_argument);
    EXPECT_THROW(seq({0.1, INFINITY}), std::invalid_argument);
}

TEST(CosineSimilarity, IdentityAndOrthogonality)
{
    const std::vector<float> q = {0.3f, -1.2f, 2.0f};
    auto s = p2s::cosine_similarity_sequence({q, 1, 3}, q, 5.0);
    EXPECT_NEAR(s[0], 1.0, 1e-12);

    const std::vector<float> v = {1.0f, 0.0f};
    const std::vector<float> w = {0.0f, 3.0f};
    EXPECT_EQ(p2s::cosine_similarity_sequence({v, 1, 2}, w, 5.0)[0], 0.0);
}

TEST(CosineSimilarity, MatchesBruteForceOnRandomMatrix)
{
    std::mt19937_64 rng(7);
    std::normal_distribution<float> g(0.0f, 1.0f);
    std::vector<float> frames(8 * 4), query(4);
    for (auto& f : frames) f = g(rng);
    for (auto& f : query) f = g(rng);

    auto s = p2s::cosine_similarity_sequence({frames, 8, 4}, query, 5.0);
    ASSERT_EQ(s.size(), 8u);
    for (std::size_t t = 0; t < 8; ++t) {
        double dot = 0, nf = 0, nq = 0;
        for (std::size_t d = 0; d < 4; ++d) {
            dot += double(frames[t * 4 + d]) * double(query[d]);
            nf += double(frames[t * 4 + d]) * double(frames[t * 4 + d]);
            nq += double(query[d]) * double(query[d]);
        }
        EXPECT_NEAR(s[t], dot / std::sqrt(nf * nq), 1e-9);
        EXPECT_LE(std::abs(s[t]), 1.0);
    }
}

TEST(CosineSimilarity, RejectsZeroNormsAndMismatch)
{
    const std::vector<float> frames = {1, 0, 0, 0};
    const std::vector<float> q = {1, 0};
    try {
        p2s::cosine_similarity_sequence({frames, 2, 2}, q, 5.0);
        FAIL() << "expected rejection";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    }
    const std::vector<float> zero = {0, 0};
    EXPECT_THROW(p2s::cosine_similarity_sequence({frames, 2, 2}, zero, 5.0), std::invalid_argument);
    const std::vector<float> q3 = {1, 0, 0};
    EXPECT_THROW(p2s::cosine_similarity_sequence({frames, 2, 2}, q3, 5.0), std::invalid_argument);
}

TEST(PopulationStd, KnownValues)
{
    EXPECT_EQ(p2s::population_std(seq({0.3, 0.3, 0.3})), 0.0);
    EXPECT_DOUBLE_EQ(p2s::population_std(seq({0, 1, 0, 1})), 0.5);
}

TEST(PopulationStd, MatchesTwoPassOracle)
{
    std::mt19937_64 rng(11);
    const auto x = oracle::random_signal(rng, 64);
    EXPECT_NEAR(p2s::population_std(seq(x)), oracle::two_pass_std(x), 1e-12);
}

TEST(AdaptiveRatio, KnownValuesAndLimits)
{
    EXPECT_EQ(p2s::adaptive_ratio(0.0), 0.75);
    // 0.5 + 0.5 / (1 + e^-1), evaluated offline
    EXPECT_NEAR(p2s::adaptive_ratio(1.0), 0.8655292893150024, 1e-15);
    EXPECT_LT(p2s::adaptive_ratio(30.0), 1.0 + 1e-15);
    EXPECT_GT(p2s::adaptive_ratio(30.0), 0.999999);
    EXPECT_THROW(p2s::adaptive_ratio(-0.1), std::invalid_argument);
    EXPECT_THROW(p2s::adaptive_ratio(NAN), std::invalid_argument);
}

TEST(AdaptiveRatio, StrictlyIncreasingAndBounded)
{
    double prev = p2s::adaptive_ratio(0.0);
    for (int i = 1; i <= 2000; ++i) {
        const double r = p2s::adaptive_ratio(i * 0.005);
        EXPECT_GT(r, prev);
        EXPECT_GE(r, 0.75);
        EXPECT_LT(r, 1.0);
        prev = r;
    }
}

TEST(SmoothingWindow, RoundsToNearestOdd)
{
    EXPECT_EQ(p2s::smoothing_window(5.0, 0.75), 3u);
    EXPECT_EQ(p2s::smoothing_window(1.0, 0.75), 1u);
    EXPECT_EQ(p2s::smoothing_window(5.0, 0.9999), 5u);
    EXPECT_EQ(p2s::smoothing_window(30.0, 0.8), 25u);
    EXPECT_EQ(p2s::smoothing_window(0.5, 0.9), 1u);
    for (double fps : {1.0, 2.5, 5.0, 10.0, 24.0, 29.97}) {
        for (double tau : {0.76, 0.8, 0.85, 0.9, 0.99}) EXPECT_EQ(p2s::smoothing_window(fps, tau) % 2, 1u);
    }
}

TEST(MovingAverage, IdentityCases)
{
    const auto s = seq({0.1, 0.7, 0.3, 0.2});
    EXPECT_EQ(values(p2s::moving_average(s, 1)), values(s));
    const auto c = seq(std::vector<double>(50, 0.3));
    for (std::size_t w : {3u, 5u, 9u, 21u}) EXPECT_EQ(values(p2s::moving_average(c, w)), values(c));
    EXPECT_THROW(p2s::moving_average(s, 2), std::invalid_argument);
    EXPECT_THROW(p2s::moving_average(s, 0), std::invalid_argument);
}

TEST(MovingAverage, ShrinkingEdgeWindow)
{
    EXPECT_EQ(values(p2s::moving_average(seq({0, 3, 0}), 3)), (std::vector<double>{1.5, 1.0, 1.5}));
}

TEST(MovingAverage, MatchesOracleAndStaysInRange)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 100;
        const std::size_t w = 1 + 2 * (rng() % 6);
        const auto x = oracle::random_signal(rng, n);
        const auto out = values(p2s::moving_average(seq(x), w));
        const auto ref = oracle::window_means(x, w);
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(out[i], ref[i], 1e-12);
            EXPECT_GE(out[i], *lo);
            EXPECT_LE(out[i], *hi);
        }
    }
}

TEST(MovingAverage, WiderWindowLowersPulse)
{
    std::vector<double> x(60, 0.0);
    for (std::size_t i = 28; i < 32; ++i) x[i] = 1.0;
    double prev = 2.0;
    for (std::size_t w = 1; w <= 15; w += 2) {
        const auto out = values(p2s::moving_average(seq(x), w));
        const double peak = *std::max_element(out.begin(), out.end());
        EXPECT_LE(peak, prev);
        prev = peak;
    }
}

TEST(MovingAverage, PreservesMetadata)
{
    SimilaritySequence s({0.1, 0.2, 0.3}, 2.5, "vid", p2s::Channel::sub_b);
    auto out = p2s::moving_average(s, 3);
    EXPECT_EQ(out.fps(), 2.5);
    EXPECT_EQ(out.video_id(), "vid");
    EXPECT_EQ(out.channel(), p2s::Channel::sub_b);
}

TEST(FindPeaks, Examples)
{
    EXPECT_TRUE(p2s::find_peaks(seq({0, 1, 2, 3, 4, 5}), 1, 0.05).empty());
    EXPECT_TRUE(p2s::find_peaks(seq({0.2, 0.2, 0.2, 0.2}), 1, 0.0).empty());

    auto two = p2s::find_peaks(seq({0, 1, 0, 1, 0}), 1, 0.05);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].index, 1u);
    EXPECT_EQ(two[1].index, 3u);

    auto plateau = p2s::find_peaks(seq({0, 2, 2, 2, 0}), 1, 0.05);
    ASSERT_EQ(plateau.size(), 1u);
    EXPECT_EQ(plateau[0].index, 2u);
    EXPECT_EQ(plateau[0].height, 2.0);
    EXPECT_EQ(plateau[0].prominence, 2.0);

    // even plateau resolves to the floor midpoint
    auto even = p2s::find_peaks(seq({0, 2, 2, 2, 2, 0}), 1, 0.05);
    ASSERT_EQ(even.size(), 1u);
    EXPECT_EQ(even[0].index, 2u);

    // plateaus touching an edge are not peaks
    EXPECT_TRUE(p2s::find_peaks(seq({0, 1, 2, 2}), 1, 0.0).empty());
}

TEST(FindPeaks, DistanceFilterPrefersHigherThenLowerIndex)
{
    // equal heights two apart: the lower index wins at distance 2
    auto p = p2s::find_peaks(seq({0, 1, 0, 1, 0}), 2, 0.0);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].index, 1u);

    auto q = p2s::find_peaks(seq({0, 0.5, 0, 0.9, 0}), 2, 0.0);
    ASSERT_EQ(q.size(), 1u);
    EXPECT_EQ(q[0].index, 3u);
}

TEST(FindPeaks, MatchesLiteralOracle)
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 256;
        const auto x = oracle::random_signal(rng, n, trial % 3 == 0 ? 8 : 0);
        const std::size_t d = 1 + rng() % 8;
        const double pm = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
        const auto got = p2s::find_peaks(seq(x), d, pm);
        const auto want = oracle::find_peaks(x, d, pm);
        ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].index, want[i].index);
            EXPECT_NEAR(got[i].prominence, want[i].prominence, 1e-9);
            EXPECT_LE(got[i].prominence, got[i].height - *std::min_element(x.begin(), x.end()) + 1e-15);
        }
        for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GT(got[i].index - got[i - 1].index, d);
    }
}

TEST(FindPeaks, Deterministic)
{
    std::mt19937_64 rng(3);
    const auto x = oracle::random_signal(rng, 500);
    const auto a = p2s::find_peaks(seq(x), 3, 0.05);
    const auto b = p2s::find_peaks(seq(x), 3, 0.05);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].index, b[i].index);
        EXPECT_EQ(a[i].prominence, b[i].prominence);
    }
}

TEST(Prominence, Examples)
{
    EXPECT_EQ(p2s::prominence(seq({0, 1, 0}), 1), 1.0);
    EXPECT_NEAR(p2s::prominence(seq({0.2, 0.9, 0.1}), 1), 0.7, 1e-15);
    EXPECT_NEAR(p2s::prominence(seq({0, 0.5, 0.2, 0.8, 0}), 1), 0.3, 1e-15);
    EXPECT_THROW(p2s::prominence(seq({0, 0.5, 0.2, 0.8, 0}), 2), std::invalid_argument);
    EXPECT_THROW(p2s::prominence(seq({0, 0.5, 0.2, 0.8, 0}), 0), std::invalid_argument);
}

TEST(Prominence, GlobalMaximumIsLargest)
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        auto x = oracle::random_signal(rng, 64);
        // pin the endpoints below every interior sample so the signal maximum is a peak
        x.front() = -1.0;
        x.back() = -1.0;
        const auto maxima = oracle::local_maxima(x);
        if (maxima.empty()) continue;
        std::size_t gmax = maxima[0];
        for (std::size_t m : maxima) {
            if (x[m] > x[gmax]) gmax = m;
        }
        const double top = p2s::prominence(seq(x), gmax);
        for (std::size_t m : maxima) {
            const double pr = p2s::prominence(seq(x), m);
            EXPECT_NEAR(pr, oracle::prominence(x, m), 1e-9);
            EXPECT_LE(pr, top);
        }
    }
}

TEST(MinDistance, SecondsToSamples)
{
    EXPECT_EQ(p2s::min_distance_samples(1.0, 5.0), 5u);
    EXPECT_EQ(p2s::min_distance_samples(0.05, 5.0), 1u);
    EXPECT_EQ(p2s::min_distance_samples(2.5, 5.0), 13u);
    EXPECT_THROW(p2s::min_distance_samples(0.0, 5.0), std::invalid_argument);
}
