#include "p2s/synthbench.hpp"

#include "p2s/asg.hpp"
#include "p2s/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <unistd.h>

using p2s::SynthSpec;

namespace {

// Piecewise-linear trapezoid written out from its corner points.
double corner_trapezoid(double t, double s, double e, double amp)
{
    const double r = (e - s) / 10.0;
    const double xs[4] = {s - r / 2, s + r / 2, e - r / 2, e + r / 2};
    const double ys[4] = {0.0, amp, amp, 0.0};
    if (t <= xs[0] || t >= xs[3]) return 0.0;
    for (int k = 0; k < 3; ++k) {
        if (t <= xs[k + 1]) return ys[k] + (ys[k + 1] - ys[k]) * (t - xs[k]) / (xs[k + 1] - xs[k]);
    }
    return 0.0;
}

SynthSpec base_spec()
{
    SynthSpec s;
    s.duration_s = 300.0;
    s.event = {150.0, 12.0, 0.6};
    return s;
}

} // namespace

TEST(Trapezoid, Shape)
{
    EXPECT_EQ(p2s::trapezoid(-0.5, 0, 10, 0.5), 0.0);
    EXPECT_EQ(p2s::trapezoid(10.5, 0, 10, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(p2s::trapezoid(0.0, 0, 10, 0.5), 0.25);
    EXPECT_DOUBLE_EQ(p2s::trapezoid(-0.25, 0, 10, 0.5), 0.125);
    EXPECT_DOUBLE_EQ(p2s::trapezoid(0.5, 0, 10, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(p2s::trapezoid(5, 0, 10, 0.5), 0.5);
    EXPECT_DOUBLE_EQ(p2s::trapezoid(10.0, 0, 10, 0.5), 0.25);
}

TEST(GenerateCase, NoiselessIsBaselinePlusTrapezoid)
{
    const auto spec = base_spec();
    const auto c = p2s::generate_case(spec, "x");
    ASSERT_EQ(c.raw_o.size(), 1500u);
    const double s = 144.0, e = 156.0;
    for (std::size_t i = 0; i < c.raw_o.size(); ++i) {
        const double t = (static_cast<double>(i) + 0.5) / 5.0;
        EXPECT_NEAR(c.raw_o[i], 0.05 + corner_trapezoid(t, s, e, 0.6), 1e-12) << i;
        // sub bumps: 8 s wide centred at 148 s and 152 s
        EXPECT_NEAR(c.raw_a[i], 0.05 + corner_trapezoid(t, 144.0, 152.0, 0.6), 1e-12) << i;
        EXPECT_NEAR(c.raw_b[i], 0.05 + corner_trapezoid(t, 148.0, 156.0, 0.6), 1e-12) << i;
    }
    EXPECT_EQ(c.gt.query_id, "x");
    EXPECT_DOUBLE_EQ(c.gt.spans.at(0).start_s, s);
    EXPECT_DOUBLE_EQ(c.gt.spans.at(0).end_s, e);
    EXPECT_TRUE(c.distractor_spans.empty());
}

TEST(GenerateCase, DeterministicAndSeedSensitive)
{
    auto spec = base_spec();
    spec.noise_sigma = 0.05;
    spec.distractors.count = 3;
    spec.seed = 1234;
    const auto a = p2s::generate_case(spec);
    const auto b = p2s::generate_case(spec);
    ASSERT_EQ(a.raw_o.size(), b.raw_o.size());
    EXPECT_EQ(std::memcmp(a.raw_o.values().data(), b.raw_o.values().data(), a.raw_o.size() * sizeof(double)), 0);
    EXPECT_EQ(std::memcmp(a.raw_b.values().data(), b.raw_b.values().data(), a.raw_b.size() * sizeof(double)), 0);
    spec.seed = 1235;
    const auto c = p2s::generate_case(spec);
    EXPECT_NE(std::memcmp(a.raw_o.values().data(), c.raw_o.values().data(), a.raw_o.size() * sizeof(double)), 0);
    // the three channels use independent noise streams
    EXPECT_NE(a.raw_o[0], a.raw_a[0]);
}

TEST(GenerateCase, DistractorsStayInOriginalChannelAndApart)
{
    auto spec = base_spec();
    spec.duration_s = 1800;
    spec.event.center_s = 900;
    spec.distractors = {20, 0.9, 10.0};
    const auto c = p2s::generate_case(spec);
    ASSERT_EQ(c.distractor_spans.size(), 20u);
    for (const auto& d : c.distractor_spans) {
        EXPECT_TRUE(d.end_s < 144.0 + 894.0 - 5.0 || d.start_s > 906.0 + 5.0);
        const auto mid = static_cast<std::size_t>(std::floor((d.start_s + d.end_s) / 2 * 5.0));
        EXPECT_NEAR(c.raw_o[mid], 0.95, 1e-9);
        EXPECT_EQ(c.raw_a[mid], 0.05);
        EXPECT_EQ(c.raw_b[mid], 0.05);
    }
}

TEST(GenerateCase, RejectsBadSpecs)
{
    auto spec = base_spec();
    spec.event.center_s = 2.0;
    EXPECT_THROW(p2s::generate_case(spec), std::invalid_argument);
    spec = base_spec();
    spec.noise_sigma = -1;
    EXPECT_THROW(p2s::generate_case(spec), std::invalid_argument);
    spec = base_spec();
    spec.event.width_s = 0;
    EXPECT_THROW(p2s::generate_case(spec), std::invalid_argument);
    spec = base_spec();
    spec.distractors = {200, 0.9, 30.0};
    EXPECT_THROW(p2s::generate_case(spec), std::invalid_argument);
}

TEST(GenerateSuite, ReproducibleAndWithinRanges)
{
    const auto ranges = p2s::SuiteRanges::noisy();
    const auto s1 = p2s::generate_suite(100, ranges, 77);
    const auto s2 = p2s::generate_suite(100, ranges, 77);
    ASSERT_EQ(s1.cases.size(), 100u);
    double wmin = 1e9, wmax = 0;
    for (std::size_t i = 0; i < 100; ++i) {
        const auto& c = s1.cases[i];
        EXPECT_EQ(s1.ids[i], s2.ids[i]);
        ASSERT_EQ(c.raw_o.size(), s2.cases[i].raw_o.size());
        for (std::size_t k = 0; k < c.raw_o.size(); k += 97) EXPECT_EQ(c.raw_o[k], s2.cases[i].raw_o[k]);
        EXPECT_EQ(c.raw_o.size(), c.raw_a.size());
        EXPECT_EQ(c.raw_o.size(), c.raw_b.size());
        const auto& sp = c.spec;
        EXPECT_GE(sp.duration_s, ranges.duration_s.lo);
        EXPECT_LE(sp.duration_s, ranges.duration_s.hi);
        EXPECT_GE(sp.noise_sigma, ranges.noise_sigma.lo);
        EXPECT_LE(sp.noise_sigma, ranges.noise_sigma.hi);
        EXPECT_LE(sp.distractors.count, 5u);
        EXPECT_GE(c.gt.spans[0].start_s, 0.0);
        EXPECT_LE(c.gt.spans[0].end_s, sp.duration_s);
        wmin = std::min(wmin, sp.event.width_s);
        wmax = std::max(wmax, sp.event.width_s);
    }
    EXPECT_GE(wmin, ranges.width_s.lo);
    EXPECT_LE(wmax, ranges.width_s.hi);
    // 100 uniform draws spread over most of the requested range
    EXPECT_LT(wmin, ranges.width_s.lo + 0.2 * (ranges.width_s.hi - ranges.width_s.lo));
    EXPECT_GT(wmax, ranges.width_s.hi - 0.2 * (ranges.width_s.hi - ranges.width_s.lo));
}

TEST(GenerateSuite, SaturationPutsDistractorsAboveEvent)
{
    const auto suite = p2s::generate_suite(5, p2s::SuiteRanges::saturation(), 3);
    for (const auto& c : suite.cases) {
        EXPECT_EQ(c.distractor_spans.size(), 20u);
        const auto set = p2s::generate_spans(c.raw_o, p2s::AsgConfig{});
        ASSERT_FALSE(set.empty());
        const auto& top = set.candidates[0];
        bool on_distractor = false;
        for (const auto& d : c.distractor_spans) on_distractor |= top.start_s < d.end_s && d.start_s < top.end_s;
        EXPECT_TRUE(on_distractor);
    }
}

TEST(WriteSuite, ManifestLoadsBack)
{
    const auto dir = std::filesystem::temp_directory_path() / ("p2s_suite_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    const auto suite = p2s::generate_suite(3, p2s::SuiteRanges::clean(), 5);
    const auto path = p2s::write_suite(suite, dir);
    const auto m = p2s::load_manifest(path);
    ASSERT_EQ(m.queries.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& q = m.queries[i];
        EXPECT_EQ(q.query_id, suite.ids[i]);
        ASSERT_EQ(q.ground_truth.size(), 1u);
        EXPECT_DOUBLE_EQ(q.ground_truth[0].start_s, suite.cases[i].gt.spans[0].start_s);
        const auto& src = std::get<p2s::SimilaritySource>(q.source);
        const auto values = p2s::read_similarity_values(m.resolve(src.original));
        ASSERT_EQ(values.size(), suite.cases[i].raw_o.size());
        for (std::size_t k = 0; k < values.size(); k += 53)
            EXPECT_EQ(values[k], static_cast<double>(static_cast<float>(suite.cases[i].raw_o[k])));
    }
    std::filesystem::remove_all(dir);
}
