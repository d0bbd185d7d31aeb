#include "p2s/synthbench.hpp"
#include "p2s/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace p2s {

void SynthSpec::validate() const
{
    if (!(fps > 0.0)) throw std::invalid_argument("synth fps must be positive");
    if (!(duration_s > 0.0)) throw std::invalid_argument("synth duration must be positive");
    if (!(event.width_s > 0.0)) throw std::invalid_argument("event width must be positive");
    if (!(event.amplitude > 0.0)) throw std::invalid_argument("event amplitude must be positive");
    if (event.center_s - event.width_s / 2 < 0.0 || event.center_s + event.width_s / 2 > duration_s)
        throw std::invalid_argument("event does not fit within the duration");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
    for (double f : {sub_a_offset, sub_b_offset, sub_width_fraction}) {
        if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("sub-query bump fractions must lie in [0, 1]");
    }
    if (sub_width_fraction == 0.0) throw std::invalid_argument("sub_width_fraction must be positive");
    if (distractors.count > 0 && !(distractors.amplitude > 0.0))
        throw std::invalid_argument("distractor amplitude must be positive");
    if (distractors.width_s < 0.0) throw std::invalid_argument("distractor width must be >= 0");
}

double trapezoid(double t, double start_s, double end_s, double amplitude)
{
    const double ramp = 0.1 * (end_s - start_s);
    const double lo = start_s - ramp / 2;
    const double hi = end_s + ramp / 2;
    if (t <= lo || t >= hi) return 0.0;
    if (t < lo + ramp) return amplitude * (t - lo) / ramp;
    if (t > hi - ramp) return amplitude * (hi - t) / ramp;
    return amplitude;
}

namespace {

std::vector<double> noisy_baseline(const SynthSpec& spec, std::size_t n, std::uint64_t stream)
{
    std::vector<double> x(n, spec.baseline);
    if (spec.noise_sigma > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(stream)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (double& v : x) v += noise(rng);
    }
    return x;
}

void add_bump(std::vector<double>& x, double fps, double start_s, double end_s, double amplitude)
{
    const double half_ramp = 0.05 * (end_s - start_s);
    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor((start_s - half_ramp) * fps)));
    for (std::size_t i = first; i < x.size(); ++i) {
        const double t = (static_cast<double>(i) + 0.5) / fps;
        if (t >= end_s + half_ramp) break;
        x[i] += trapezoid(t, start_s, end_s, amplitude);
    }
}

bool overlaps(const TimeSpan& a, const TimeSpan& b, double margin)
{
    return a.start_s < b.end_s + margin && b.start_s < a.end_s + margin;
}

} // namespace

SynthCase generate_case(const SynthSpec& spec, const std::string& case_id)
{
    spec.validate();
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.fps));
    if (n < 3) throw std::invalid_argument("synth duration too short for the frame rate");

    const double ev_start = spec.event.center_s - spec.event.width_s / 2;
    const double ev_end = spec.event.center_s + spec.event.width_s / 2;
    auto o = noisy_baseline(spec, n, 1);
    auto a = noisy_baseline(spec, n, 2);
    auto b = noisy_baseline(spec, n, 3);
    add_bump(o, spec.fps, ev_start, ev_end, spec.event.amplitude);

    const double sub_amp = spec.sub_amplitude < 0.0 ? spec.event.amplitude : spec.sub_amplitude;
    const double sub_half = spec.sub_width_fraction * spec.event.width_s / 2;
    const double a_center = ev_start + spec.sub_a_offset * spec.event.width_s;
    const double b_center = ev_start + spec.sub_b_offset * spec.event.width_s;
    add_bump(a, spec.fps, a_center - sub_half, a_center + sub_half, sub_amp);
    add_bump(b, spec.fps, b_center - sub_half, b_center + sub_half, sub_amp);

    std::vector<TimeSpan> distractor_spans;
    if (spec.distractors.count > 0) {
        const double w = spec.distractors.width_s > 0.0 ? spec.distractors.width_s : spec.event.width_s;
        if (w >= spec.duration_s) throw std::invalid_argument("distractor width exceeds the duration");
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32), 4u};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> pos(0.0, spec.duration_s - w);
        const double margin = std::max(2.0, 0.5 * w);
        const TimeSpan event_span{ev_start, ev_end};
        for (std::size_t k = 0; k < spec.distractors.count; ++k) {
            bool placed = false;
            for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
                const double s = pos(rng);
                const TimeSpan cand{s, s + w};
                if (overlaps(cand, event_span, margin)) continue;
                if (std::any_of(distractor_spans.begin(), distractor_spans.end(),
                                [&](const TimeSpan& d) { return overlaps(cand, d, margin); }))
                    continue;
                distractor_spans.push_back(cand);
                placed = true;
            }
            if (!placed) throw std::invalid_argument("cannot place distractors without overlap");
        }
        for (const TimeSpan& d : distractor_spans)
            add_bump(o, spec.fps, d.start_s, d.end_s, spec.distractors.amplitude);
    }

    return SynthCase{SimilaritySequence(std::move(o), spec.fps, case_id, Channel::original),
                     SimilaritySequence(std::move(a), spec.fps, case_id, Channel::sub_a),
                     SimilaritySequence(std::move(b), spec.fps, case_id, Channel::sub_b),
                     GroundTruth{case_id, {TimeSpan{ev_start, ev_end}}},
                     spec,
                     std::move(distractor_spans)};
}

SuiteRanges SuiteRanges::clean()
{
    SuiteRanges r;
    r.noiseless_fraction = 0.25;
    return r;
}

SuiteRanges SuiteRanges::saturation()
{
    SuiteRanges r;
    r.duration_s = {1800.0, 3600.0};
    r.width_s = {6.0, 20.0};
    r.amplitude = {0.6, 0.6};
    r.noise_sigma = {0.0, 0.02};
    r.distractor_count = {20.0, 20.0};
    r.distractor_amplitude = {0.9, 0.9};
    return r;
}

SuiteRanges SuiteRanges::noisy()
{
    SuiteRanges r;
    r.noise_sigma = {0.05, 0.15};
    r.distractor_count = {0.0, 5.0};
    r.distractor_amplitude = {0.3, 0.7};
    return r;
}

SynthSuite generate_suite(std::size_t n_cases, const SuiteRanges& ranges, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    auto draw = [&](const Range& r) {
        if (r.hi <= r.lo) return r.lo;
        return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    };

    SynthSuite suite;
    for (std::size_t i = 0; i < n_cases; ++i) {
        SynthSpec spec;
        spec.fps = ranges.fps;
        spec.duration_s = draw(ranges.duration_s);
        spec.event.width_s = draw(ranges.width_s);
        spec.event.amplitude = draw(ranges.amplitude);
        const double half = spec.event.width_s / 2;
        spec.event.center_s = draw({half + 1.0, spec.duration_s - half - 1.0});
        spec.noise_sigma = draw(ranges.noise_sigma);
        if (draw({0.0, 1.0}) < ranges.noiseless_fraction) spec.noise_sigma = 0.0;
        spec.distractors.count = static_cast<std::size_t>(std::llround(draw(ranges.distractor_count)));
        spec.distractors.amplitude = draw(ranges.distractor_amplitude);
        spec.distractors.width_s = draw(ranges.width_s);
        spec.seed = rng();

        char id[32];
        std::snprintf(id, sizeof id, "case%04zu", i);
        suite.ids.emplace_back(id);
        suite.cases.push_back(generate_case(spec, id));
    }
    return suite;
}

std::filesystem::path write_suite(const SynthSuite& suite, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "signals");
    Manifest m;
    m.base_dir = dir;
    for (std::size_t i = 0; i < suite.cases.size(); ++i) {
        const SynthCase& c = suite.cases[i];
        const std::string& id = suite.ids[i];
        const std::string o = "signals/" + id + ".o.p2sf";
        const std::string a = "signals/" + id + ".a.p2sf";
        const std::string b = "signals/" + id + ".b.p2sf";
        write_similarity(dir / o, c.raw_o);
        write_similarity(dir / a, c.raw_a);
        write_similarity(dir / b, c.raw_b);

        QueryRecord q;
        q.query_id = id;
        q.video_id = id;
        q.query_text = "synthetic event " + id;
        q.fps = c.spec.fps;
        q.ground_truth = c.gt.spans;
        q.source = SimilaritySource{o, a, b};
        m.queries.push_back(std::move(q));
    }
    const auto path = dir / "manifest.json";
    save_manifest(m, path);
    return path;
}

} // namespace p2s
