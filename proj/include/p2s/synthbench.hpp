#pragma once

// Seeded synthetic similarity signals with a planted target event, evidence
// bumps for the two sub-query channels and optional distractors.

#include "p2s/eval.hpp"
#include "p2s/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace p2s {

struct EventSpec {
    double center_s = 60.0;
    double width_s = 10.0;
    double amplitude = 0.6;
};

struct DistractorSpec {
    std::size_t count = 0;
    double amplitude = 0.9;
    double width_s = 0.0; // 0 means the event width
};

struct SynthSpec {
    double duration_s = 600.0;
    double fps = 5.0;
    double baseline = 0.05;
    EventSpec event;
    // Centers of the sub-query bumps as fractions of the event width; each
    // bump spans sub_width_fraction of the event width.
    double sub_a_offset = 1.0 / 3.0;
    double sub_b_offset = 2.0 / 3.0;
    double sub_width_fraction = 2.0 / 3.0;
    double sub_amplitude = -1.0; // negative means the event amplitude
    double noise_sigma = 0.0;
    DistractorSpec distractors;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthCase {
    SimilaritySequence raw_o;
    SimilaritySequence raw_a;
    SimilaritySequence raw_b;
    GroundTruth gt;
    SynthSpec spec;
    std::vector<TimeSpan> distractor_spans;
};

// Trapezoid at half amplitude on start_s and end_s: each linear ramp spans
// 10% of the width and is centred on its boundary.
double trapezoid(double t, double start_s, double end_s, double amplitude);

SynthCase generate_case(const SynthSpec& spec, const std::string& case_id = "case");

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct SuiteRanges {
    double fps = 5.0;
    Range duration_s{600.0, 1800.0};
    Range width_s{4.0, 30.0};
    Range amplitude{0.4, 0.9};
    Range noise_sigma{0.0, 0.05};
    Range distractor_count{0.0, 0.0};
    Range distractor_amplitude{0.9, 0.9};
    // Share of cases drawn with noise_sigma = 0 regardless of noise_sigma.
    double noiseless_fraction = 0.0;

    static SuiteRanges clean();
    static SuiteRanges saturation();
    static SuiteRanges noisy();
};

struct SynthSuite {
    std::vector<std::string> ids;
    std::vector<SynthCase> cases;
};

SynthSuite generate_suite(std::size_t n_cases, const SuiteRanges& ranges, std::uint64_t seed);

// Writes one P2SF similarity file per channel plus manifest.json. Returns the manifest path.
std::filesystem::path write_suite(const SynthSuite& suite, const std::filesystem::path& dir);

} // namespace p2s
