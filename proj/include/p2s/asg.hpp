#pragma once

// Adaptive span generation: smooth, detect peaks, grow each peak into a span
// while the smoothed signal stays above peak_height * tau_r.

#include "p2s/signal.hpp"

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace p2s {

enum class Provenance { original, injected };
enum class SetChannel { original, sub_a, sub_b, injected, final };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);
std::string_view to_string(SetChannel c);

// Inclusive frame-index range.
struct IndexSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    bool contains(std::size_t i) const { return start <= i && i <= end; }
    friend bool operator==(const IndexSpan&, const IndexSpan&) = default;
};

struct Candidate {
    std::size_t start_idx = 0;
    std::size_t end_idx = 0;
    std::size_t peak_idx = 0;
    double peak_height = 0.0;
    double start_s = 0.0;
    double end_s = 0.0;
    double base_score = 0.0;
    double bonus_score = 0.0;
    double final_score = 0.0;
    Provenance provenance = Provenance::original;

    IndexSpan span() const { return {start_idx, end_idx}; }
};

// Frame i covers [i/fps, (i+1)/fps).
Candidate make_candidate(IndexSpan span, std::size_t peak_idx, double peak_height, double fps);

// final_score descending, then start_idx, then end_idx ascending.
bool candidate_order(const Candidate& a, const Candidate& b);

struct CandidateSet {
    std::vector<Candidate> candidates;
    SetChannel channel = SetChannel::original;
    SignalStats signal_stats;

    void sort();
    std::size_t size() const { return candidates.size(); }
    bool empty() const { return candidates.empty(); }
};

struct AsgConfig {
    double prominence_min = 0.05;
    double min_distance_s = 1.0;
    bool normalization = false;

    void validate() const;
};

// std::nullopt when the peak has non-positive height (the caller drops it).
std::optional<IndexSpan> expand_peak(const SimilaritySequence& smoothed, const Peak& peak,
                                     double tau_r, IndexSpan bounds);

// Everything generate_spans computes, kept for inspection and plotting.
struct SpanTrace {
    std::size_t offset = 0;              // global index of the first restricted sample
    SignalStats stats;
    std::vector<double> smoothed;        // restricted range only
    std::vector<Peak> peaks;             // global indices, positive-height survivors
    std::vector<IndexSpan> peak_spans;   // global indices, one per peak
};

SpanTrace trace_spans(const SimilaritySequence& raw, const AsgConfig& config,
                      const std::optional<SignalStats>& stats_override = std::nullopt,
                      const std::optional<IndexSpan>& bounds = std::nullopt);

// Scores and deduplicates the spans of a trace.
CandidateSet build_candidates(const SpanTrace& trace, double fps, SetChannel channel);

CandidateSet generate_spans(const SimilaritySequence& raw, const AsgConfig& config,
                            const std::optional<SignalStats>& stats_override = std::nullopt,
                            const std::optional<IndexSpan>& bounds = std::nullopt);

// Min-max rescale to [0, 1]; a constant sequence maps to zeros.
SimilaritySequence min_max_normalize(const SimilaritySequence& seq);

} // namespace p2s
