#pragma once

// Evidence-based proposal refinement: reranking with sub-query evidence,
// evidence-union injection and temporal NMS.

#include "p2s/asg.hpp"

#include <cstddef>
#include <vector>

namespace p2s {

// Second-valued interval; end > start.
struct TimeSpan {
    double start_s = 0.0;
    double end_s = 0.0;
};

double tiou(const TimeSpan& a, const TimeSpan& b);

inline TimeSpan time_span(const Candidate& c) { return {c.start_s, c.end_s}; }

// Disjoint, non-adjacent inclusive index ranges sorted by start.
struct RegionSet {
    std::vector<IndexSpan> regions;

    bool empty() const { return regions.empty(); }
};

struct RefineConfig {
    double beta = 0.5;
    double nms_tiou = 0.8;
    std::size_t top_k = 10;
    // When false, injected candidates score base + bonus (no beta weight).
    bool inject_apply_beta = true;

    void validate() const;
};

// max(raw_a over the span) + max(raw_b over the span), both unsmoothed.
double evidence_bonus(const Candidate& cand, const SimilaritySequence& raw_a,
                      const SimilaritySequence& raw_b);

// Populates bonus and final = base + beta * bonus, then re-sorts.
CandidateSet rerank(CandidateSet set, const SimilaritySequence& raw_a,
                    const SimilaritySequence& raw_b, double beta);

// Merges overlapping or adjacent inclusive ranges.
RegionSet merge_ranges(std::vector<IndexSpan> ranges);

// Temporal union of every (a, b) pair sharing at least one sample.
RegionSet union_regions(const CandidateSet& p_a, const CandidateSet& p_b);

struct InjectParams {
    double beta = 0.5;
    bool apply_beta = true;
};

CandidateSet inject(const SimilaritySequence& raw_o, const RegionSet& regions,
                    const SignalStats& global_stats, const AsgConfig& asg_config,
                    const SimilaritySequence& raw_a, const SimilaritySequence& raw_b,
                    InjectParams params);

// Greedy NMS on final_score. Exact-duplicate spans collapse to the
// higher-scored one first.
CandidateSet nms(const CandidateSet& set, double nms_tiou, std::size_t top_k);

CandidateSet concat(const CandidateSet& a, const CandidateSet& b, SetChannel channel);

} // namespace p2s
