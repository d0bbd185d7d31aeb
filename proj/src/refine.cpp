#include "p2s/refine.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace p2s {

double tiou(const TimeSpan& a, const TimeSpan& b)
{
    if (!(a.end_s > a.start_s) || !(b.end_s > b.start_s))
        throw std::invalid_argument("tiou requires spans with end > start");
    const double inter = std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s);
    if (inter <= 0.0) return 0.0;
    const double uni = std::max(a.end_s, b.end_s) - std::min(a.start_s, b.start_s);
    return inter / uni;
}

void RefineConfig::validate() const
{
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (!(nms_tiou > 0.0 && nms_tiou <= 1.0)) throw std::invalid_argument("nms_tiou must lie in (0, 1]");
    if (top_k == 0) throw std::invalid_argument("top_k must be positive");
}

namespace {

double range_max(const SimilaritySequence& seq, std::size_t lo, std::size_t hi)
{
    if (hi >= seq.size())
        throw std::out_of_range("candidate end index " + std::to_string(hi) +
                                " outside evidence sequence of length " + std::to_string(seq.size()));
    auto x = seq.values();
    return *std::max_element(x.begin() + static_cast<std::ptrdiff_t>(lo),
                             x.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
}

} // namespace

double evidence_bonus(const Candidate& cand, const SimilaritySequence& raw_a,
                      const SimilaritySequence& raw_b)
{
    if (cand.start_idx > cand.end_idx) throw std::invalid_argument("candidate start after end");
    return range_max(raw_a, cand.start_idx, cand.end_idx) + range_max(raw_b, cand.start_idx, cand.end_idx);
}

CandidateSet rerank(CandidateSet set, const SimilaritySequence& raw_a,
                    const SimilaritySequence& raw_b, double beta)
{
    for (Candidate& c : set.candidates) {
        c.bonus_score = evidence_bonus(c, raw_a, raw_b);
        c.final_score = c.base_score + beta * c.bonus_score;
    }
    set.sort();
    return set;
}

RegionSet merge_ranges(std::vector<IndexSpan> ranges)
{
    std::sort(ranges.begin(), ranges.end(), [](const IndexSpan& a, const IndexSpan& b) {
        return a.start != b.start ? a.start < b.start : a.end < b.end;
    });
    RegionSet out;
    for (const IndexSpan& r : ranges) {
        if (!out.regions.empty() && r.start <= out.regions.back().end + 1)
            out.regions.back().end = std::max(out.regions.back().end, r.end);
        else
            out.regions.push_back(r);
    }
    return out;
}

namespace {

// Spans from `probe` that share at least one sample with some span in `other`.
void collect_overlapping(const std::vector<Candidate>& probe, const std::vector<Candidate>& other,
                         std::vector<IndexSpan>& out)
{
    std::vector<IndexSpan> sorted;
    sorted.reserve(other.size());
    for (const Candidate& c : other) sorted.push_back(c.span());
    std::sort(sorted.begin(), sorted.end(),
              [](const IndexSpan& a, const IndexSpan& b) { return a.start < b.start; });
    std::vector<std::size_t> prefix_max_end(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        prefix_max_end[i] = i == 0 ? sorted[i].end : std::max(prefix_max_end[i - 1], sorted[i].end);

    for (const Candidate& c : probe) {
        // spans starting at or before c.end_idx; one of them must end at or after c.start_idx
        auto it = std::upper_bound(sorted.begin(), sorted.end(), c.end_idx,
                                   [](std::size_t v, const IndexSpan& s) { return v < s.start; });
        const auto count = static_cast<std::size_t>(it - sorted.begin());
        if (count > 0 && prefix_max_end[count - 1] >= c.start_idx) out.push_back(c.span());
    }
}

} // namespace

RegionSet union_regions(const CandidateSet& p_a, const CandidateSet& p_b)
{
    // The union of every overlapping pair's hull equals the union of the
    // participating spans, so merging those gives the same regions.
    std::vector<IndexSpan> participating;
    collect_overlapping(p_a.candidates, p_b.candidates, participating);
    collect_overlapping(p_b.candidates, p_a.candidates, participating);
    return merge_ranges(std::move(participating));
}

CandidateSet inject(const SimilaritySequence& raw_o, const RegionSet& regions,
                    const SignalStats& global_stats, const AsgConfig& asg_config,
                    const SimilaritySequence& raw_a, const SimilaritySequence& raw_b,
                    InjectParams params)
{
    CandidateSet out;
    out.channel = SetChannel::injected;
    out.signal_stats = global_stats;
    const double weight = params.apply_beta ? params.beta : 1.0;
    for (const IndexSpan& region : regions.regions) {
        CandidateSet found = generate_spans(raw_o, asg_config, global_stats, region);
        for (Candidate c : found.candidates) {
            c.provenance = Provenance::injected;
            c.bonus_score = evidence_bonus(c, raw_a, raw_b);
            c.final_score = c.base_score + weight * c.bonus_score;
            out.candidates.push_back(c);
        }
    }
    out.sort();
    return out;
}

CandidateSet nms(const CandidateSet& set, double nms_tiou, std::size_t top_k)
{
    std::vector<Candidate> ordered = set.candidates;
    std::stable_sort(ordered.begin(), ordered.end(), candidate_order);

    CandidateSet out;
    out.channel = SetChannel::final;
    out.signal_stats = set.signal_stats;

    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Candidate& c : ordered) {
        if (out.candidates.size() >= top_k) break;
        if (!seen.emplace(c.start_idx, c.end_idx).second) continue;
        const TimeSpan span = time_span(c);
        bool suppressed = false;
        for (const Candidate& kept : out.candidates) {
            if (tiou(time_span(kept), span) >= nms_tiou) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) out.candidates.push_back(c);
    }
    return out;
}

CandidateSet concat(const CandidateSet& a, const CandidateSet& b, SetChannel channel)
{
    CandidateSet out;
    out.channel = channel;
    out.signal_stats = a.signal_stats;
    out.candidates = a.candidates;
    out.candidates.insert(out.candidates.end(), b.candidates.begin(), b.candidates.end());
    out.sort();
    return out;
}

} // namespace p2s
