#include "p2s/asg.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace p2s {

std::string_view to_string(Provenance p)
{
    return p == Provenance::injected ? "injected" : "original";
}

Provenance provenance_from_string(std::string_view s)
{
    if (s == "original") return Provenance::original;
    if (s == "injected") return Provenance::injected;
    throw std::invalid_argument("unknown provenance: " + std::string(s));
}

std::string_view to_string(SetChannel c)
{
    switch (c) {
    case SetChannel::original: return "original";
    case SetChannel::sub_a: return "sub_a";
    case SetChannel::sub_b: return "sub_b";
    case SetChannel::injected: return "injected";
    case SetChannel::final: return "final";
    }
    return "original";
}

Candidate make_candidate(IndexSpan span, std::size_t peak_idx, double peak_height, double fps)
{
    Candidate c;
    c.start_idx = span.start;
    c.end_idx = span.end;
    c.peak_idx = peak_idx;
    c.peak_height = peak_height;
    c.start_s = static_cast<double>(span.start) / fps;
    c.end_s = static_cast<double>(span.end + 1) / fps;
    return c;
}

bool candidate_order(const Candidate& a, const Candidate& b)
{
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    if (a.start_idx != b.start_idx) return a.start_idx < b.start_idx;
    return a.end_idx < b.end_idx;
}

void CandidateSet::sort()
{
    std::stable_sort(candidates.begin(), candidates.end(), candidate_order);
}

void AsgConfig::validate() const
{
    if (!(prominence_min >= 0.0)) throw std::invalid_argument("prominence_min must be >= 0");
    if (!(min_distance_s > 0.0)) throw std::invalid_argument("min_distance_s must be > 0");
}

std::optional<IndexSpan> expand_peak(const SimilaritySequence& smoothed, const Peak& peak,
                                     double tau_r, IndexSpan bounds)
{
    if (!(peak.height > 0.0)) return std::nullopt;
    if (bounds.start > bounds.end || bounds.end >= smoothed.size() || !bounds.contains(peak.index))
        throw std::invalid_argument("expansion bounds must lie in the sequence and contain the peak");

    const double threshold = peak.height * tau_r;
    std::size_t start = peak.index;
    while (start > bounds.start && smoothed[start - 1] > threshold) --start;
    std::size_t end = peak.index;
    while (end < bounds.end && smoothed[end + 1] > threshold) ++end;
    return IndexSpan{start, end};
}

SpanTrace trace_spans(const SimilaritySequence& raw, const AsgConfig& config,
                      const std::optional<SignalStats>& stats_override,
                      const std::optional<IndexSpan>& bounds)
{
    config.validate();
    SpanTrace trace;
    const IndexSpan range = bounds.value_or(IndexSpan{0, raw.size() - 1});
    if (range.start > range.end) return trace;
    if (range.end >= raw.size())
        throw std::out_of_range("bounds exceed sequence length " + std::to_string(raw.size()));

    const SimilaritySequence local =
        (range.start == 0 && range.end == raw.size() - 1) ? raw : raw.slice(range.start, range.end);
    trace.offset = range.start;
    trace.stats = stats_override.value_or(compute_stats(local));

    const SimilaritySequence smoothed = moving_average(local, trace.stats.window);
    trace.smoothed.assign(smoothed.values().begin(), smoothed.values().end());

    const auto distance = min_distance_samples(config.min_distance_s, raw.fps());
    const IndexSpan local_bounds{0, local.size() - 1};
    for (const Peak& p : find_peaks(smoothed, distance, config.prominence_min)) {
        auto span = expand_peak(smoothed, p, trace.stats.tau_r, local_bounds);
        if (!span) continue;
        Peak global = p;
        global.index += range.start;
        trace.peaks.push_back(global);
        trace.peak_spans.push_back({span->start + range.start, span->end + range.start});
    }
    return trace;
}

namespace {

SetChannel set_channel_for(Channel c)
{
    switch (c) {
    case Channel::sub_a: return SetChannel::sub_a;
    case Channel::sub_b: return SetChannel::sub_b;
    default: return SetChannel::original;
    }
}

} // namespace

CandidateSet build_candidates(const SpanTrace& trace, double fps, SetChannel channel)
{
    CandidateSet set;
    set.channel = channel;
    set.signal_stats = trace.stats;

    // identical spans keep the higher seed peak (lower index on ties)
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> by_span;
    for (std::size_t i = 0; i < trace.peaks.size(); ++i) {
        const auto key = std::make_pair(trace.peak_spans[i].start, trace.peak_spans[i].end);
        auto [it, inserted] = by_span.emplace(key, i);
        if (!inserted && trace.peaks[i].height > trace.peaks[it->second].height) it->second = i;
    }

    set.candidates.reserve(by_span.size());
    for (const auto& [key, i] : by_span) {
        const IndexSpan span = trace.peak_spans[i];
        Candidate c = make_candidate(span, trace.peaks[i].index, trace.peaks[i].height, fps);
        double sum = 0.0;
        for (std::size_t j = span.start; j <= span.end; ++j) sum += trace.smoothed[j - trace.offset];
        c.base_score = sum / static_cast<double>(span.length());
        c.final_score = c.base_score;
        set.candidates.push_back(c);
    }
    set.sort();
    return set;
}

CandidateSet generate_spans(const SimilaritySequence& raw, const AsgConfig& config,
                            const std::optional<SignalStats>& stats_override,
                            const std::optional<IndexSpan>& bounds)
{
    return build_candidates(trace_spans(raw, config, stats_override, bounds), raw.fps(),
                            set_channel_for(raw.channel()));
}

SimilaritySequence min_max_normalize(const SimilaritySequence& seq)
{
    auto x = seq.values();
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double range = *hi - *lo;
    std::vector<double> out(x.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - *lo) / range;
    }
    return seq.with_values(std::move(out));
}

} // namespace p2s
