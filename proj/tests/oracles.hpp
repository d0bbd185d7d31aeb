#pragma once

// Literal, deliberately slow reference implementations used only by tests.
// None of these share code with the library paths they check.

#include "p2s/asg.hpp"
#include "p2s/refine.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<double> window_means(const std::vector<double>& x, std::size_t window)
{
    const long k = static_cast<long>(window - 1) / 2;
    const long n = static_cast<long>(x.size());
    std::vector<double> out;
    for (long i = 0; i < n; ++i) {
        double sum = 0.0;
        long count = 0;
        for (long j = i - k; j <= i + k; ++j) {
            if (j < 0 || j >= n) continue;
            sum += x[static_cast<std::size_t>(j)];
            ++count;
        }
        out.push_back(sum / static_cast<double>(count));
    }
    return out;
}

inline double two_pass_std(const std::vector<double>& x)
{
    long double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<long double>(x.size());
    long double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return static_cast<double>(std::sqrt(ss / static_cast<long double>(x.size())));
}

// Rule (a): an index is a candidate when it is the floor-midpoint of a run of
// equal values whose two flanking samples exist and are both lower.
inline std::vector<std::size_t> local_maxima(const std::vector<double>& x)
{
    std::vector<std::size_t> out;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t l = i, r = i;
        while (l > 0 && x[l - 1] == x[i]) --l;
        while (r + 1 < n && x[r + 1] == x[i]) ++r;
        if (l == 0 || r + 1 == n) continue;
        if (!(x[l - 1] < x[i] && x[r + 1] < x[i])) continue;
        if (i == (l + r) / 2) out.push_back(i);
    }
    return out;
}

inline double prominence(const std::vector<double>& x, std::size_t p)
{
    const double h = x[p];
    double left = h;
    for (long i = static_cast<long>(p); i >= 0; --i) {
        if (x[static_cast<std::size_t>(i)] > h) break;
        left = std::min(left, x[static_cast<std::size_t>(i)]);
    }
    double right = h;
    for (std::size_t i = p; i < x.size(); ++i) {
        if (x[i] > h) break;
        right = std::min(right, x[i]);
    }
    return h - std::max(left, right);
}

struct OraclePeak {
    std::size_t index;
    double prominence;
};

// Rules (a)-(c) applied literally: candidates, then O(P^2) distance filter in
// priority order, then prominence filter.
inline std::vector<OraclePeak> find_peaks(const std::vector<double>& x, std::size_t distance, double prom_min)
{
    auto cands = local_maxima(x);
    std::sort(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] > x[b];
        return a < b;
    });
    std::vector<std::size_t> kept;
    for (std::size_t c : cands) {
        bool ok = true;
        for (std::size_t k : kept) {
            const std::size_t d = c > k ? c - k : k - c;
            if (d <= distance) ok = false;
        }
        if (ok) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<OraclePeak> out;
    for (std::size_t k : kept) {
        const double pr = prominence(x, k);
        if (pr >= prom_min) out.push_back({k, pr});
    }
    return out;
}

// Every overlapping pair emits its hull; hulls are merged by repeated passes.
inline std::vector<p2s::IndexSpan> union_regions(const std::vector<p2s::IndexSpan>& a,
                                                 const std::vector<p2s::IndexSpan>& b)
{
    std::vector<p2s::IndexSpan> ranges;
    for (const auto& x : a) {
        for (const auto& y : b) {
            if (x.start <= y.end && y.start <= x.end)
                ranges.push_back({std::min(x.start, y.start), std::max(x.end, y.end)});
        }
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < ranges.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < ranges.size() && !changed; ++j) {
                const auto& r = ranges[i];
                const auto& s = ranges[j];
                if (r.start <= s.end + 1 && s.start <= r.end + 1) {
                    ranges[i] = {std::min(r.start, s.start), std::max(r.end, s.end)};
                    ranges.erase(ranges.begin() + static_cast<long>(j));
                    changed = true;
                }
            }
        }
    }
    std::sort(ranges.begin(), ranges.end(),
              [](const p2s::IndexSpan& x, const p2s::IndexSpan& y) { return x.start < y.start; });
    return ranges;
}

// Greedy NMS by explicit suppression of the remaining pool.
inline std::vector<p2s::Candidate> greedy_nms(std::vector<p2s::Candidate> pool, double thr, std::size_t top_k)
{
    std::vector<p2s::Candidate> kept;
    while (!pool.empty() && kept.size() < top_k) {
        auto best = pool.begin();
        for (auto it = pool.begin(); it != pool.end(); ++it) {
            if (it->final_score > best->final_score ||
                (it->final_score == best->final_score &&
                 (it->start_idx < best->start_idx ||
                  (it->start_idx == best->start_idx && it->end_idx < best->end_idx))))
                best = it;
        }
        const p2s::Candidate chosen = *best;
        kept.push_back(chosen);
        std::vector<p2s::Candidate> rest;
        for (const auto& c : pool) {
            const double inter = std::min(c.end_s, chosen.end_s) - std::max(c.start_s, chosen.start_s);
            const double uni = std::max(c.end_s, chosen.end_s) - std::min(c.start_s, chosen.start_s);
            const double iou = inter > 0 ? inter / uni : 0.0;
            if (iou < thr) rest.push_back(c);
        }
        pool = std::move(rest);
    }
    return kept;
}

inline std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n, int quantize = 0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> x(n);
    for (double& v : x) {
        v = u(rng);
        // coarse quantization creates plateaus and ties
        if (quantize > 0) v = std::round(v * quantize) / quantize;
    }
    return x;
}

} // namespace oracle
