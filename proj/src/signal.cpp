#include "p2s/signal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace p2s {

std::string_view to_string(Channel c)
{
    switch (c) {
    case Channel::original: return "original";
    case Channel::sub_a: return "sub_a";
    case Channel::sub_b: return "sub_b";
    }
    return "original";
}

Channel channel_from_string(std::string_view s)
{
    if (s == "original") return Channel::original;
    if (s == "sub_a") return Channel::sub_a;
    if (s == "sub_b") return Channel::sub_b;
    throw std::invalid_argument("unknown channel: " + std::string(s));
}

SimilaritySequence::SimilaritySequence(std::vector<double> values, double fps,
                                       std::string video_id, Channel channel)
    : values_(std::move(values)), fps_(fps), video_id_(std::move(video_id)), channel_(channel)
{
    if (values_.empty())
        throw std::invalid_argument("similarity sequence must hold at least one value");
    if (!(fps_ > 0.0) || !std::isfinite(fps_))
        throw std::invalid_argument("similarity sequence fps must be positive");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]))
            throw std::invalid_argument("non-finite similarity value at frame " + std::to_string(i));
    }
}

SimilaritySequence SimilaritySequence::slice(std::size_t first, std::size_t last) const
{
    if (first > last || last >= values_.size())
        throw std::out_of_range("slice [" + std::to_string(first) + ", " + std::to_string(last) +
                                "] outside sequence of length " + std::to_string(values_.size()));
    return {std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first),
                                values_.begin() + static_cast<std::ptrdiff_t>(last) + 1),
            fps_, video_id_, channel_};
}

SimilaritySequence SimilaritySequence::with_values(std::vector<double> values) const
{
    return {std::move(values), fps_, video_id_, channel_};
}

SimilaritySequence cosine_similarity_sequence(const EmbeddingView& frames,
                                              std::span<const float> query, double fps,
                                              std::string video_id, Channel channel)
{
    if (frames.rows == 0 || frames.cols == 0)
        throw std::invalid_argument("embedding matrix must be non-empty");
    if (frames.data.size() != frames.rows * frames.cols)
        throw std::invalid_argument("embedding matrix storage does not match its shape");
    if (query.size() != frames.cols)
        throw std::invalid_argument("dimension mismatch: frames have D=" + std::to_string(frames.cols) +
                                    ", query has D=" + std::to_string(query.size()));

    double qnorm = 0.0;
    for (float v : query) qnorm += double(v) * double(v);
    qnorm = std::sqrt(qnorm);
    if (qnorm == 0.0)
        throw std::invalid_argument("query embedding has zero norm");

    std::vector<double> out(frames.rows);
    for (std::size_t t = 0; t < frames.rows; ++t) {
        auto row = frames.row(t);
        double dot = 0.0, norm = 0.0;
        for (std::size_t d = 0; d < frames.cols; ++d) {
            dot += double(row[d]) * double(query[d]);
            norm += double(row[d]) * double(row[d]);
        }
        if (norm == 0.0)
            throw std::invalid_argument("frame embedding row " + std::to_string(t) + " has zero norm");
        out[t] = std::clamp(dot / (std::sqrt(norm) * qnorm), -1.0, 1.0);
    }
    return {std::move(out), fps, std::move(video_id), channel};
}

double population_std(const SimilaritySequence& seq)
{
    auto x = seq.values();
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n);
}

double adaptive_ratio(double sigma)
{
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("adaptive_ratio requires a finite non-negative sigma");
    return 0.5 + 0.5 * (1.0 / (1.0 + std::exp(-sigma)));
}

std::size_t smoothing_window(double fps, double tau_r)
{
    const double target = fps * tau_r;
    if (!(target >= 1.0)) return 1;
    // odd numbers are 2k+1; pick the k nearest to (target-1)/2
    const double k = std::floor((target - 1.0) / 2.0 + 0.5);
    return static_cast<std::size_t>(k) * 2 + 1;
}

SignalStats compute_stats(const SimilaritySequence& seq)
{
    SignalStats s;
    s.sigma = population_std(seq);
    s.tau_r = adaptive_ratio(s.sigma);
    s.window = smoothing_window(seq.fps(), s.tau_r);
    return s;
}

SimilaritySequence moving_average(const SimilaritySequence& seq, std::size_t window)
{
    if (window == 0 || window % 2 == 0)
        throw std::invalid_argument("moving_average window must be odd and positive");
    auto x = seq.values();
    const std::size_t n = x.size();
    const std::size_t k = (window - 1) / 2;
    if (k == 0) return seq;

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= k ? i - k : 0;
        const std::size_t hi = std::min(n - 1, i + k);
        double sum = 0.0;
        double mn = x[lo], mx = x[lo];
        for (std::size_t j = lo; j <= hi; ++j) {
            sum += x[j];
            mn = std::min(mn, x[j]);
            mx = std::max(mx, x[j]);
        }
        // the exact mean lies in [mn, mx]; clamping only strips rounding error
        out[i] = std::clamp(sum / static_cast<double>(hi - lo + 1), mn, mx);
    }
    return seq.with_values(std::move(out));
}

std::vector<std::size_t> local_maxima(std::span<const double> x)
{
    std::vector<std::size_t> peaks;
    const std::size_t n = x.size();
    if (n < 3) return peaks;
    const std::size_t last = n - 1;
    std::size_t i = 1;
    while (i < last) {
        if (x[i - 1] < x[i]) {
            std::size_t ahead = i + 1;
            while (ahead < last && x[ahead] == x[i]) ++ahead;
            if (x[ahead] < x[i]) {
                peaks.push_back((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        ++i;
    }
    return peaks;
}

bool is_local_maximum(std::span<const double> x, std::size_t index)
{
    const std::size_t n = x.size();
    if (n < 3 || index == 0 || index >= n - 1) return false;
    std::size_t left = index, right = index;
    while (left > 0 && x[left - 1] == x[index]) --left;
    while (right < n - 1 && x[right + 1] == x[index]) ++right;
    if (left == 0 || right == n - 1) return false;
    return x[left - 1] < x[index] && x[right + 1] < x[index] && index == (left + right) / 2;
}

double prominence(const SimilaritySequence& seq, std::size_t peak_index)
{
    auto x = seq.values();
    if (!is_local_maximum(x, peak_index))
        throw std::invalid_argument("index " + std::to_string(peak_index) + " is not a local maximum");
    const double h = x[peak_index];

    double left_min = h;
    for (std::size_t i = peak_index + 1; i-- > 0;) {
        if (x[i] > h) break;
        left_min = std::min(left_min, x[i]);
    }
    double right_min = h;
    for (std::size_t i = peak_index; i < x.size(); ++i) {
        if (x[i] > h) break;
        right_min = std::min(right_min, x[i]);
    }
    return h - std::max(left_min, right_min);
}

namespace {

// O(1) range-minimum queries over a fixed array.
class RangeMin {
public:
    explicit RangeMin(std::span<const double> x)
    {
        const std::size_t n = x.size();
        const std::size_t levels = static_cast<std::size_t>(std::bit_width(n));
        table_.assign(levels, {});
        table_[0].assign(x.begin(), x.end());
        for (std::size_t l = 1; l < levels; ++l) {
            const std::size_t half = std::size_t{1} << (l - 1);
            const std::size_t len = n - (std::size_t{1} << l) + 1;
            table_[l].resize(len);
            for (std::size_t i = 0; i < len; ++i)
                table_[l][i] = std::min(table_[l - 1][i], table_[l - 1][i + half]);
        }
    }

    // minimum over the inclusive range [lo, hi]
    double query(std::size_t lo, std::size_t hi) const
    {
        const std::size_t l = static_cast<std::size_t>(std::bit_width(hi - lo + 1)) - 1;
        return std::min(table_[l][lo], table_[l][hi - (std::size_t{1} << l) + 1]);
    }

private:
    std::vector<std::vector<double>> table_;
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// For each index, the nearest index on the given side holding a strictly larger value.
std::vector<std::size_t> nearest_greater(std::span<const double> x, bool to_left)
{
    const std::size_t n = x.size();
    std::vector<std::size_t> out(n, kNone);
    std::vector<std::size_t> stack;
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t i = to_left ? step : n - 1 - step;
        while (!stack.empty() && x[stack.back()] <= x[i]) stack.pop_back();
        if (!stack.empty()) out[i] = stack.back();
        stack.push_back(i);
    }
    return out;
}

} // namespace

std::vector<Peak> find_peaks(const SimilaritySequence& seq, std::size_t min_distance_samples,
                             double prominence_min)
{
    if (min_distance_samples == 0)
        throw std::invalid_argument("min_distance_samples must be >= 1");
    auto x = seq.values();
    std::vector<std::size_t> candidates = local_maxima(x);
    if (candidates.empty()) return {};

    // distance filter in priority order
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[candidates[a]] > x[candidates[b]];
    });
    std::vector<char> removed(candidates.size(), 0);
    for (std::size_t o : order) {
        if (removed[o]) continue;
        const std::size_t p = candidates[o];
        for (std::size_t j = o; j-- > 0 && p - candidates[j] <= min_distance_samples;)
            removed[j] = 1;
        for (std::size_t j = o + 1; j < candidates.size() && candidates[j] - p <= min_distance_samples; ++j)
            removed[j] = 1;
    }

    const RangeMin range_min(x);
    const auto left_greater = nearest_greater(x, true);
    const auto right_greater = nearest_greater(x, false);

    std::vector<Peak> peaks;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (removed[c]) continue;
        const std::size_t p = candidates[c];
        const std::size_t lo = left_greater[p] == kNone ? 0 : left_greater[p] + 1;
        const std::size_t hi = right_greater[p] == kNone ? x.size() - 1 : right_greater[p] - 1;
        const double base = std::max(range_min.query(lo, p), range_min.query(p, hi));
        const double prom = x[p] - base;
        if (prom >= prominence_min) peaks.push_back({p, x[p], prom});
    }
    return peaks;
}

std::size_t min_distance_samples(double min_distance_s, double fps)
{
    if (!(min_distance_s > 0.0) || !(fps > 0.0))
        throw std::invalid_argument("min distance and fps must be positive");
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(min_distance_s * fps)));
}

} // namespace p2s
