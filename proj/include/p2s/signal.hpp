#pragma once

// 1-D similarity-signal primitives: cosine similarity from embeddings,
// statistics, adaptive smoothing and prominence-filtered peak detection.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace p2s {

enum class Channel { original, sub_a, sub_b };

std::string_view to_string(Channel c);
Channel channel_from_string(std::string_view s);

// One query-to-frame similarity value per frame. Immutable after construction.
class SimilaritySequence {
public:
    SimilaritySequence(std::vector<double> values, double fps,
                       std::string video_id = {}, Channel channel = Channel::original);

    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    double fps() const { return fps_; }
    const std::string& video_id() const { return video_id_; }
    Channel channel() const { return channel_; }

    // Copy of the inclusive index range [first, last].
    SimilaritySequence slice(std::size_t first, std::size_t last) const;
    SimilaritySequence with_values(std::vector<double> values) const;

private:
    std::vector<double> values_;
    double fps_;
    std::string video_id_;
    Channel channel_;
};

struct SignalStats {
    double sigma = 0.0;
    double tau_r = 0.75;
    std::size_t window = 1;
};

struct Peak {
    std::size_t index = 0;
    double height = 0.0;
    double prominence = 0.0;
};

// Row-major T x D embedding matrix view.
struct EmbeddingView {
    std::span<const float> data;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::span<const float> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

SimilaritySequence cosine_similarity_sequence(const EmbeddingView& frames,
                                              std::span<const float> query, double fps,
                                              std::string video_id = {},
                                              Channel channel = Channel::original);

double population_std(const SimilaritySequence& seq);

// 0.5 + 0.5 * logistic(sigma); throws for negative or non-finite sigma.
double adaptive_ratio(double sigma);

// Odd integer nearest to fps * tau_r, at least 1.
std::size_t smoothing_window(double fps, double tau_r);

SignalStats compute_stats(const SimilaritySequence& seq);

// Centered moving average; the window shrinks to the valid indices at the edges.
SimilaritySequence moving_average(const SimilaritySequence& seq, std::size_t window);

// Interior local maxima. Plateaus strictly above both flanks yield their
// floor-midpoint index. Sorted ascending.
std::vector<std::size_t> local_maxima(std::span<const double> x);

bool is_local_maximum(std::span<const double> x, std::size_t index);

// Topographic prominence of an interior local maximum; throws otherwise.
double prominence(const SimilaritySequence& seq, std::size_t peak_index);

// Local maxima, then the distance filter (height-descending, lower index wins
// ties, a kept peak suppresses everything within min_distance_samples), then
// the prominence filter. Sorted by index.
std::vector<Peak> find_peaks(const SimilaritySequence& seq, std::size_t min_distance_samples,
                             double prominence_min);

std::size_t min_distance_samples(double min_distance_s, double fps);

} // namespace p2s
