#pragma once

// R@N,tIoU=K recall metrics.

#include "p2s/refine.hpp"

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace p2s {

struct GroundTruth {
    std::string query_id;
    std::vector<TimeSpan> spans; // first span is the primary moment
};

// Ordered predictions per query id.
using PredictionMap = std::map<std::string, std::vector<TimeSpan>>;

struct EvalOptions {
    // Count a hit when any ground-truth span matches, not only the first.
    bool multi_gt = false;
};

struct MetricsCell {
    int n = 1;
    double k = 0.5;
    double recall = 0.0;
    std::size_t hits = 0;
};

struct MetricsReport {
    std::vector<MetricsCell> cells; // Ns outer, Ks inner
    double average = 0.0;
    std::size_t num_queries = 0;

    const MetricsCell& cell(int n, double k) const;
    nlohmann::ordered_json to_json() const;
    // Aligned text table: R1@.1 R1@.3 R1@.5 R5@.1 ... Avg.
    std::string to_table(const std::string& row_label = {}) const;
    std::string table_header(const std::string& label_header = {}) const;
};

// Queries without a prediction list count as misses. A prediction list for
// an id absent from the ground truth throws.
double recall_at(const PredictionMap& predictions, const std::vector<GroundTruth>& gts, int n,
                 double k, const EvalOptions& options = {});

MetricsReport metrics_report(const PredictionMap& predictions, const std::vector<GroundTruth>& gts,
                             const std::vector<int>& ns = {1, 5},
                             const std::vector<double>& ks = {0.1, 0.3, 0.5},
                             const EvalOptions& options = {});

std::string cell_label(int n, double k);

} // namespace p2s
