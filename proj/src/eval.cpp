#include "p2s/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace p2s {

namespace {

bool is_hit(const std::vector<TimeSpan>& preds, const GroundTruth& gt, int n, double k,
            const EvalOptions& options)
{
    if (gt.spans.empty()) return false;
    const std::size_t gt_count = options.multi_gt ? gt.spans.size() : 1;
    const std::size_t limit = std::min(preds.size(), static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < limit; ++i) {
        for (std::size_t g = 0; g < gt_count; ++g) {
            if (tiou(preds[i], gt.spans[g]) >= k) return true;
        }
    }
    return false;
}

void check_ids(const PredictionMap& predictions, const std::vector<GroundTruth>& gts)
{
    for (const auto& [id, preds] : predictions) {
        const bool known = std::any_of(gts.begin(), gts.end(),
                                       [&](const GroundTruth& g) { return g.query_id == id; });
        if (!known) throw std::invalid_argument("prediction for unknown query id: " + id);
    }
}

std::size_t count_hits(const PredictionMap& predictions, const std::vector<GroundTruth>& gts,
                       int n, double k, const EvalOptions& options)
{
    if (n < 1) throw std::invalid_argument("N must be >= 1");
    if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("K must lie in (0, 1]");
    static const std::vector<TimeSpan> kEmpty;
    std::size_t hits = 0;
    for (const GroundTruth& gt : gts) {
        auto it = predictions.find(gt.query_id);
        if (is_hit(it == predictions.end() ? kEmpty : it->second, gt, n, k, options)) ++hits;
    }
    return hits;
}

} // namespace

double recall_at(const PredictionMap& predictions, const std::vector<GroundTruth>& gts, int n,
                 double k, const EvalOptions& options)
{
    check_ids(predictions, gts);
    const std::size_t hits = count_hits(predictions, gts, n, k, options);
    return gts.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gts.size());
}

MetricsReport metrics_report(const PredictionMap& predictions, const std::vector<GroundTruth>& gts,
                             const std::vector<int>& ns, const std::vector<double>& ks,
                             const EvalOptions& options)
{
    check_ids(predictions, gts);
    MetricsReport report;
    report.num_queries = gts.size();
    double sum = 0.0;
    for (int n : ns) {
        for (double k : ks) {
            MetricsCell cell{n, k, 0.0, count_hits(predictions, gts, n, k, options)};
            if (!gts.empty())
                cell.recall = static_cast<double>(cell.hits) / static_cast<double>(gts.size());
            sum += cell.recall;
            report.cells.push_back(cell);
        }
    }
    if (!report.cells.empty()) report.average = sum / static_cast<double>(report.cells.size());
    return report;
}

std::string cell_label(int n, double k)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", k);
    std::string ks = buf;
    while (ks.size() > 1 && ks.back() == '0') ks.pop_back();
    if (ks.back() == '.') ks.pop_back();
    if (ks.rfind("0.", 0) == 0) ks.erase(0, 1);
    return "R" + std::to_string(n) + "@" + ks;
}

const MetricsCell& MetricsReport::cell(int n, double k) const
{
    for (const MetricsCell& c : cells) {
        if (c.n == n && std::abs(c.k - k) < 1e-12) return c;
    }
    throw std::out_of_range("no metrics cell " + cell_label(n, k));
}

nlohmann::ordered_json MetricsReport::to_json() const
{
    nlohmann::ordered_json j;
    j["num_queries"] = num_queries;
    auto& arr = j["cells"] = nlohmann::ordered_json::array();
    for (const MetricsCell& c : cells)
        arr.push_back({{"label", cell_label(c.n, c.k)}, {"n", c.n}, {"k", c.k}, {"hits", c.hits},
                       {"recall", c.recall}});
    j["average"] = average;
    return j;
}

std::string MetricsReport::table_header(const std::string& label_header) const
{
    std::ostringstream os;
    char buf[32];
    if (!label_header.empty()) {
        std::snprintf(buf, sizeof buf, "%-12s", label_header.c_str());
        os << buf;
    }
    for (const MetricsCell& c : cells) {
        std::snprintf(buf, sizeof buf, "%9s", cell_label(c.n, c.k).c_str());
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%9s", "Avg.");
    os << buf;
    return os.str();
}

std::string MetricsReport::to_table(const std::string& row_label) const
{
    std::ostringstream os;
    char buf[32];
    if (!row_label.empty()) {
        std::snprintf(buf, sizeof buf, "%-12s", row_label.c_str());
        os << buf;
    }
    for (const MetricsCell& c : cells) {
        std::snprintf(buf, sizeof buf, "%9.2f", c.recall * 100.0);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "%9.2f", average * 100.0);
    os << buf;
    return os.str();
}

} // namespace p2s
