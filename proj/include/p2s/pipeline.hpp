#pragma once

// End-to-end orchestration: channel loading, per-query span generation and
// refinement in the four ablation modes, evaluation, sweeps and plot data.

#include "p2s/asg.hpp"
#include "p2s/decompose.hpp"
#include "p2s/eval.hpp"
#include "p2s/io.hpp"
#include "p2s/refine.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace p2s {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kPredictionSchemaVersion = 1;

enum class Mode { asg_only, asg_er, asg_ei, full };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct PipelineConfig {
    double fps = 5.0;
    AsgConfig asg;
    RefineConfig refine;
    Mode mode = Mode::full;
    DecomposeBackend decompose_backend = DecomposeBackend::llm;
    EndpointSettings endpoint;
    std::string cache_dir;
    std::size_t parallelism = 1;

    void validate() const;
    // Every field except parallelism and the endpoint credential.
    nlohmann::ordered_json to_json() const;
    std::string fingerprint() const;
};

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});

struct QueryChannels {
    std::optional<SimilaritySequence> raw_o;
    std::optional<SimilaritySequence> raw_a;
    std::optional<SimilaritySequence> raw_b;
};

// Intermediate results of one query, kept for plotting and tests.
struct QueryArtifacts {
    SpanTrace trace_o;
    CandidateSet p_o;
    CandidateSet p_o_reranked;
    CandidateSet p_a;
    CandidateSet p_b;
    RegionSet regions;
    CandidateSet p_inject;
    CandidateSet p_final;
};

// Throws std::invalid_argument when the mode needs a channel that is missing.
QueryArtifacts process_query(const QueryChannels& channels, const PipelineConfig& config);

// Loads every file the manifest references once; read-only afterwards.
class ChannelStore {
public:
    ChannelStore(const Manifest& manifest, const PipelineConfig& config);

    // Per-query channel assembly; throws std::invalid_argument on inconsistent inputs.
    QueryChannels channels_for(const QueryRecord& record) const;

private:
    const Manifest& manifest_;
    double default_fps_;
    std::map<std::string, std::vector<double>> similarities_;
    std::map<std::string, FloatMatrix> matrices_;
};

struct QueryResult {
    std::string query_id;
    std::string video_id;
    std::string error; // empty on success
    std::vector<Candidate> candidates;
    std::optional<QueryTriple> sub_queries;

    bool ok() const { return error.empty(); }
};

struct PredictionDocument {
    int schema_version = kPredictionSchemaVersion;
    std::string tool_version{kToolVersion};
    std::string config_fingerprint;
    nlohmann::ordered_json config;
    std::vector<QueryResult> results;

    nlohmann::ordered_json to_json() const;
    std::string dump() const;
    PredictionMap prediction_map() const;
};

PredictionDocument prediction_document_from_json(const nlohmann::ordered_json& j);

PredictionDocument run(const Manifest& manifest, const PipelineConfig& config);

struct EvaluationResult {
    MetricsReport report;
    std::size_t excluded_without_gt = 0;
};

EvaluationResult evaluate(const PredictionDocument& predictions, const Manifest& manifest,
                          const EvalOptions& options = {});

enum class SweepParameter { prominence, mtd, beta, nms };

std::string_view to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(std::string_view s);
PipelineConfig with_parameter(PipelineConfig config, SweepParameter p, double value);

struct SweepRow {
    double value = 0.0;
    MetricsReport report;
};

struct SweepTable {
    SweepParameter parameter = SweepParameter::beta;
    std::vector<SweepRow> rows;

    nlohmann::ordered_json to_json() const;
    std::string to_table() const;
};

SweepTable sweep(const Manifest& manifest, const PipelineConfig& config, SweepParameter parameter,
                 const std::vector<double>& values);

// CSV with columns time_s, s_o, s_a, s_b, s_smoothed, gt, then tau_expand_<k>
// and span_<k> for every detected peak k on the original channel.
std::string emit_plot_data(const QueryRecord& record, const QueryChannels& channels,
                           const PipelineConfig& config);

// Fills missing sub-queries using the configured backend. Records that
// already carry sub-queries are left untouched.
struct DecomposeStats {
    std::size_t decomposed = 0;
    std::size_t kept = 0;
    std::size_t failed = 0;
    std::vector<std::string> errors;
};

DecomposeStats decompose_manifest(Manifest& manifest, const PipelineConfig& config,
                                  ChatEndpoint* endpoint = nullptr);

} // namespace p2s
