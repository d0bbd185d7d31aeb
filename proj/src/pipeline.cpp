#include "p2s/pipeline.hpp"
#include "p2s/digest.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace p2s {

std::string_view to_string(Mode m)
{
    switch (m) {
    case Mode::asg_only: return "asg_only";
    case Mode::asg_er: return "asg_er";
    case Mode::asg_ei: return "asg_ei";
    case Mode::full: return "full";
    }
    return "full";
}

Mode mode_from_string(std::string_view s)
{
    if (s == "asg_only") return Mode::asg_only;
    if (s == "asg_er") return Mode::asg_er;
    if (s == "asg_ei") return Mode::asg_ei;
    if (s == "full") return Mode::full;
    throw std::invalid_argument("unknown mode: " + std::string(s));
}

void PipelineConfig::validate() const
{
    if (!(fps > 0.0)) throw std::invalid_argument("fps must be positive");
    asg.validate();
    refine.validate();
    if (parallelism == 0) throw std::invalid_argument("parallelism must be >= 1");
}

nlohmann::ordered_json PipelineConfig::to_json() const
{
    return {
        {"fps", fps},
        {"mode", to_string(mode)},
        {"asg",
         {{"prominence_min", asg.prominence_min},
          {"min_distance_s", asg.min_distance_s},
          {"normalization", asg.normalization}}},
        {"refine",
         {{"beta", refine.beta},
          {"nms_tiou", refine.nms_tiou},
          {"top_k", refine.top_k},
          {"inject_apply_beta", refine.inject_apply_beta}}},
        {"decompose",
         {{"backend", to_string(decompose_backend)},
          {"base_url", endpoint.base_url},
          {"model", endpoint.model},
          {"timeout_s", endpoint.timeout_s},
          {"max_in_flight", endpoint.max_in_flight},
          {"cache_dir", cache_dir}}},
    };
}

std::string PipelineConfig::fingerprint() const
{
    return sha256_hex(to_json().dump()).substr(0, 16);
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c)
{
    c.fps = j.value("fps", c.fps);
    if (j.contains("mode")) c.mode = mode_from_string(j["mode"].get<std::string>());
    if (j.contains("asg")) {
        const auto& a = j["asg"];
        c.asg.prominence_min = a.value("prominence_min", c.asg.prominence_min);
        c.asg.min_distance_s = a.value("min_distance_s", c.asg.min_distance_s);
        c.asg.normalization = a.value("normalization", c.asg.normalization);
    }
    if (j.contains("refine")) {
        const auto& r = j["refine"];
        c.refine.beta = r.value("beta", c.refine.beta);
        c.refine.nms_tiou = r.value("nms_tiou", c.refine.nms_tiou);
        c.refine.top_k = r.value("top_k", c.refine.top_k);
        c.refine.inject_apply_beta = r.value("inject_apply_beta", c.refine.inject_apply_beta);
    }
    if (j.contains("decompose")) {
        const auto& d = j["decompose"];
        if (d.contains("backend")) c.decompose_backend = decompose_backend_from_string(d["backend"].get<std::string>());
        c.endpoint.base_url = d.value("base_url", c.endpoint.base_url);
        c.endpoint.model = d.value("model", c.endpoint.model);
        c.endpoint.timeout_s = d.value("timeout_s", c.endpoint.timeout_s);
        c.endpoint.max_in_flight = d.value("max_in_flight", c.endpoint.max_in_flight);
        c.cache_dir = d.value("cache_dir", c.cache_dir);
    }
    if (j.contains("parallelism")) c.parallelism = j["parallelism"].get<std::size_t>();
    c.validate();
    return c;
}

namespace {

bool needs_evidence(Mode m) { return m != Mode::asg_only; }
bool needs_injection(Mode m) { return m == Mode::asg_ei || m == Mode::full; }
bool needs_rerank(Mode m) { return m == Mode::asg_er || m == Mode::full; }

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
}

} // namespace

QueryArtifacts process_query(const QueryChannels& in, const PipelineConfig& config)
{
    if (!in.raw_o) throw std::invalid_argument("missing original similarity channel");
    if (needs_evidence(config.mode) && (!in.raw_a || !in.raw_b))
        throw std::invalid_argument("mode " + std::string(to_string(config.mode)) +
                                    " needs sub-query channels sub_a and sub_b");

    auto prepare = [&](const std::optional<SimilaritySequence>& s) -> std::optional<SimilaritySequence> {
        if (!s || !config.asg.normalization) return s;
        return min_max_normalize(*s);
    };
    const auto raw_o = prepare(in.raw_o);
    const auto raw_a = prepare(in.raw_a);
    const auto raw_b = prepare(in.raw_b);
    if (raw_a && raw_a->size() != raw_o->size())
        throw std::invalid_argument("sub_a channel length differs from the original channel");
    if (raw_b && raw_b->size() != raw_o->size())
        throw std::invalid_argument("sub_b channel length differs from the original channel");

    QueryArtifacts art;
    art.trace_o = trace_spans(*raw_o, config.asg);
    art.p_o = build_candidates(art.trace_o, raw_o->fps(), SetChannel::original);

    CandidateSet pool = art.p_o;
    if (needs_rerank(config.mode)) {
        art.p_o_reranked = rerank(art.p_o, *raw_a, *raw_b, config.refine.beta);
        pool = art.p_o_reranked;
    }
    if (needs_injection(config.mode)) {
        art.p_a = generate_spans(*raw_a, config.asg);
        art.p_b = generate_spans(*raw_b, config.asg);
        art.regions = union_regions(art.p_a, art.p_b);
        art.p_inject = inject(*raw_o, art.regions, art.p_o.signal_stats, config.asg, *raw_a, *raw_b,
                              {config.refine.beta, config.refine.inject_apply_beta});
        pool = concat(pool, art.p_inject, SetChannel::final);
    }
    art.p_final = nms(pool, config.refine.nms_tiou, config.refine.top_k);
    return art;
}

ChannelStore::ChannelStore(const Manifest& manifest, const PipelineConfig& config)
    : manifest_(manifest), default_fps_(config.fps)
{
    auto load_sim = [&](const std::string& p) {
        if (p.empty() || similarities_.count(p)) return;
        similarities_.emplace(p, read_similarity_values(manifest_.resolve(p)));
    };
    auto load_mat = [&](const std::string& p) {
        if (p.empty() || matrices_.count(p)) return;
        matrices_.emplace(p, read_matrix(manifest_.resolve(p)));
    };
    for (const QueryRecord& q : manifest_.queries) {
        if (const auto* s = std::get_if<SimilaritySource>(&q.source)) {
            load_sim(s->original);
            load_sim(s->sub_a);
            load_sim(s->sub_b);
        } else {
            const auto& e = std::get<EmbeddingSource>(q.source);
            load_mat(e.frames);
            load_mat(e.query);
            load_mat(e.sub_a);
            load_mat(e.sub_b);
        }
    }
}

QueryChannels ChannelStore::channels_for(const QueryRecord& q) const
{
    const double fps = q.fps.value_or(default_fps_);
    QueryChannels out;
    if (const auto* s = std::get_if<SimilaritySource>(&q.source)) {
        auto make = [&](const std::string& p, Channel c) -> std::optional<SimilaritySequence> {
            if (p.empty()) return std::nullopt;
            return SimilaritySequence(similarities_.at(p), fps, q.video_id, c);
        };
        out.raw_o = make(s->original, Channel::original);
        out.raw_a = make(s->sub_a, Channel::sub_a);
        out.raw_b = make(s->sub_b, Channel::sub_b);
    } else {
        const auto& e = std::get<EmbeddingSource>(q.source);
        const FloatMatrix& frames = matrices_.at(e.frames);
        auto make = [&](const std::string& p, Channel c) -> std::optional<SimilaritySequence> {
            if (p.empty()) return std::nullopt;
            const FloatMatrix& query = matrices_.at(p);
            if (query.rows != 1)
                throw std::invalid_argument("query embedding " + p + " must hold exactly one row");
            return cosine_similarity_sequence(frames.view(), query.data, fps, q.video_id, c);
        };
        out.raw_o = make(e.query, Channel::original);
        out.raw_a = make(e.sub_a, Channel::sub_a);
        out.raw_b = make(e.sub_b, Channel::sub_b);
    }
    return out;
}

nlohmann::ordered_json PredictionDocument::to_json() const
{
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["tool_version"] = tool_version;
    j["config_fingerprint"] = config_fingerprint;
    j["config"] = config;
    auto& arr = j["results"] = nlohmann::ordered_json::array();
    for (const QueryResult& r : results) {
        nlohmann::ordered_json q;
        q["query_id"] = r.query_id;
        q["video_id"] = r.video_id;
        q["status"] = r.ok() ? "ok" : "error";
        if (!r.ok()) q["error"] = r.error;
        if (r.sub_queries)
            q["sub_queries"] = {{"q_a", r.sub_queries->sub_a},
                                {"q_b", r.sub_queries->sub_b},
                                {"backend", to_string(r.sub_queries->backend)}};
        auto& preds = q["predictions"] = nlohmann::ordered_json::array();
        for (const Candidate& c : r.candidates)
            preds.push_back({{"start_s", c.start_s},
                             {"end_s", c.end_s},
                             {"final_score", c.final_score},
                             {"base_score", c.base_score},
                             {"bonus_score", c.bonus_score},
                             {"provenance", to_string(c.provenance)}});
        arr.push_back(std::move(q));
    }
    return j;
}

std::string PredictionDocument::dump() const
{
    return to_json().dump(2) + "\n";
}

PredictionMap PredictionDocument::prediction_map() const
{
    PredictionMap out;
    for (const QueryResult& r : results) {
        auto& spans = out[r.query_id];
        for (const Candidate& c : r.candidates) spans.push_back(time_span(c));
    }
    return out;
}

PredictionDocument prediction_document_from_json(const nlohmann::ordered_json& j)
{
    PredictionDocument doc;
    try {
        doc.schema_version = j.at("schema_version").get<int>();
        if (doc.schema_version != kPredictionSchemaVersion)
            throw FormatError("unsupported prediction schema_version " + std::to_string(doc.schema_version));
        doc.tool_version = j.value("tool_version", "");
        doc.config_fingerprint = j.value("config_fingerprint", "");
        if (j.contains("config")) doc.config = j["config"];
        for (const auto& q : j.at("results")) {
            QueryResult r;
            r.query_id = q.at("query_id").get<std::string>();
            r.video_id = q.value("video_id", "");
            if (q.value("status", "ok") != "ok") r.error = q.value("error", "error");
            if (q.contains("sub_queries")) {
                const auto& s = q["sub_queries"];
                r.sub_queries = QueryTriple{"", s.value("q_a", ""), s.value("q_b", ""),
                                            decompose_backend_from_string(s.value("backend", "provided"))};
            }
            for (const auto& p : q.value("predictions", nlohmann::ordered_json::array())) {
                Candidate c;
                c.start_s = p.at("start_s").get<double>();
                c.end_s = p.at("end_s").get<double>();
                c.final_score = p.value("final_score", 0.0);
                c.base_score = p.value("base_score", 0.0);
                c.bonus_score = p.value("bonus_score", 0.0);
                c.provenance = provenance_from_string(p.value("provenance", "original"));
                r.candidates.push_back(c);
            }
            doc.results.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed prediction document: " + std::string(e.what()));
    }
    return doc;
}

PredictionDocument run(const Manifest& manifest, const PipelineConfig& config)
{
    config.validate();
    const ChannelStore store(manifest, config);

    PredictionDocument doc;
    doc.config = config.to_json();
    doc.config_fingerprint = config.fingerprint();
    doc.results.resize(manifest.queries.size());

    parallel_for(manifest.queries.size(), config.parallelism, [&](std::size_t i) {
        const QueryRecord& q = manifest.queries[i];
        QueryResult& r = doc.results[i];
        r.query_id = q.query_id;
        r.video_id = q.video_id;
        r.sub_queries = q.sub_queries;
        try {
            const QueryArtifacts art = process_query(store.channels_for(q), config);
            r.candidates = art.p_final.candidates;
        } catch (const std::exception& e) {
            r.error = e.what();
            r.candidates.clear();
        }
    });
    return doc;
}

EvaluationResult evaluate(const PredictionDocument& predictions, const Manifest& manifest,
                          const EvalOptions& options)
{
    EvaluationResult out;
    std::vector<GroundTruth> gts = manifest.ground_truths();
    PredictionMap preds;
    for (const QueryResult& r : predictions.results) {
        const bool has_gt = std::any_of(gts.begin(), gts.end(),
                                        [&](const GroundTruth& g) { return g.query_id == r.query_id; });
        if (!has_gt) {
            ++out.excluded_without_gt;
            continue;
        }
        auto& spans = preds[r.query_id];
        for (const Candidate& c : r.candidates) spans.push_back(time_span(c));
    }
    out.report = metrics_report(preds, gts, {1, 5}, {0.1, 0.3, 0.5}, options);
    return out;
}

std::string_view to_string(SweepParameter p)
{
    switch (p) {
    case SweepParameter::prominence: return "prominence";
    case SweepParameter::mtd: return "mtd";
    case SweepParameter::beta: return "beta";
    case SweepParameter::nms: return "nms";
    }
    return "beta";
}

SweepParameter sweep_parameter_from_string(std::string_view s)
{
    if (s == "prominence" || s == "pm") return SweepParameter::prominence;
    if (s == "mtd") return SweepParameter::mtd;
    if (s == "beta") return SweepParameter::beta;
    if (s == "nms") return SweepParameter::nms;
    throw std::invalid_argument("unknown sweep parameter: " + std::string(s));
}

PipelineConfig with_parameter(PipelineConfig config, SweepParameter p, double value)
{
    switch (p) {
    case SweepParameter::prominence: config.asg.prominence_min = value; break;
    case SweepParameter::mtd: config.asg.min_distance_s = value; break;
    case SweepParameter::beta: config.refine.beta = value; break;
    case SweepParameter::nms: config.refine.nms_tiou = value; break;
    }
    config.validate();
    return config;
}

SweepTable sweep(const Manifest& manifest, const PipelineConfig& config, SweepParameter parameter,
                 const std::vector<double>& values)
{
    if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
    SweepTable table;
    table.parameter = parameter;
    for (double v : values) {
        const PipelineConfig c = with_parameter(config, parameter, v);
        table.rows.push_back({v, evaluate(run(manifest, c), manifest).report});
    }
    return table;
}

nlohmann::ordered_json SweepTable::to_json() const
{
    nlohmann::ordered_json j;
    j["parameter"] = to_string(parameter);
    auto& rows_json = j["rows"] = nlohmann::ordered_json::array();
    for (const SweepRow& r : rows) {
        auto row = r.report.to_json();
        rows_json.push_back({{"value", r.value}, {"metrics", row}});
    }
    return j;
}

std::string SweepTable::to_table() const
{
    std::ostringstream os;
    if (rows.empty()) return {};
    os << rows.front().report.table_header(std::string(to_string(parameter))) << '\n';
    for (const SweepRow& r : rows) {
        char label[32];
        std::snprintf(label, sizeof label, "%g", r.value);
        os << r.report.to_table(label) << '\n';
    }
    return os.str();
}

std::string emit_plot_data(const QueryRecord& record, const QueryChannels& channels,
                           const PipelineConfig& config)
{
    if (!channels.raw_o) throw std::invalid_argument("plot data needs the original channel");
    const SimilaritySequence raw_o =
        config.asg.normalization ? min_max_normalize(*channels.raw_o) : *channels.raw_o;
    const SpanTrace trace = trace_spans(raw_o, config.asg);
    const double fps = raw_o.fps();
    const std::size_t n = raw_o.size();

    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto prepared = [&](const std::optional<SimilaritySequence>& s) -> std::optional<SimilaritySequence> {
        if (!s || !config.asg.normalization) return s;
        return min_max_normalize(*s);
    };
    const auto raw_a = prepared(channels.raw_a);
    const auto raw_b = prepared(channels.raw_b);
    auto cell = [&](const std::optional<SimilaritySequence>& s, std::size_t i) {
        return s && i < s->size() ? num((*s)[i]) : std::string{};
    };

    std::ostringstream os;
    os << "time_s,s_o,s_a,s_b,s_smoothed,gt";
    for (const Peak& p : trace.peaks) os << ",tau_expand_" << p.index << ",span_" << p.index;
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fps;
        const double center = (static_cast<double>(i) + 0.5) / fps;
        bool in_gt = false;
        for (const TimeSpan& g : record.ground_truth) in_gt = in_gt || (center >= g.start_s && center <= g.end_s);

        os << num(t) << ',' << num(raw_o[i]) << ',';
        os << cell(raw_a, i) << ',' << cell(raw_b, i) << ',';
        os << num(trace.smoothed[i]) << ',' << (in_gt ? 1 : 0);
        for (std::size_t k = 0; k < trace.peaks.size(); ++k) {
            os << ',' << num(trace.peaks[k].height * trace.stats.tau_r) << ','
               << (trace.peak_spans[k].contains(i) ? 1 : 0);
        }
        os << '\n';
    }
    return os.str();
}

DecomposeStats decompose_manifest(Manifest& manifest, const PipelineConfig& config, ChatEndpoint* endpoint)
{
    DecomposeStats stats;
    std::unique_ptr<HttpChatEndpoint> owned;
    std::optional<DecomposeCache> cache;
    if (config.decompose_backend == DecomposeBackend::llm) {
        if (!endpoint) {
            EndpointSettings settings = config.endpoint;
            settings.apply_environment();
            owned = std::make_unique<HttpChatEndpoint>(settings);
            endpoint = owned.get();
        }
        cache.emplace(config.cache_dir);
    }

    std::vector<std::string> errors(manifest.queries.size());
    std::vector<char> touched(manifest.queries.size(), 0);
    parallel_for(manifest.queries.size(), config.parallelism, [&](std::size_t i) {
        QueryRecord& q = manifest.queries[i];
        if (q.sub_queries) return;
        touched[i] = 1;
        try {
            switch (config.decompose_backend) {
            case DecomposeBackend::naive: q.sub_queries = naive_split(q.query_text); break;
            case DecomposeBackend::rule: q.sub_queries = rule_split(q.query_text); break;
            case DecomposeBackend::llm: q.sub_queries = llm_decompose(q.query_text, *endpoint, *cache); break;
            case DecomposeBackend::provided:
                throw std::invalid_argument("no sub-queries provided in the manifest");
            }
        } catch (const std::exception& e) {
            errors[i] = q.query_id + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < manifest.queries.size(); ++i) {
        if (!touched[i])
            ++stats.kept;
        else if (errors[i].empty())
            ++stats.decomposed;
        else {
            ++stats.failed;
            stats.errors.push_back(errors[i]);
        }
    }
    return stats;
}

} // namespace p2s
