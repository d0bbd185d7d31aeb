// p2s: command-line front end for span retrieval over similarity sequences.

#include "p2s/decompose.hpp"
#include "p2s/io.hpp"
#include "p2s/pipeline.hpp"
#include "p2s/synthbench.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct ConfigFlags {
    std::string config_file;
    std::optional<double> fps;
    std::optional<std::string> mode;
    std::optional<double> prominence;
    std::optional<double> mtd;
    std::optional<double> beta;
    std::optional<double> nms;
    std::optional<std::size_t> top_k;
    std::optional<std::size_t> parallelism;
    bool normalize = false;
    bool inject_unweighted = false;
    std::optional<std::string> backend;
    std::optional<std::string> base_url;
    std::optional<std::string> model;
    std::optional<double> timeout;
    std::optional<std::size_t> max_in_flight;
    std::optional<std::string> cache_dir;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f)
{
    cmd->add_option("--config", f.config_file, "JSON config file (flags override it)")->check(CLI::ExistingFile);
    cmd->add_option("--fps", f.fps, "Frame rate when the manifest gives none");
    cmd->add_option("--mode", f.mode, "asg_only | asg_er | asg_ei | full");
    cmd->add_option("--pm,--prominence", f.prominence, "Peak prominence threshold");
    cmd->add_option("--mtd", f.mtd, "Minimum peak distance in seconds");
    cmd->add_option("--beta", f.beta, "Evidence bonus weight");
    cmd->add_option("--nms", f.nms, "NMS tIoU threshold");
    cmd->add_option("--top-k", f.top_k, "Predictions kept per query");
    cmd->add_option("-j,--parallelism", f.parallelism, "Concurrent queries");
    cmd->add_flag("--normalize", f.normalize, "Min-max normalize every channel before span generation");
    cmd->add_flag("--inject-unweighted", f.inject_unweighted, "Score injected spans as base + bonus");
    cmd->add_option("--backend", f.backend, "Decomposition backend: naive | rule | llm | provided");
    cmd->add_option("--base-url", f.base_url, "Chat-completion base URL (default $P2S_LLM_BASE_URL)");
    cmd->add_option("--model", f.model, "Model name (default $P2S_LLM_MODEL)");
    cmd->add_option("--timeout", f.timeout, "Endpoint timeout in seconds");
    cmd->add_option("--max-in-flight", f.max_in_flight, "Concurrent endpoint requests");
    cmd->add_option("--cache-dir", f.cache_dir, "Decomposition cache directory");
}

p2s::PipelineConfig build_config(const ConfigFlags& f)
{
    p2s::PipelineConfig c;
    if (!f.config_file.empty())
        c = p2s::config_from_json(nlohmann::json::parse(p2s::read_text_file(f.config_file)));
    if (f.fps) c.fps = *f.fps;
    if (f.mode) c.mode = p2s::mode_from_string(*f.mode);
    if (f.prominence) c.asg.prominence_min = *f.prominence;
    if (f.mtd) c.asg.min_distance_s = *f.mtd;
    if (f.beta) c.refine.beta = *f.beta;
    if (f.nms) c.refine.nms_tiou = *f.nms;
    if (f.top_k) c.refine.top_k = *f.top_k;
    if (f.parallelism) c.parallelism = *f.parallelism;
    if (f.normalize) c.asg.normalization = true;
    if (f.inject_unweighted) c.refine.inject_apply_beta = false;
    if (f.backend) c.decompose_backend = p2s::decompose_backend_from_string(*f.backend);
    if (f.base_url) c.endpoint.base_url = *f.base_url;
    if (f.model) c.endpoint.model = *f.model;
    if (f.timeout) c.endpoint.timeout_s = *f.timeout;
    if (f.max_in_flight) c.endpoint.max_in_flight = *f.max_in_flight;
    if (f.cache_dir) c.cache_dir = *f.cache_dir;
    c.endpoint.apply_environment();
    c.validate();
    return c;
}

void write_or_print(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-")
        std::cout << text;
    else
        p2s::write_text_file(path, text);
}

std::vector<double> parse_values(const std::string& csv)
{
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const auto comma = csv.find(',', pos);
        const std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!item.empty()) out.push_back(std::stod(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Training-free moment retrieval over per-frame similarity sequences"};
    app.require_subcommand(1);

    // run
    ConfigFlags run_flags;
    std::string run_manifest, run_out;
    auto* run_cmd = app.add_subcommand("run", "Generate, refine and rank spans for every query");
    run_cmd->add_option("-m,--manifest", run_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("-o,--out", run_out, "Prediction document (default stdout)");
    add_config_flags(run_cmd, run_flags);

    // eval
    std::string eval_manifest, eval_predictions, eval_out;
    bool eval_multi_gt = false;
    auto* eval_cmd = app.add_subcommand("eval", "Recall R@N,tIoU=K of a prediction document");
    eval_cmd->add_option("-m,--manifest", eval_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("-p,--predictions", eval_predictions, "Prediction document")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("-o,--out", eval_out, "Write the metrics report JSON here");
    eval_cmd->add_flag("--multi-gt", eval_multi_gt, "Hit when any ground-truth span matches");

    // decompose
    ConfigFlags dec_flags;
    std::string dec_manifest, dec_out, dec_query;
    auto* dec_cmd = app.add_subcommand("decompose", "Split queries into start/end sub-queries");
    dec_cmd->add_option("-m,--manifest", dec_manifest, "Manifest to complete with sub-queries");
    dec_cmd->add_option("-q,--query", dec_query, "Decompose a single query and print it");
    dec_cmd->add_option("-o,--out", dec_out, "Output manifest (default stdout)");
    add_config_flags(dec_cmd, dec_flags);

    // synth
    std::string synth_dir, synth_preset = "clean";
    std::size_t synth_cases = 100;
    std::uint64_t synth_seed = 1;
    auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic benchmark suite");
    synth_cmd->add_option("-o,--out-dir", synth_dir, "Output directory")->required();
    synth_cmd->add_option("-n,--cases", synth_cases, "Number of cases");
    synth_cmd->add_option("-s,--seed", synth_seed, "Suite seed");
    synth_cmd->add_option("--preset", synth_preset, "clean | noisy | saturation")
        ->check(CLI::IsMember({"clean", "noisy", "saturation"}));

    // sweep
    ConfigFlags sweep_flags;
    std::string sweep_manifest, sweep_param, sweep_values, sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run and evaluate once per parameter value");
    sweep_cmd->add_option("-m,--manifest", sweep_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--param", sweep_param, "prominence | mtd | beta | nms")->required();
    sweep_cmd->add_option("--values", sweep_values, "Comma-separated values")->required();
    sweep_cmd->add_option("-o,--out", sweep_out, "Write the sweep table JSON here");
    add_config_flags(sweep_cmd, sweep_flags);

    // plotdata
    ConfigFlags plot_flags;
    std::string plot_manifest, plot_query, plot_out;
    auto* plot_cmd = app.add_subcommand("plotdata", "Dump signals, thresholds and spans of one query as CSV");
    plot_cmd->add_option("-m,--manifest", plot_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    plot_cmd->add_option("-q,--query-id", plot_query, "Query id")->required();
    plot_cmd->add_option("-o,--out", plot_out, "CSV path (default stdout)");
    add_config_flags(plot_cmd, plot_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto config = build_config(run_flags);
            const auto manifest = p2s::load_manifest(run_manifest);
            const auto doc = p2s::run(manifest, config);
            std::size_t failed = 0;
            for (const auto& r : doc.results) {
                if (!r.ok()) {
                    ++failed;
                    std::cerr << "warning: " << r.query_id << ": " << r.error << '\n';
                }
            }
            write_or_print(run_out, doc.dump());
            if (failed) std::cerr << failed << " of " << doc.results.size() << " queries failed\n";
        } else if (*eval_cmd) {
            const auto manifest = p2s::load_manifest(eval_manifest);
            const auto doc = p2s::prediction_document_from_json(
                nlohmann::ordered_json::parse(p2s::read_text_file(eval_predictions)));
            const auto result = p2s::evaluate(doc, manifest, {eval_multi_gt});
            if (result.excluded_without_gt)
                std::cerr << "warning: " << result.excluded_without_gt << " queries without ground truth excluded\n";
            std::cout << result.report.table_header() << '\n' << result.report.to_table() << '\n';
            if (!eval_out.empty()) p2s::write_text_file(eval_out, result.report.to_json().dump(2) + "\n");
        } else if (*dec_cmd) {
            auto config = build_config(dec_flags);
            if (!dec_query.empty()) {
                p2s::QueryTriple t;
                switch (config.decompose_backend) {
                case p2s::DecomposeBackend::naive: t = p2s::naive_split(dec_query); break;
                case p2s::DecomposeBackend::rule: t = p2s::rule_split(dec_query); break;
                case p2s::DecomposeBackend::llm: {
                    p2s::HttpChatEndpoint endpoint(config.endpoint);
                    p2s::DecomposeCache cache(config.cache_dir);
                    t = p2s::llm_decompose(dec_query, endpoint, cache);
                    break;
                }
                case p2s::DecomposeBackend::provided:
                    throw std::invalid_argument("backend 'provided' needs a manifest");
                }
                std::cout << "Q_a: " << t.sub_a << "\nQ_b: " << t.sub_b << "\nbackend: " << p2s::to_string(t.backend)
                          << '\n';
            } else if (!dec_manifest.empty()) {
                auto manifest = p2s::load_manifest(dec_manifest);
                const auto stats = p2s::decompose_manifest(manifest, config);
                for (const auto& e : stats.errors) std::cerr << "warning: " << e << '\n';
                std::cerr << stats.decomposed << " decomposed, " << stats.kept << " kept, " << stats.failed
                          << " failed\n";
                write_or_print(dec_out, p2s::manifest_to_json(manifest).dump(2) + "\n");
            } else {
                throw std::invalid_argument("decompose needs --manifest or --query");
            }
        } else if (*synth_cmd) {
            p2s::SuiteRanges ranges = synth_preset == "saturation" ? p2s::SuiteRanges::saturation()
                                      : synth_preset == "noisy"    ? p2s::SuiteRanges::noisy()
                                                                   : p2s::SuiteRanges::clean();
            const auto suite = p2s::generate_suite(synth_cases, ranges, synth_seed);
            std::cout << p2s::write_suite(suite, synth_dir).string() << '\n';
        } else if (*sweep_cmd) {
            const auto config = build_config(sweep_flags);
            const auto manifest = p2s::load_manifest(sweep_manifest);
            const auto table = p2s::sweep(manifest, config, p2s::sweep_parameter_from_string(sweep_param),
                                          parse_values(sweep_values));
            std::cout << table.to_table();
            if (!sweep_out.empty()) p2s::write_text_file(sweep_out, table.to_json().dump(2) + "\n");
        } else if (*plot_cmd) {
            const auto config = build_config(plot_flags);
            const auto manifest = p2s::load_manifest(plot_manifest);
            const auto& record = manifest.find(plot_query);
            const p2s::ChannelStore store(manifest, config);
            write_or_print(plot_out, p2s::emit_plot_data(record, store.channels_for(record), config));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
