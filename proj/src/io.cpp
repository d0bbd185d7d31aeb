#include "p2s/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace p2s {

namespace {

constexpr std::array<char, 4> kMagic = {'P', '2', 'S', 'F'};

std::uint32_t load_u32(const unsigned char* p)
{
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

void store_u32(unsigned char* p, std::uint32_t v)
{
    p[0] = static_cast<unsigned char>(v);
    p[1] = static_cast<unsigned char>(v >> 8);
    p[2] = static_cast<unsigned char>(v >> 16);
    p[3] = static_cast<unsigned char>(v >> 24);
}

std::string read_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw FormatError("cannot read " + path.string());
    return std::move(ss).str();
}

bool has_magic(const std::string& bytes)
{
    return bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic.data(), 4) == 0;
}

FloatMatrix parse_p2sf(const std::string& bytes, const std::filesystem::path& path)
{
    if (bytes.size() < 16) throw FormatError(path.string() + ": truncated P2SF header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = load_u32(p + 4);
    if (version != kP2sfVersion)
        throw FormatError(path.string() + ": unsupported P2SF version " + std::to_string(version));
    FloatMatrix m;
    m.rows = load_u32(p + 8);
    m.cols = load_u32(p + 12);
    const std::size_t count = m.rows * m.cols;
    if (bytes.size() != 16 + count * 4)
        throw FormatError(path.string() + ": expected " + std::to_string(16 + count * 4) + " bytes for " +
                          std::to_string(m.rows) + "x" + std::to_string(m.cols) + ", found " +
                          std::to_string(bytes.size()));
    m.data.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        m.data[i] = std::bit_cast<float>(load_u32(p + 16 + 4 * i));
    return m;
}

} // namespace

FloatMatrix read_matrix(const std::filesystem::path& path)
{
    const std::string bytes = read_bytes(path);
    if (!has_magic(bytes)) throw FormatError(path.string() + ": missing P2SF magic");
    return parse_p2sf(bytes, path);
}

void write_matrix(const std::filesystem::path& path, const FloatMatrix& m)
{
    if (m.data.size() != m.rows * m.cols) throw FormatError("matrix storage does not match its shape");
    std::string bytes(16 + m.data.size() * 4, '\0');
    auto* p = reinterpret_cast<unsigned char*>(bytes.data());
    std::memcpy(p, kMagic.data(), 4);
    store_u32(p + 4, kP2sfVersion);
    store_u32(p + 8, static_cast<std::uint32_t>(m.rows));
    store_u32(p + 12, static_cast<std::uint32_t>(m.cols));
    for (std::size_t i = 0; i < m.data.size(); ++i)
        store_u32(p + 16 + 4 * i, std::bit_cast<std::uint32_t>(m.data[i]));

    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("cannot write " + path.string());
}

std::vector<double> read_similarity_values(const std::filesystem::path& path)
{
    const std::string bytes = read_bytes(path);
    if (has_magic(bytes)) {
        const FloatMatrix m = parse_p2sf(bytes, path);
        if (m.cols != 1)
            throw FormatError(path.string() + ": similarity file must have D = 1, found D = " +
                              std::to_string(m.cols));
        return {m.data.begin(), m.data.end()};
    }

    std::vector<double> values;
    std::istringstream in(bytes);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double v;
        if (!(ls >> v)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number");
        }
        std::string extra;
        if (ls >> extra)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected one column");
        values.push_back(v);
    }
    if (values.empty()) throw FormatError(path.string() + ": no values");
    return values;
}

void write_similarity(const std::filesystem::path& path, const SimilaritySequence& seq)
{
    FloatMatrix m;
    m.rows = seq.size();
    m.cols = 1;
    m.data.reserve(seq.size());
    for (double v : seq.values()) m.data.push_back(static_cast<float>(v));
    write_matrix(path, m);
}

std::filesystem::path Manifest::resolve(const std::string& p) const
{
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

const QueryRecord& Manifest::find(const std::string& query_id) const
{
    for (const QueryRecord& q : queries) {
        if (q.query_id == query_id) return q;
    }
    throw std::out_of_range("query id not in manifest: " + query_id);
}

std::vector<GroundTruth> Manifest::ground_truths() const
{
    std::vector<GroundTruth> out;
    for (const QueryRecord& q : queries) {
        if (!q.ground_truth.empty()) out.push_back({q.query_id, q.ground_truth});
    }
    return out;
}

nlohmann::ordered_json manifest_to_json(const Manifest& m)
{
    nlohmann::ordered_json j;
    j["schema_version"] = m.schema_version;
    auto& arr = j["queries"] = nlohmann::ordered_json::array();
    for (const QueryRecord& q : m.queries) {
        nlohmann::ordered_json r;
        r["query_id"] = q.query_id;
        r["video_id"] = q.video_id;
        r["query"] = q.query_text;
        if (q.fps) r["fps"] = *q.fps;
        if (q.sub_queries)
            r["sub_queries"] = {{"q_a", q.sub_queries->sub_a},
                                {"q_b", q.sub_queries->sub_b},
                                {"backend", to_string(q.sub_queries->backend)}};
        if (!q.ground_truth.empty()) {
            auto gts = nlohmann::ordered_json::array();
            for (const TimeSpan& s : q.ground_truth) gts.push_back({s.start_s, s.end_s});
            r["ground_truth"] = gts;
        }
        if (const auto* sim = std::get_if<SimilaritySource>(&q.source)) {
            nlohmann::ordered_json s{{"original", sim->original}};
            if (!sim->sub_a.empty()) s["sub_a"] = sim->sub_a;
            if (!sim->sub_b.empty()) s["sub_b"] = sim->sub_b;
            r["similarity"] = s;
        } else {
            const auto& emb = std::get<EmbeddingSource>(q.source);
            nlohmann::ordered_json s{{"frames", emb.frames}, {"query", emb.query}};
            if (!emb.sub_a.empty()) s["sub_a"] = emb.sub_a;
            if (!emb.sub_b.empty()) s["sub_b"] = emb.sub_b;
            r["embeddings"] = s;
        }
        arr.push_back(std::move(r));
    }
    return j;
}

namespace {

TimeSpan parse_span(const nlohmann::json& j, const std::string& qid)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw FormatError("query " + qid + ": ground truth span must be [start_s, end_s]");
    TimeSpan s{j[0].get<double>(), j[1].get<double>()};
    if (!(s.end_s > s.start_s)) throw FormatError("query " + qid + ": ground truth end must exceed start");
    return s;
}

} // namespace

Manifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir)
{
    Manifest m;
    m.base_dir = std::move(base_dir);
    m.schema_version = j.value("schema_version", 0);
    if (m.schema_version != kManifestSchemaVersion)
        throw FormatError("unsupported manifest schema_version " + std::to_string(m.schema_version));
    if (!j.contains("queries") || !j["queries"].is_array()) throw FormatError("manifest needs a queries array");

    for (const auto& r : j["queries"]) {
        QueryRecord q;
        try {
            q.query_id = r.at("query_id").get<std::string>();
            q.video_id = r.value("video_id", "");
            q.query_text = r.value("query", "");
            if (r.contains("fps")) q.fps = r["fps"].get<double>();
            if (r.contains("sub_queries")) {
                const auto& s = r["sub_queries"];
                QueryTriple t;
                t.original = q.query_text;
                t.sub_a = s.at("q_a").get<std::string>();
                t.sub_b = s.at("q_b").get<std::string>();
                t.backend = decompose_backend_from_string(s.value("backend", "provided"));
                q.sub_queries = t;
            }
            if (r.contains("ground_truth")) {
                const auto& g = r["ground_truth"];
                if (g.is_array() && !g.empty() && g[0].is_array()) {
                    for (const auto& s : g) q.ground_truth.push_back(parse_span(s, q.query_id));
                } else {
                    q.ground_truth.push_back(parse_span(g, q.query_id));
                }
            }
            if (r.contains("similarity")) {
                const auto& s = r["similarity"];
                q.source = SimilaritySource{s.at("original").get<std::string>(), s.value("sub_a", ""),
                                            s.value("sub_b", "")};
            } else if (r.contains("embeddings")) {
                const auto& s = r["embeddings"];
                q.source = EmbeddingSource{s.at("frames").get<std::string>(), s.at("query").get<std::string>(),
                                           s.value("sub_a", ""), s.value("sub_b", "")};
            } else {
                throw FormatError("query " + q.query_id + ": needs a similarity or embeddings source");
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("malformed manifest record: " + std::string(e.what()));
        }
        m.queries.push_back(std::move(q));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path)
{
    const auto j = nlohmann::json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw FormatError(path.string() + ": not valid JSON");
    return manifest_from_json(j, path.parent_path());
}

void save_manifest(const Manifest& m, const std::filesystem::path& path)
{
    write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw FormatError("cannot write " + path.string());
}

std::string read_text_file(const std::filesystem::path& path)
{
    return read_bytes(path);
}

} // namespace p2s
