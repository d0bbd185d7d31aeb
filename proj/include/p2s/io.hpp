#pragma once

// On-disk formats: P2SF feature/similarity matrices and the query manifest.
//
// P2SF layout (all little-endian):
//   bytes 0-3   magic "P2SF"
//   bytes 4-7   uint32 version (1)
//   bytes 8-11  uint32 row count T
//   bytes 12-15 uint32 dimension D
//   then T*D float32 values, row-major.
// Similarity files use D = 1. A plain text file with one value per line
// (blank lines and '#' comments ignored) is accepted wherever a similarity
// file is expected.

#include "p2s/decompose.hpp"
#include "p2s/eval.hpp"
#include "p2s/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace p2s {

inline constexpr std::uint32_t kP2sfVersion = 1;
inline constexpr int kManifestSchemaVersion = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FloatMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    EmbeddingView view() const { return {data, rows, cols}; }
};

FloatMatrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const FloatMatrix& m);

// Values of a D = 1 P2SF file or a one-column text file.
std::vector<double> read_similarity_values(const std::filesystem::path& path);
void write_similarity(const std::filesystem::path& path, const SimilaritySequence& seq);

struct SimilaritySource {
    std::string original;
    std::string sub_a; // empty when absent
    std::string sub_b;
};

struct EmbeddingSource {
    std::string frames;
    std::string query;
    std::string sub_a; // query embeddings for the sub-queries; empty when absent
    std::string sub_b;
};

struct QueryRecord {
    std::string query_id;
    std::string video_id;
    std::string query_text;
    std::optional<double> fps;
    std::optional<QueryTriple> sub_queries;
    std::vector<TimeSpan> ground_truth;
    std::variant<SimilaritySource, EmbeddingSource> source;
};

struct Manifest {
    int schema_version = kManifestSchemaVersion;
    std::vector<QueryRecord> queries;
    std::filesystem::path base_dir; // relative source paths resolve against this

    std::filesystem::path resolve(const std::string& p) const;
    const QueryRecord& find(const std::string& query_id) const;
    std::vector<GroundTruth> ground_truths() const;
};

nlohmann::ordered_json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j, std::filesystem::path base_dir);
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

} // namespace p2s
