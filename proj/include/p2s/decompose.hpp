#pragma once

// Query decomposition into an ordered (start-state, end-state) sub-query pair.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace p2s {

enum class DecomposeBackend { naive, rule, llm, provided };

std::string_view to_string(DecomposeBackend b);
DecomposeBackend decompose_backend_from_string(std::string_view s);

struct QueryTriple {
    std::string original;
    std::string sub_a; // start state
    std::string sub_b; // end state
    DecomposeBackend backend = DecomposeBackend::naive;

    friend bool operator==(const QueryTriple&, const QueryTriple&) = default;
};

class DecomposeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// First floor(n/2) whitespace tokens vs the rest.
QueryTriple naive_split(std::string_view query);

// Splits around the first comma or whole-token connective
// (and, while, then, before, after); falls back to naive_split.
QueryTriple rule_split(std::string_view query);

// The system prompt sent to chat-completion endpoints, kept verbatim so that
// cache keys stay stable across builds.
std::string_view decompose_system_prompt();
const std::string& decompose_prompt_digest();

// Parses "Q_a: ..." / "Q_b: ..." labeled lines; nullopt when either is missing or empty.
std::optional<std::pair<std::string, std::string>> parse_labeled_pair(std::string_view text);

// Trims and collapses internal whitespace.
std::string normalize_query(std::string_view query);

class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    // Returns the assistant message text; throws DecomposeError on transport failure.
    virtual std::string complete(std::string_view system_prompt, std::string_view user_message) = 0;
    virtual std::string model() const = 0;
};

struct EndpointSettings {
    std::string base_url;   // e.g. http://localhost:8000/v1
    std::string model;
    std::string api_key;
    double timeout_s = 30.0;
    std::size_t max_in_flight = 4;

    // Fills unset fields from P2S_LLM_BASE_URL, P2S_LLM_MODEL, P2S_LLM_API_KEY.
    void apply_environment();
};

// OpenAI-compatible POST {base_url}/chat/completions.
class HttpChatEndpoint final : public ChatEndpoint {
public:
    explicit HttpChatEndpoint(EndpointSettings settings);

    std::string complete(std::string_view system_prompt, std::string_view user_message) override;
    std::string model() const override { return settings_.model; }
    std::size_t request_count() const { return requests_.load(); }

private:
    EndpointSettings settings_;
    std::string scheme_host_port_;
    std::string path_;
    std::mutex mutex_;
    std::condition_variable slot_free_;
    std::size_t in_flight_ = 0;
    std::atomic<std::size_t> requests_{0};
};

// Content-addressed store of decompositions. With an empty directory the
// cache lives in memory only.
class DecomposeCache {
public:
    explicit DecomposeCache(std::filesystem::path dir = {});

    static std::string make_key(DecomposeBackend backend, std::string_view model,
                                std::string_view prompt_digest, std::string_view query);

    std::optional<QueryTriple> get(const std::string& key) const;
    void put(const std::string& key, const QueryTriple& triple);

    // Serializes work on one key; readers of other keys are unaffected.
    std::mutex& key_mutex(const std::string& key);

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
    std::map<std::string, QueryTriple> memory_;
    std::map<std::string, std::unique_ptr<std::mutex>> key_locks_;
};

struct LlmOptions {
    int retries = 2;
};

QueryTriple llm_decompose(std::string_view query, ChatEndpoint& endpoint, DecomposeCache& cache,
                          const LlmOptions& options = {});

} // namespace p2s
