#include "p2s/decompose.hpp"
#include "p2s/digest.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

namespace p2s {

std::string_view to_string(DecomposeBackend b)
{
    switch (b) {
    case DecomposeBackend::naive: return "naive";
    case DecomposeBackend::rule: return "rule";
    case DecomposeBackend::llm: return "llm";
    case DecomposeBackend::provided: return "provided";
    }
    return "naive";
}

DecomposeBackend decompose_backend_from_string(std::string_view s)
{
    if (s == "naive") return DecomposeBackend::naive;
    if (s == "rule") return DecomposeBackend::rule;
    if (s == "llm") return DecomposeBackend::llm;
    if (s == "provided") return DecomposeBackend::provided;
    throw std::invalid_argument("unknown decompose backend: " + std::string(s));
}

namespace {

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

std::string join(const std::vector<std::string>& tokens, std::size_t first, std::size_t last)
{
    std::string out;
    for (std::size_t i = first; i < last; ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string lowercase_word(std::string_view tok)
{
    std::string out;
    for (char c : tok) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!std::ispunct(static_cast<unsigned char>(c)))
            out.push_back(c);
    }
    return out;
}

constexpr std::array<std::string_view, 5> kDelimiters = {"and", "while", "then", "before", "after"};

std::string trim(std::string_view s)
{
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

} // namespace

std::string normalize_query(std::string_view query)
{
    const auto tokens = tokenize(query);
    return join(tokens, 0, tokens.size());
}

QueryTriple naive_split(std::string_view query)
{
    const auto tokens = tokenize(query);
    if (tokens.empty()) throw std::invalid_argument("cannot decompose an empty query");
    QueryTriple t;
    t.original = join(tokens, 0, tokens.size());
    t.backend = DecomposeBackend::naive;
    if (tokens.size() == 1) {
        t.sub_a = t.sub_b = tokens[0];
        return t;
    }
    const std::size_t half = tokens.size() / 2;
    t.sub_a = join(tokens, 0, half);
    t.sub_b = join(tokens, half, tokens.size());
    return t;
}

QueryTriple rule_split(std::string_view query)
{
    const auto tokens = tokenize(query);
    if (tokens.empty()) throw std::invalid_argument("cannot decompose an empty query");

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (auto comma = tok.find(','); comma != std::string::npos) {
            std::string left = join(tokens, 0, i);
            const std::string head = tok.substr(0, comma);
            if (!head.empty()) left += (left.empty() ? "" : " ") + head;
            std::string right = tok.substr(comma + 1);
            while (!right.empty() && right.front() == ',') right.erase(0, 1);
            const std::string rest = join(tokens, i + 1, tokens.size());
            if (!rest.empty()) right += (right.empty() ? "" : " ") + rest;
            if (!left.empty() && !right.empty())
                return {join(tokens, 0, tokens.size()), left, right, DecomposeBackend::rule};
            continue;
        }
        const std::string word = lowercase_word(tok);
        if (std::find(kDelimiters.begin(), kDelimiters.end(), word) == kDelimiters.end()) continue;
        if (i == 0 || i + 1 == tokens.size()) continue;
        return {join(tokens, 0, tokens.size()), join(tokens, 0, i), join(tokens, i + 1, tokens.size()),
                DecomposeBackend::rule};
    }
    return naive_split(query);
}

std::optional<std::pair<std::string, std::string>> parse_labeled_pair(std::string_view text)
{
    std::optional<std::string> a, b;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::string s = trim(line);
        // tolerate list bullets and markdown emphasis around the label
        while (!s.empty() && (s.front() == '-' || s.front() == '*' || s.front() == '#' || s.front() == ' '))
            s.erase(0, 1);
        std::string lower;
        for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        for (const auto& [label, slot] : {std::pair{"q_a", &a}, std::pair{"q_b", &b}}) {
            if (lower.rfind(label, 0) != 0) continue;
            std::size_t pos = 3;
            while (pos < s.size() && s[pos] == '*') ++pos;
            if (pos >= s.size() || s[pos] != ':') continue;
            ++pos;
            while (pos < s.size() && s[pos] == '*') ++pos;
            std::string value = trim(std::string_view(s).substr(pos));
            if (!value.empty() && !*slot) *slot = value;
        }
    }
    if (!a || !b) return std::nullopt;
    return std::make_pair(*a, *b);
}

void EndpointSettings::apply_environment()
{
    auto fill = [](std::string& field, const char* var) {
        if (!field.empty()) return;
        if (const char* v = std::getenv(var)) field = v;
    };
    fill(base_url, "P2S_LLM_BASE_URL");
    fill(model, "P2S_LLM_MODEL");
    fill(api_key, "P2S_LLM_API_KEY");
}

HttpChatEndpoint::HttpChatEndpoint(EndpointSettings settings) : settings_(std::move(settings))
{
    if (settings_.base_url.empty()) throw std::invalid_argument("endpoint base URL is not set");
    if (settings_.max_in_flight == 0) settings_.max_in_flight = 1;
    const auto scheme = settings_.base_url.find("://");
    if (scheme == std::string::npos)
        throw std::invalid_argument("endpoint base URL needs a scheme: " + settings_.base_url);
    const auto slash = settings_.base_url.find('/', scheme + 3);
    scheme_host_port_ = settings_.base_url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : settings_.base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";
}

std::string HttpChatEndpoint::complete(std::string_view system_prompt, std::string_view user_message)
{
    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < settings_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        HttpChatEndpoint* self;
        ~Release()
        {
            std::lock_guard lock(self->mutex_);
            --self->in_flight_;
            self->slot_free_.notify_one();
        }
    } release{this};

    nlohmann::json body = {
        {"model", settings_.model},
        {"temperature", 0},
        {"messages",
         {{{"role", "system"}, {"content", system_prompt}}, {{"role", "user"}, {"content", user_message}}}}};

    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::duration<double>(settings_.timeout_s);
    const auto sec = static_cast<time_t>(settings_.timeout_s);
    const auto usec = static_cast<time_t>((timeout.count() - static_cast<double>(sec)) * 1e6);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);

    ++requests_;
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res)
        throw DecomposeError("chat endpoint request to " + settings_.base_url + path_.substr(path_.rfind('/')) +
                             " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw DecomposeError("chat endpoint returned HTTP " + std::to_string(res->status) + ": " +
                             res->body.substr(0, 200));

    // A body that is not the expected shape is returned as-is so the caller
    // treats it as an unparseable answer.
    const auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) return res->body;
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return res->body;
    }
}

DecomposeCache::DecomposeCache(std::filesystem::path dir) : dir_(std::move(dir))
{
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

std::string DecomposeCache::make_key(DecomposeBackend backend, std::string_view model,
                                     std::string_view prompt_digest, std::string_view query)
{
    std::string material;
    material += to_string(backend);
    material += '\n';
    material += model;
    material += '\n';
    material += prompt_digest;
    material += '\n';
    material += normalize_query(query);
    return sha256_hex(material);
}

std::optional<QueryTriple> DecomposeCache::get(const std::string& key) const
{
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("key", "") != key) return std::nullopt;
    QueryTriple t;
    t.original = j.value("original", "");
    t.sub_a = j.value("sub_a", "");
    t.sub_b = j.value("sub_b", "");
    t.backend = decompose_backend_from_string(j.value("backend", "llm"));
    return t;
}

void DecomposeCache::put(const std::string& key, const QueryTriple& triple)
{
    {
        std::lock_guard lock(mutex_);
        memory_[key] = triple;
    }
    if (dir_.empty()) return;

    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);

    nlohmann::ordered_json j = {{"key", key},
                                {"original", triple.original},
                                {"sub_a", triple.sub_a},
                                {"sub_b", triple.sub_b},
                                {"backend", to_string(triple.backend)},
                                {"created_at", stamp}};
    const auto final_path = dir_ / (key + ".json");
    auto tmp = final_path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp);
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path);
}

std::mutex& DecomposeCache::key_mutex(const std::string& key)
{
    std::lock_guard lock(mutex_);
    auto& slot = key_locks_[key];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

QueryTriple llm_decompose(std::string_view query, ChatEndpoint& endpoint, DecomposeCache& cache,
                          const LlmOptions& options)
{
    const std::string normalized = normalize_query(query);
    if (normalized.empty()) throw std::invalid_argument("cannot decompose an empty query");

    const std::string key =
        DecomposeCache::make_key(DecomposeBackend::llm, endpoint.model(), decompose_prompt_digest(), normalized);
    std::lock_guard key_lock(cache.key_mutex(key));
    if (auto hit = cache.get(key)) return *hit;

    const std::string user = "Query: " + normalized;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        const std::string reply = endpoint.complete(decompose_system_prompt(), user);
        if (auto pair = parse_labeled_pair(reply)) {
            QueryTriple t{normalized, pair->first, pair->second, DecomposeBackend::llm};
            cache.put(key, t);
            return t;
        }
    }
    return rule_split(normalized);
}

} // namespace p2s
