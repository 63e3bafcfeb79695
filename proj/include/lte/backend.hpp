#pragma once

#include "lte/prompt.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace lte {

struct GenerationRequest {
    std::string prompt;
    int max_new_tokens = 100;
    /// 0 means greedy decoding.
    double temperature = 0.0;
    std::optional<std::vector<std::string>> stop;

    void check() const;
};

struct GenerationResult {
    std::string text;
    double latency_seconds = 0.0;
    std::string backend_id;
    std::uint64_t request_id = 0;
};

/// Uniform generation interface. Implementations are shareable across threads.
class Backend {
public:
    virtual ~Backend() = default;
    /// Throws BackendError on failure.
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Mock oracle

/// Answer `answer` when `statement` appears in the Updated Information block and
/// the query matches `query_pattern`.
struct EditRule {
    std::string statement;
    std::string query_pattern;
    std::string answer;
};

/// Answer for a query matching `query_pattern`, regardless of any edit block.
struct BaseRule {
    std::string query_pattern;
    std::string answer;
};

enum class NoiseScope {
    /// Only answers produced by an edit rule may be corrupted.
    edited_only,
    all,
};

struct MockOracleConfig {
    std::vector<EditRule> edit_table;
    std::vector<BaseRule> base_table;
    double noise_rate = 0.0;
    std::uint64_t rng_seed = 0;
    NoiseScope noise_scope = NoiseScope::all;
    PromptTemplate prompt;
    std::string fallback = "UNKNOWN";
    /// Artificial per-call latency.
    std::chrono::milliseconds latency{0};

    void check() const;
};

MockOracleConfig mock_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockOracleConfig& cfg);

/// Behavioral model of a perfectly aligned editing model. Patterns are matched as
/// substrings after normalize_for_match; statements as raw substrings of the block.
/// With noise, a coin seeded by (rng_seed, prompt) replaces the answer by "WRONG-<n>".
class MockBackend final : public Backend {
public:
    explicit MockBackend(MockOracleConfig cfg);

    GenerationResult generate(const GenerationRequest& request) override;
    std::string id() const override { return "mock"; }

    /// The text the oracle answers for `prompt`, without latency.
    std::string answer(std::string_view prompt) const;
    const MockOracleConfig& config() const noexcept { return cfg_; }

private:
    MockOracleConfig cfg_;
    std::vector<std::string> edit_patterns_;
    std::vector<std::string> base_patterns_;
    std::atomic<std::uint64_t> next_request_id_{0};
};

/// Convenience wrapper around MockBackend::answer.
std::string mock_generate(std::string_view prompt, const MockOracleConfig& cfg);

// ---------------------------------------------------------------------------
// Remote chat-completion client

struct RemoteBackendConfig {
    std::string base_url = "http://127.0.0.1:8000/v1";
    std::string model = "llama-2-7b-chat";
    std::string api_key_env = "LTE_BACKEND_API_KEY";
    /// Sent as a leading system message when set.
    std::optional<std::string> system_message;
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    /// Bound on in-flight requests.
    int parallelism = 8;
};

/// POST {base_url}/chat/completions with the prompt as the single user message.
/// The prompt is transmitted unmodified.
class RemoteChatBackend final : public Backend {
public:
    explicit RemoteChatBackend(RemoteBackendConfig cfg);

    GenerationResult generate(const GenerationRequest& request) override;
    std::string id() const override { return "remote:" + cfg_.model; }

    /// The JSON body sent for `request`.
    nlohmann::json request_body(const GenerationRequest& request) const;

private:
    RemoteBackendConfig cfg_;
    std::counting_semaphore<4096> in_flight_;
    std::atomic<std::uint64_t> next_request_id_{0};
};

/// {"kind": "mock", ...MockOracleConfig} or {"kind": "remote", "base_url", "model", ...}.
std::shared_ptr<Backend> make_backend(const nlohmann::json& cfg);

} // namespace lte
