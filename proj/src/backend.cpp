#include "lte/backend.hpp"

#include "http_util.hpp"
#include "lte/embed.hpp"
#include "lte/error.hpp"
#include "lte/rng.hpp"
#include "lte/text.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace lte {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SplitPrompt {
    bool has_block = false;
    std::string_view block;
    std::string_view query;
};

SplitPrompt split_prompt(std::string_view prompt, const PromptTemplate& tmpl) {
    SplitPrompt out;
    out.query = prompt;
    if (prompt.find(tmpl.info_marker()) == std::string_view::npos) return out;
    const std::string query_sep = "\n" + tmpl.query_prefix;
    const auto pos = prompt.rfind(query_sep);
    out.has_block = true;
    if (pos == std::string_view::npos) {
        out.block = prompt;
        return out;
    }
    out.block = prompt.substr(0, pos);
    out.query = prompt.substr(pos + query_sep.size());
    return out;
}

} // namespace

void GenerationRequest::check() const {
    if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
}

void MockOracleConfig::check() const {
    if (!(noise_rate >= 0.0 && noise_rate < 1.0)) throw std::invalid_argument("mock noise_rate must be in [0, 1)");
}

MockOracleConfig mock_config_from_json(const json& j) {
    MockOracleConfig c;
    for (const auto& r : j.value("edit_table", json::array()))
        c.edit_table.push_back({r.at("statement").get<std::string>(), r.at("query").get<std::string>(),
                                r.at("answer").get<std::string>()});
    for (const auto& r : j.value("base_table", json::array()))
        c.base_table.push_back({r.at("query").get<std::string>(), r.at("answer").get<std::string>()});
    c.noise_rate = j.value("noise_rate", 0.0);
    c.rng_seed = j.value("seed", std::uint64_t{0});
    const auto scope = j.value("noise_scope", std::string("all"));
    if (scope == "edited_only")
        c.noise_scope = NoiseScope::edited_only;
    else if (scope == "all")
        c.noise_scope = NoiseScope::all;
    else
        throw DataError("mock: unknown noise_scope '" + scope + "'");
    if (j.contains("template")) c.prompt = template_from_json(j.at("template"));
    c.fallback = j.value("fallback", c.fallback);
    c.latency = std::chrono::milliseconds(j.value("latency_ms", 0));
    c.check();
    return c;
}

json to_json(const MockOracleConfig& c) {
    json j;
    j["kind"] = "mock";
    json edits = json::array();
    for (const auto& r : c.edit_table) edits.push_back({{"statement", r.statement}, {"query", r.query_pattern}, {"answer", r.answer}});
    json base = json::array();
    for (const auto& r : c.base_table) base.push_back({{"query", r.query_pattern}, {"answer", r.answer}});
    j["edit_table"] = std::move(edits);
    j["base_table"] = std::move(base);
    j["noise_rate"] = c.noise_rate;
    j["seed"] = c.rng_seed;
    j["noise_scope"] = c.noise_scope == NoiseScope::edited_only ? "edited_only" : "all";
    j["template"] = to_json(c.prompt);
    j["fallback"] = c.fallback;
    j["latency_ms"] = c.latency.count();
    return j;
}

MockBackend::MockBackend(MockOracleConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.check();
    for (const auto& r : cfg_.edit_table) edit_patterns_.push_back(text::normalize_for_match(r.query_pattern));
    for (const auto& r : cfg_.base_table) base_patterns_.push_back(text::normalize_for_match(r.query_pattern));
}

std::string MockBackend::answer(std::string_view prompt) const {
    const auto parts = split_prompt(prompt, cfg_.prompt);
    const auto query = text::normalize_for_match(parts.query);

    std::string result;
    bool edited = false;
    if (parts.has_block) {
        for (std::size_t i = 0; i < cfg_.edit_table.size(); ++i) {
            const auto& rule = cfg_.edit_table[i];
            if (parts.block.find(rule.statement) != std::string_view::npos
                && query.find(edit_patterns_[i]) != std::string::npos) {
                result = rule.answer;
                edited = true;
                break;
            }
        }
    }
    if (!edited) {
        result = cfg_.fallback;
        for (std::size_t i = 0; i < cfg_.base_table.size(); ++i) {
            if (query.find(base_patterns_[i]) != std::string::npos) {
                result = cfg_.base_table[i].answer;
                break;
            }
        }
    }

    if (cfg_.noise_rate > 0.0 && (edited || cfg_.noise_scope == NoiseScope::all)) {
        const std::uint64_t h = fnv1a64(prompt, cfg_.rng_seed);
        if (rng::unit_from_hash(h) < cfg_.noise_rate) result = "WRONG-" + std::to_string((h >> 16) % 100000);
    }
    return result;
}

GenerationResult MockBackend::generate(const GenerationRequest& request) {
    request.check();
    const auto start = Clock::now();
    if (cfg_.latency.count() > 0) std::this_thread::sleep_for(cfg_.latency);
    GenerationResult r;
    r.text = answer(request.prompt);
    r.backend_id = id();
    r.request_id = next_request_id_++;
    r.latency_seconds = seconds_since(start);
    return r;
}

std::string mock_generate(std::string_view prompt, const MockOracleConfig& cfg) { return MockBackend(cfg).answer(prompt); }

RemoteChatBackend::RemoteChatBackend(RemoteBackendConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(std::clamp(cfg_.parallelism, 1, 4096)) {
    detail::split_base_url(cfg_.base_url);
}

json RemoteChatBackend::request_body(const GenerationRequest& request) const {
    json messages = json::array();
    if (cfg_.system_message) messages.push_back({{"role", "system"}, {"content", *cfg_.system_message}});
    messages.push_back({{"role", "user"}, {"content", request.prompt}});
    json body{{"model", cfg_.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_new_tokens}};
    if (request.stop && !request.stop->empty()) body["stop"] = *request.stop;
    return body;
}

GenerationResult RemoteChatBackend::generate(const GenerationRequest& request) {
    request.check();
    const auto request_id = next_request_id_++;
    const auto tag = "generation request " + std::to_string(request_id) + ": ";

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<4096>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    const auto start = Clock::now();
    const auto base = detail::split_base_url(cfg_.base_url);
    auto client = detail::make_client(base, cfg_.timeout);
    httplib::Headers headers;
    if (auto key = detail::env_or_empty(cfg_.api_key_env); !key.empty())
        headers.emplace("Authorization", "Bearer " + key);

    auto res = detail::post_json_with_retries(*client, base.path_prefix + "/chat/completions", headers,
                                              request_body(request).dump(), cfg_.max_retries);
    if (!res) {
        const bool timeout = res.error() == httplib::Error::Read || res.error() == httplib::Error::Write
                             || res.error() == httplib::Error::ConnectionTimeout;
        throw BackendError(tag + (timeout ? "timeout: " : "transport error: ") + httplib::to_string(res.error()), 0,
                           true);
    }
    if (res->status < 200 || res->status >= 300)
        throw BackendError(tag + "HTTP " + std::to_string(res->status) + ": " + detail::excerpt(res->body), res->status);

    GenerationResult out;
    try {
        const auto parsed = json::parse(res->body);
        out.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(tag + "unexpected response: " + std::string(e.what()) + "; body: " + detail::excerpt(res->body),
                           res->status);
    }
    out.latency_seconds = seconds_since(start);
    out.backend_id = id();
    out.request_id = request_id;
    return out;
}

std::shared_ptr<Backend> make_backend(const json& cfg) {
    const auto kind = cfg.value("kind", std::string("mock"));
    if (kind == "mock") return std::make_shared<MockBackend>(mock_config_from_json(cfg));
    if (kind == "remote") {
        RemoteBackendConfig c;
        c.base_url = cfg.value("base_url", c.base_url);
        c.model = cfg.value("model", c.model);
        c.api_key_env = cfg.value("api_key_env", c.api_key_env);
        if (auto it = cfg.find("system_message"); it != cfg.end() && it->is_string()) c.system_message = it->get<std::string>();
        c.timeout = std::chrono::milliseconds(cfg.value("timeout_ms", 60000));
        c.max_retries = cfg.value("max_retries", c.max_retries);
        c.parallelism = cfg.value("parallelism", c.parallelism);
        return std::make_shared<RemoteChatBackend>(c);
    }
    throw Error("unknown backend kind '" + kind + "' (expected mock or remote)");
}

} // namespace lte
