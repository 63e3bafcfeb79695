#include "lte/embed.hpp"

#include "http_util.hpp"
#include "lte/error.hpp"
#include "lte/text.hpp"

#include <cmath>
#include <stdexcept>

namespace lte {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void normalize_in_place(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq == 0.0) return;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& x : v) x *= inv;
}

} // namespace

double Vector::norm() const {
    double sq = 0.0;
    for (double x : values) sq += x * x;
    return std::sqrt(sq);
}

double dot(const Vector& u, const Vector& v) {
    if (u.dim() != v.dim())
        throw std::invalid_argument("dot: dimension mismatch (" + std::to_string(u.dim()) + " vs "
                                    + std::to_string(v.dim()) + ")");
    double s = 0.0;
    for (std::size_t i = 0; i < u.dim(); ++i) s += u.values[i] * v.values[i];
    return s;
}

json to_json(const EmbedderFingerprint& fp) {
    json j{{"kind", fp.kind}, {"dim", fp.dim}};
    if (fp.kind == "reference") j["seed"] = fp.seed;
    if (!fp.model.empty()) j["model"] = fp.model;
    return j;
}

EmbedderFingerprint fingerprint_from_json(const json& j) {
    EmbedderFingerprint fp;
    fp.kind = j.at("kind").get<std::string>();
    fp.dim = j.at("dim").get<std::size_t>();
    fp.seed = j.value("seed", std::uint64_t{0});
    fp.model = j.value("model", std::string());
    return fp;
}

std::vector<Vector> Embedder::embed_batch(std::span<const std::string> texts) const {
    std::vector<Vector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = kFnvOffset ^ seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::vector<std::string> reference_features(std::string_view input) {
    const auto tokens = text::split_whitespace(text::to_lower(input));
    std::vector<std::string> features;
    features.reserve(tokens.size() * 2 + input.size());
    for (const auto& t : tokens) features.push_back(t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) features.push_back(tokens[i] + '\x1f' + tokens[i + 1]);
    const auto cps = text::code_points(text::join(tokens, " "));
    for (std::size_t i = 0; i + 2 < cps.size(); ++i) features.push_back(cps[i] + cps[i + 1] + cps[i + 2]);
    return features;
}

Vector reference_embed(std::string_view input, const ReferenceEmbedderConfig& cfg) {
    if (cfg.dim < 8) throw std::invalid_argument("reference embedder dim must be >= 8");
    Vector v(cfg.dim);
    for (const auto& f : reference_features(input)) {
        const std::uint64_t h = fnv1a64(f, cfg.seed);
        const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
        v.values[h % cfg.dim] += sign;
    }
    normalize_in_place(v.values);
    return v;
}

ReferenceEmbedder::ReferenceEmbedder(ReferenceEmbedderConfig cfg) : cfg_(cfg) {
    if (cfg_.dim < 8) throw std::invalid_argument("reference embedder dim must be >= 8");
}

Vector ReferenceEmbedder::embed(std::string_view text) const { return reference_embed(text, cfg_); }

EmbedderFingerprint ReferenceEmbedder::fingerprint() const { return {"reference", cfg_.dim, cfg_.seed, {}}; }

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig cfg) : cfg_(std::move(cfg)) {
    detail::split_base_url(cfg_.base_url);  // validate early
    if (cfg_.expected_dim) dim_ = cfg_.expected_dim;
}

Vector RemoteEmbedder::embed(std::string_view text) const {
    const std::string s(text);
    return embed_batch(std::span<const std::string>(&s, 1)).front();
}

std::vector<Vector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
    if (texts.empty()) return {};
    const auto request_id = next_request_id_++;
    const auto tag = "embedding request " + std::to_string(request_id) + ": ";

    const auto base = detail::split_base_url(cfg_.base_url);
    auto client = detail::make_client(base, cfg_.timeout);
    httplib::Headers headers;
    if (auto key = detail::env_or_empty(cfg_.api_key_env); !key.empty())
        headers.emplace("Authorization", "Bearer " + key);
    const json body{{"input", std::vector<std::string>(texts.begin(), texts.end())}, {"model", cfg_.model}};

    auto res = detail::post_json_with_retries(*client, base.path_prefix + cfg_.path, headers, body.dump(),
                                              cfg_.max_retries);
    if (!res) throw BackendError(tag + "transport error: " + httplib::to_string(res.error()), 0, true);
    if (res->status < 200 || res->status >= 300)
        throw BackendError(tag + "HTTP " + std::to_string(res->status) + ": " + detail::excerpt(res->body),
                           res->status);

    json parsed;
    try {
        parsed = json::parse(res->body);
    } catch (const json::parse_error& e) {
        throw BackendError(tag + "invalid JSON response: " + e.what(), res->status);
    }
    const auto data = parsed.find("data");
    if (data == parsed.end() || !data->is_array() || data->size() != texts.size())
        throw BackendError(tag + "response 'data' must hold one embedding per input", res->status);

    std::vector<Vector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    for (std::size_t pos = 0; pos < data->size(); ++pos) {
        const auto& item = (*data)[pos];
        const std::size_t index = item.value("index", pos);
        if (index >= texts.size() || filled[index])
            throw BackendError(tag + "bad or repeated embedding index " + std::to_string(index), res->status);
        auto values = item.at("embedding").get<std::vector<double>>();
        for (double x : values)
            if (!std::isfinite(x)) throw BackendError(tag + "non-finite embedding value", res->status);
        {
            std::lock_guard lock(dim_mutex_);
            if (!dim_) dim_ = values.size();
            if (values.size() != *dim_)
                throw BackendError(tag + "embedding dimension " + std::to_string(values.size()) + " != expected "
                                       + std::to_string(*dim_),
                                   res->status);
        }
        normalize_in_place(values);
        out[index] = Vector(std::move(values));
        filled[index] = true;
    }
    return out;
}

std::size_t RemoteEmbedder::dim() const {
    {
        std::lock_guard lock(dim_mutex_);
        if (dim_) return *dim_;
    }
    return embed("dimension probe").dim();
}

EmbedderFingerprint RemoteEmbedder::fingerprint() const { return {"remote", dim(), 0, cfg_.model}; }

std::unique_ptr<Embedder> make_embedder(const json& cfg) {
    const auto kind = cfg.value("kind", std::string("reference"));
    if (kind == "reference") {
        ReferenceEmbedderConfig c;
        c.dim = cfg.value("dim", c.dim);
        c.seed = cfg.value("seed", c.seed);
        return std::make_unique<ReferenceEmbedder>(c);
    }
    if (kind == "remote") {
        RemoteEmbedderConfig c;
        c.base_url = cfg.value("base_url", c.base_url);
        c.path = cfg.value("path", c.path);
        c.model = cfg.value("model", c.model);
        c.api_key_env = cfg.value("api_key_env", c.api_key_env);
        c.timeout = std::chrono::milliseconds(cfg.value("timeout_ms", 30000));
        c.max_retries = cfg.value("max_retries", c.max_retries);
        if (cfg.contains("dim")) c.expected_dim = cfg.at("dim").get<std::size_t>();
        return std::make_unique<RemoteEmbedder>(c);
    }
    throw Error("unknown embedder kind '" + kind + "' (expected reference or remote)");
}

} // namespace lte
