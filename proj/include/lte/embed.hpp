#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lte {

/// Dense embedding. Vectors produced by any Embedder are L2-normalized or all zero.
struct Vector {
    std::vector<double> values;

    Vector() = default;
    explicit Vector(std::size_t dim) : values(dim, 0.0) {}
    explicit Vector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t dim() const noexcept { return values.size(); }
    double norm() const;
    bool operator==(const Vector&) const = default;
};

/// Exact inner product; throws std::invalid_argument on dimension mismatch.
double dot(const Vector& u, const Vector& v);

/// Identifies an embedding space; vectors from different fingerprints are incomparable.
struct EmbedderFingerprint {
    std::string kind;  // "reference" or "remote"
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::string model;

    bool operator==(const EmbedderFingerprint&) const = default;
};

nlohmann::json to_json(const EmbedderFingerprint& fp);
EmbedderFingerprint fingerprint_from_json(const nlohmann::json& j);

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual Vector embed(std::string_view text) const = 0;
    virtual std::vector<Vector> embed_batch(std::span<const std::string> texts) const;
    virtual std::size_t dim() const = 0;
    virtual EmbedderFingerprint fingerprint() const = 0;
};

struct ReferenceEmbedderConfig {
    std::size_t dim = 256;
    std::uint64_t seed = 0;
};

/// 64-bit FNV-1a with the offset basis XOR-ed by `seed`.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

/// Feature strings hashed by the reference embedder: lowercased word unigrams,
/// word bigrams joined by U+001F, and code-point trigrams of the single-space
/// joined token string. Multiplicity is preserved.
std::vector<std::string> reference_features(std::string_view text);

/// Signed feature hashing: bucket = h mod dim, sign from the top bit, then L2 normalization.
Vector reference_embed(std::string_view text, const ReferenceEmbedderConfig& cfg);

class ReferenceEmbedder final : public Embedder {
public:
    explicit ReferenceEmbedder(ReferenceEmbedderConfig cfg = {});

    Vector embed(std::string_view text) const override;
    std::size_t dim() const override { return cfg_.dim; }
    EmbedderFingerprint fingerprint() const override;
    const ReferenceEmbedderConfig& config() const noexcept { return cfg_; }

private:
    ReferenceEmbedderConfig cfg_;
};

struct RemoteEmbedderConfig {
    std::string base_url = "http://127.0.0.1:8081/v1";
    std::string path = "/embeddings";
    std::string model = "multi-qa-mpnet-base-dot-v1";
    std::string api_key_env = "LTE_EMBED_API_KEY";
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    /// When set, responses of any other dimension are rejected.
    std::optional<std::size_t> expected_dim;
};

/// Client for a batched JSON/HTTP embedding service:
///   POST {"input": [...], "model": m} -> {"data": [{"index": i, "embedding": [...]}]}
/// The dimension is learned from the first response and enforced afterwards.
/// Returned vectors are re-normalized locally.
class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig cfg);

    Vector embed(std::string_view text) const override;
    std::vector<Vector> embed_batch(std::span<const std::string> texts) const override;
    /// Issues a probe request when the dimension is not yet known.
    std::size_t dim() const override;
    EmbedderFingerprint fingerprint() const override;

private:
    RemoteEmbedderConfig cfg_;
    mutable std::mutex dim_mutex_;
    mutable std::optional<std::size_t> dim_;
    mutable std::atomic<std::uint64_t> next_request_id_{0};
};

/// Builds an embedder from {"kind": "reference"|"remote", ...}.
std::unique_ptr<Embedder> make_embedder(const nlohmann::json& cfg);

} // namespace lte
