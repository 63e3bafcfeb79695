#pragma once

#include "lte/corpus.hpp"
#include "lte/embed.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string_view>
#include <vector>

namespace lte {

using EntryId = std::uint64_t;

struct MemoryEntry {
    EntryId entry_id = 0;
    EditDescriptor descriptor;
    Vector vector;
    /// Insertion index; equal to entry_id.
    std::uint64_t seq = 0;
};

struct ScoredEntry {
    MemoryEntry entry;
    double score = 0.0;
};

/// Ranked by score descending, ties by smaller seq first.
struct RetrievalResult {
    std::vector<ScoredEntry> entries;
    int k_requested = 0;
};

/// Append-oriented vector memory over edit descriptors with exact top-k search.
///
/// Single writer / many readers: retrieve() may run concurrently with other
/// retrieve() calls; add_edit()/remove() take an exclusive lock for the commit.
class MemoryBank {
public:
    using Filter = std::function<bool(const MemoryEntry&)>;

    explicit MemoryBank(std::shared_ptr<const Embedder> embedder);
    MemoryBank(MemoryBank&& other) noexcept;
    MemoryBank(const MemoryBank&) = delete;
    MemoryBank& operator=(const MemoryBank&) = delete;

    /// Embeds descriptor.statement and appends it. Throws DataError on an empty statement.
    EntryId add_edit(const EditDescriptor& descriptor);

    /// Operator plumbing; returns false for unknown ids.
    bool remove(EntryId id);

    /// Throws std::invalid_argument for k <= 0. Empty bank yields an empty result.
    RetrievalResult retrieve(std::string_view query_text, int k) const;

    /// Same ranking against a precomputed query vector; entries for which
    /// `keep` returns false are skipped.
    RetrievalResult retrieve(const Vector& query, int k, const Filter& keep = {}) const;

    std::optional<MemoryEntry> find(EntryId id) const;
    std::vector<MemoryEntry> entries() const;
    std::size_t size() const;
    std::size_t dim() const noexcept { return dim_; }
    const Embedder& embedder() const noexcept { return *embedder_; }
    std::shared_ptr<const Embedder> embedder_ptr() const noexcept { return embedder_; }

    /// JSONL: a header line {version, dim, embedder, count, next_id} followed by one line per entry.
    void snapshot(const std::filesystem::path& path) const;

    /// Throws DataError on fingerprint mismatch (naming both dims when they differ)
    /// or corrupt content (naming the byte offset of the bad line).
    static MemoryBank restore(const std::filesystem::path& path, std::shared_ptr<const Embedder> embedder);

private:
    std::shared_ptr<const Embedder> embedder_;
    std::size_t dim_;
    EmbedderFingerprint fingerprint_;
    mutable std::shared_mutex mutex_;
    std::vector<MemoryEntry> entries_;
    EntryId next_id_ = 0;
};

} // namespace lte
