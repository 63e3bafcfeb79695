#pragma once

#include "lte/corpus.hpp"
#include "lte/memory.hpp"
#include "lte/prompt.hpp"
#include "lte/rng.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Construction of the parallel alignment dataset: every edit descriptor paired
// with in-scope and out-of-scope queries, each rendered with and without the
// editing prompt, answers marked as the only supervised span.
namespace lte::align {

enum class Variant { in_scope_with_prompt, in_scope_plain, out_scope_with_prompt, out_scope_plain };
inline constexpr std::size_t kVariantCount = 4;

std::string_view to_string(Variant v);
bool has_prompt(Variant v);

/// Branch of the threefold Updated-Information strategy: the exact descriptor
/// alone, plus the top-1 similar one, or plus the top-2 similar ones.
enum class Branch { exact_only = 1, plus_top1 = 2, plus_top2 = 3 };

struct TrainingSample {
    std::string input_text;
    std::string target_text;
    Variant variant = Variant::in_scope_with_prompt;
    std::string source;
    std::string source_record_id;
    /// 0 for plain variants.
    std::size_t updated_information_count = 0;
    /// Threefold branch actually used; 0 for plain variants.
    int branch = 0;

    bool operator==(const TrainingSample&) const = default;
};

struct ThreefoldConfig {
    double p_exact_only = 0.50;
    double p_plus_top1 = 0.25;
    double p_plus_top2 = 0.25;
    std::uint64_t rng_seed = 0;
    /// Place the exact statement at a seeded random position; false keeps it first.
    bool randomize_position = true;

    /// Throws std::invalid_argument unless each p >= 0 and they sum to 1 within 1e-12.
    void check() const;
};

/// Parses "0.5,0.25,0.25".
ThreefoldConfig parse_threefold(std::string_view spec);

struct ThreefoldDraw {
    std::vector<std::string> statements;
    Branch drawn = Branch::exact_only;
    Branch used = Branch::exact_only;
    /// Entries contributed by similarity retrieval, in rank order.
    std::vector<EntryId> retrieved;
    bool fell_back() const noexcept { return used != drawn; }
};

/// Draws the Updated Information for `exact`, which must be stored in `pool`.
/// Similar statements come from `pool` with every entry whose statement equals the
/// exact statement excluded. A branch the pool cannot satisfy falls back to the
/// largest satisfiable one.
ThreefoldDraw threefold_updated_information(const MemoryEntry& exact, const MemoryBank& pool,
                                            const ThreefoldConfig& cfg, rng::Engine& rng);

/// Looks up the pool entry for `descriptor` (by id and statement); throws
/// std::invalid_argument if the pool does not contain it.
ThreefoldDraw threefold_updated_information(const EditDescriptor& descriptor, const MemoryBank& pool,
                                            const ThreefoldConfig& cfg, rng::Engine& rng);

struct BuildStats {
    std::array<std::size_t, kVariantCount> per_variant{};
    std::array<std::size_t, 3> branch_drawn{};
    std::array<std::size_t, 3> branch_used{};
    std::size_t threefold_fallbacks = 0;
    std::vector<std::string> warnings;

    void merge(const BuildStats& other);
};

struct BuildConfig {
    ThreefoldConfig threefold;
    PromptTemplate prompt;
    /// In-scope cases are zipped with out-of-scope cases in record order.
    std::size_t max_pairs_per_record = 1;
    /// Optional cap on records taken from each named source.
    std::map<std::string, std::size_t> records_per_source;
    unsigned parallelism = 1;
};

/// Four samples per selected (in-scope, out-of-scope) case pair. In-scope plain
/// targets use the record's original answer; out-of-scope targets are identical
/// with and without the prompt. Pairs that cannot be built without inventing an
/// answer are skipped and reported in `stats.warnings`.
std::vector<TrainingSample> build_parallel_samples(const BenchmarkRecord& record, const MemoryEntry& exact,
                                                   const MemoryBank& pool, const BuildConfig& cfg,
                                                   rng::Engine& rng, BuildStats& stats,
                                                   std::string_view source = {});

struct BuildResult {
    std::vector<TrainingSample> samples;
    BuildStats stats;
    BuildConfig config;
    std::map<std::string, std::size_t> records_per_source_used;
    nlohmann::ordered_json embedder;
    /// Caller-supplied provenance echoed into the manifest (inputs, command line).
    nlohmann::ordered_json run_info;
};

/// Builds the pool over every selected descriptor, then the samples. Output order
/// is source order, record order, pair order, variant order regardless of parallelism.
BuildResult build_dataset(std::span<const NamedBenchmark> sources, std::shared_ptr<const Embedder> embedder,
                          const BuildConfig& cfg);

/// Standard and low-rank fine-tuning presets shipped with every manifest. Inert:
/// nothing here trains a model.
nlohmann::ordered_json alignment_hyperparameters();

nlohmann::ordered_json sample_to_json(const TrainingSample& s);

struct ExportPaths {
    std::filesystem::path data;
    std::filesystem::path manifest;
};

/// Writes masked JSONL (one {input, output, loss_on, variant, meta} object per line)
/// and `<path>.manifest.json`. Throws Error for empty input or unwritable paths.
ExportPaths export_sft(const BuildResult& result, const std::filesystem::path& path);

nlohmann::ordered_json manifest_json(const BuildResult& result);

} // namespace lte::align
