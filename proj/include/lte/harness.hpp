#pragma once

#include "lte/backend.hpp"
#include "lte/corpus.hpp"
#include "lte/embed.hpp"
#include "lte/memory.hpp"
#include "lte/metrics.hpp"
#include "lte/prompt.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lte::harness {

enum class Mode { single, batch, sequential };

Mode mode_from_string(std::string_view s);
std::string_view to_string(Mode m);

/// Default sizes: batch {1, 10, 100, 1000}; sequential {1, 10, 100, 500, 1000}; single none.
std::vector<std::size_t> default_sizes(Mode m);

enum class FluencyUnit {
    /// Fluency of each record's concatenated generations, averaged over records.
    per_record,
    /// Fluency of each generation, averaged over cases.
    per_case,
};

struct RunConfig {
    Mode mode = Mode::single;
    std::vector<std::size_t> sizes;
    int k = 3;
    unsigned parallelism = 1;
    std::uint64_t seed = 0;
    metrics::MatchMode match = metrics::MatchMode::substring;
    metrics::LocalityMode locality = metrics::LocalityMode::gold;
    metrics::FluencyWeights fluency_weights;
    FluencyUnit fluency_unit = FluencyUnit::per_record;
    PromptTemplate prompt;
    /// Single mode only: render every query plainly (the no-prefix control run).
    bool no_prefix_control = false;
    int max_new_tokens = 100;
    double temperature = 0.0;
    /// A run aborts once failed backend calls exceed this fraction of all calls.
    double max_failure_fraction = 0.10;
    /// Expand sizes to every n in 1..max(sizes).
    bool eval_each_step = false;
    /// When set, the memory bank is snapshotted after every size.
    std::optional<std::filesystem::path> snapshot_dir;
    /// Benchmark name -> snapshot to resume a sequential run from.
    std::map<std::string, std::filesystem::path> resume_snapshots;

    /// Throws std::invalid_argument on k < 1 or non-ascending/non-positive sizes.
    void check() const;
    std::vector<std::size_t> effective_sizes() const;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

struct TimingReport {
    /// Mean seconds per memory insertion.
    double edit_time_s = 0.0;
    /// Mean seconds per query (retrieve + render + generate).
    double inference_time_s = 0.0;
    /// edit_time_s + inference_time_s.
    double total_time_s = 0.0;
    std::size_t edits = 0;
    std::size_t queries = 0;
};

/// Two-decimal rendering used in reports ("0.00").
std::string format_seconds(double s);

struct EvalReport {
    Mode mode = Mode::single;
    /// Number of edits in memory (0 for single editing).
    std::size_t size = 0;
    std::map<std::string, metrics::MetricReport> per_benchmark;
    metrics::MetricReport average;
    TimingReport timing;
    RunConfig config;
    std::size_t total_calls = 0;
    std::size_t failed_calls = 0;
    std::vector<std::string> failure_samples;
};

/// Arithmetic mean across benchmarks of every dimension present in all of them.
metrics::MetricReport average_reports(const std::map<std::string, metrics::MetricReport>& per_benchmark);

nlohmann::ordered_json to_json(const TimingReport& t);
nlohmann::ordered_json to_json(const EvalReport& r);

/// Fixed-width table: one row per benchmark plus "Average".
std::string render_table(const EvalReport& r);

/// Each record's own statement is injected directly; no retrieval.
/// Throws RunAborted for an empty input or too many backend failures.
EvalReport eval_single(std::span<const NamedBenchmark> benchmarks, Backend& backend, const RunConfig& cfg);

/// Batch (fresh memory per size) or sequential (one growing memory) editing.
/// Every query goes through retrieve(query, k) -> render -> generate.
std::vector<EvalReport> eval_mass(std::span<const NamedBenchmark> benchmarks, Backend& backend,
                                  std::shared_ptr<const Embedder> embedder, const RunConfig& cfg);

/// Per-edit wall clock over the first 10 records: insertion into memory, then each
/// edit's reliability query. Throws RunAborted for fewer than 10 records or any
/// backend failure.
TimingReport time_per_edit(const Benchmark& benchmark, Backend& backend, std::shared_ptr<const Embedder> embedder,
                           const RunConfig& cfg);

/// Fills missing original answers from the backend's plain response to edit_input.
std::size_t fill_original_answers(Benchmark& benchmark, Backend& backend, const RunConfig& cfg);

} // namespace lte::harness
