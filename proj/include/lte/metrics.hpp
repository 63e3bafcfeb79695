#pragma once

#include "lte/corpus.hpp"
#include "lte/memory.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lte::metrics {

enum class MatchMode { substring, exact };
enum class LocalityMode { gold, baseline_consistency };
enum class Dimension { edit_success, portability, locality };

MatchMode match_mode_from_string(std::string_view s);
LocalityMode locality_mode_from_string(std::string_view s);
std::string_view to_string(MatchMode m);
std::string_view to_string(LocalityMode m);

/// Which score a case feeds: reliability/paraphrase -> edit success, other
/// in-scope categories -> portability, out-of-scope -> locality.
Dimension dimension_of(const QueryCase& c);

/// 1 iff normalize(gold) occurs in normalize(generated) (or equals it in exact mode).
/// Throws std::invalid_argument when gold is empty.
int normalized_match(std::string_view generated, std::string_view gold, MatchMode mode = MatchMode::substring);

struct CaseResult {
    QueryCase query_case;
    std::string generated;
    int matched = 0;
    std::optional<std::string> baseline_generated;
};

/// Scores `generated` against the gold answer (or, for locality in baseline mode,
/// against the pre-edit generation).
CaseResult score_case(const QueryCase& c, std::string generated, std::optional<std::string> baseline,
                      MatchMode match, LocalityMode locality);

/// Mean of matched * 100 over the cases; std::nullopt for an empty list.
/// Locality in baseline_consistency mode re-scores every case against its
/// baseline generation and throws std::invalid_argument when one is missing.
std::optional<double> dimension_accuracy(std::span<const CaseResult> results, Dimension dimension,
                                         LocalityMode locality_mode = LocalityMode::gold,
                                         MatchMode match = MatchMode::substring);

/// Shannon entropy (bits) of the whitespace-token n-gram distribution; 0 when
/// there are fewer than n tokens. n must be 2 or 3.
double ngram_entropy(std::string_view text, int n);

struct FluencyWeights {
    double bigram = 0.5;
    double trigram = 0.5;
    void check() const;
};

double fluency(std::string_view text, FluencyWeights weights = {});

/// Fraction of retrievals whose rank-1 entry is the gold entry; empty results count as misses.
double p_at_1(std::span<const std::pair<EntryId, RetrievalResult>> retrievals);

/// Fraction of retrievals with the gold entry anywhere in the returned top-k.
double top_k_hit_rate(std::span<const std::pair<EntryId, RetrievalResult>> retrievals);

struct MetricReport {
    std::optional<double> edit_success;
    std::optional<double> portability;
    std::optional<double> locality;
    std::optional<double> fluency;
    std::optional<double> p_at_1;
    std::optional<double> top_k_hit_rate;
    std::size_t n_edit_success = 0;
    std::size_t n_portability = 0;
    std::size_t n_locality = 0;
    std::size_t n_fluency = 0;
    std::size_t n_retrievals = 0;

    bool operator==(const MetricReport&) const = default;
};

/// Table-style names ("Edit Succ.", "Portability", "Locality", "Fluency") plus
/// machine keys; absent dimensions are omitted.
nlohmann::ordered_json to_json(const MetricReport& r);

} // namespace lte::metrics
