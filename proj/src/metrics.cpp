#include "lte/metrics.hpp"

#include "lte/error.hpp"
#include "lte/text.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace lte::metrics {

MatchMode match_mode_from_string(std::string_view s) {
    if (s == "substring") return MatchMode::substring;
    if (s == "exact") return MatchMode::exact;
    throw std::invalid_argument("unknown match mode '" + std::string(s) + "' (expected exact or substring)");
}

LocalityMode locality_mode_from_string(std::string_view s) {
    if (s == "gold") return LocalityMode::gold;
    if (s == "baseline" || s == "baseline_consistency") return LocalityMode::baseline_consistency;
    throw std::invalid_argument("unknown locality mode '" + std::string(s) + "' (expected gold or baseline)");
}

std::string_view to_string(MatchMode m) { return m == MatchMode::substring ? "substring" : "exact"; }
std::string_view to_string(LocalityMode m) { return m == LocalityMode::gold ? "gold" : "baseline_consistency"; }

Dimension dimension_of(const QueryCase& c) {
    if (c.scope == Scope::out_of_scope) return Dimension::locality;
    if (c.category == Category::reliability || c.category == Category::paraphrase) return Dimension::edit_success;
    return Dimension::portability;
}

int normalized_match(std::string_view generated, std::string_view gold, MatchMode mode) {
    const auto g = text::normalize_for_match(gold);
    if (g.empty()) throw std::invalid_argument("normalized_match: empty gold answer");
    const auto out = text::normalize_for_match(generated);
    if (mode == MatchMode::exact) return out == g ? 1 : 0;
    return out.find(g) != std::string::npos ? 1 : 0;
}

CaseResult score_case(const QueryCase& c, std::string generated, std::optional<std::string> baseline, MatchMode match,
                      LocalityMode locality) {
    CaseResult r{c, std::move(generated), 0, std::move(baseline)};
    if (dimension_of(c) == Dimension::locality && locality == LocalityMode::baseline_consistency) {
        if (!r.baseline_generated) throw std::invalid_argument("score_case: baseline generation required");
        // An empty pre-edit generation can only be matched by an empty post-edit one.
        if (text::normalize_for_match(*r.baseline_generated).empty())
            r.matched = text::normalize_for_match(r.generated).empty() ? 1 : 0;
        else
            r.matched = normalized_match(r.generated, *r.baseline_generated, match);
    } else if (c.gold_answer && !c.gold_answer->empty()) {
        r.matched = normalized_match(r.generated, *c.gold_answer, match);
    } else {
        throw std::invalid_argument("score_case: case '" + c.prompt + "' has no gold answer");
    }
    return r;
}

std::optional<double> dimension_accuracy(std::span<const CaseResult> results, Dimension dimension,
                                         LocalityMode locality_mode, MatchMode match) {
    std::size_t n = 0;
    std::size_t hits = 0;
    for (const auto& r : results) {
        if (dimension_of(r.query_case) != dimension) continue;
        ++n;
        int m = r.matched;
        if (dimension == Dimension::locality && locality_mode == LocalityMode::baseline_consistency) {
            if (!r.baseline_generated)
                throw std::invalid_argument("dimension_accuracy: baseline_consistency requires baseline generations");
            m = score_case(r.query_case, r.generated, r.baseline_generated, match, locality_mode).matched;
        }
        hits += static_cast<std::size_t>(m);
    }
    if (n == 0) return std::nullopt;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

double ngram_entropy(std::string_view input, int n) {
    if (n != 2 && n != 3) throw std::invalid_argument("ngram_entropy: n must be 2 or 3");
    const auto tokens = text::split_whitespace(input);
    if (tokens.size() < static_cast<std::size_t>(n)) return 0.0;

    // length-prefixed keys keep distinct n-grams distinct
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string key;
        for (int k = 0; k < n; ++k) {
            const auto& t = tokens[i + static_cast<std::size_t>(k)];
            key += std::to_string(t.size());
            key += ':';
            key += t;
        }
        ++counts[key];
    }
    const double total = static_cast<double>(tokens.size() - static_cast<std::size_t>(n) + 1);
    double h = 0.0;
    for (const auto& [key, c] : counts) {
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h == 0.0 ? 0.0 : h;  // no negative zero
}

void FluencyWeights::check() const {
    if (!(bigram >= 0.0 && trigram >= 0.0) || std::abs(bigram + trigram - 1.0) > 1e-12)
        throw std::invalid_argument("fluency weights must be non-negative and sum to 1");
}

double fluency(std::string_view text, FluencyWeights weights) {
    weights.check();
    return weights.bigram * ngram_entropy(text, 2) + weights.trigram * ngram_entropy(text, 3);
}

double p_at_1(std::span<const std::pair<EntryId, RetrievalResult>> retrievals) {
    if (retrievals.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& [gold, result] : retrievals)
        if (!result.entries.empty() && result.entries.front().entry.entry_id == gold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(retrievals.size());
}

double top_k_hit_rate(std::span<const std::pair<EntryId, RetrievalResult>> retrievals) {
    if (retrievals.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& [gold, result] : retrievals) {
        for (const auto& e : result.entries) {
            if (e.entry.entry_id == gold) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(retrievals.size());
}

nlohmann::ordered_json to_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    auto put = [&](const char* table_name, const char* key, const std::optional<double>& v) {
        if (!v) return;
        if (table_name) j[table_name] = *v;
        j[key] = *v;
    };
    put("Edit Succ.", "edit_success", r.edit_success);
    put("Portability", "portability", r.portability);
    put("Locality", "locality", r.locality);
    put("Fluency", "fluency", r.fluency);
    put(nullptr, "p_at_1", r.p_at_1);
    put(nullptr, "top_k_hit_rate", r.top_k_hit_rate);
    j["n_cases"] = {{"edit_success", r.n_edit_success},
                    {"portability", r.n_portability},
                    {"locality", r.n_locality},
                    {"fluency", r.n_fluency},
                    {"retrievals", r.n_retrievals}};
    return j;
}

} // namespace lte::metrics
