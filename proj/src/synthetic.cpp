#include "lte/synthetic.hpp"

#include "lte/rng.hpp"

#include <array>
#include <set>
#include <string_view>

namespace lte::synthetic {

namespace {

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

struct Relation {
    std::string_view edit_input;   // "... {s} ..." cloze ending before the answer
    std::string_view paraphrase;
    std::string_view portability;
};

constexpr std::array<Relation, 4> kRelations{{
    {"The hometown of {s} is", "Which city did {s} grow up in?", "In which country is the hometown of {s}?"},
    {"The employer of {s} is", "Which company does {s} work for?", "Who founded the employer of {s}?"},
    {"The spouse of {s} is", "Who is {s} married to?", "Where was the spouse of {s} born?"},
    {"The university attended by {s} is", "Which university did {s} attend?",
     "In which city is the university attended by {s}?"},
}};

constexpr std::string_view kLocality = "Which sport does {s} play?";

std::string fill(std::string_view tmpl, const std::string& subject) {
    std::string out(tmpl);
    const auto pos = out.find("{s}");
    out.replace(pos, 3, subject);
    return out;
}

class WordSource {
public:
    explicit WordSource(std::uint64_t seed) : rng_(rng::stream(seed, 0xC0FFEE)) {}

    // Three CV syllables, capitalized; never repeats a word.
    std::string unique_word() {
        for (;;) {
            std::string w;
            for (int s = 0; s < 3; ++s) {
                w += kConsonants[rng::below(rng_, kConsonants.size())];
                w += kVowels[rng::below(rng_, kVowels.size())];
            }
            w[0] = static_cast<char>(w[0] - 'a' + 'A');
            if (used_.insert(w).second) return w;
        }
    }

private:
    rng::Engine rng_;
    std::set<std::string> used_;
};

} // namespace

Corpus make_corpus(const Options& options) {
    Corpus corpus;
    WordSource words(options.seed);
    auto& oracle = corpus.oracle;

    for (std::size_t i = 0; i < options.records; ++i) {
        const auto& rel = kRelations[i % kRelations.size()];
        const std::string subject = words.unique_word() + " " + words.unique_word();
        const std::string target = words.unique_word();
        const std::string original = words.unique_word();

        BenchmarkRecord r;
        auto& d = r.descriptor;
        d.id = "syn-" + std::to_string(i);
        d.subject = subject;
        d.edit_input = fill(rel.edit_input, subject);
        d.edit_target = target;
        d.statement = d.edit_input + " " + d.edit_target;
        if (options.original_answer) r.original_answer = original;

        r.cases.push_back({d.edit_input, target, Scope::in_scope, Category::reliability});
        oracle.edit_table.push_back({d.statement, d.edit_input, target});
        oracle.base_table.push_back({d.edit_input, original});

        if (options.paraphrase) {
            const auto q = fill(rel.paraphrase, subject);
            r.cases.push_back({q, target, Scope::in_scope, Category::paraphrase});
            oracle.edit_table.push_back({d.statement, q, target});
            oracle.base_table.push_back({q, original});
        }
        if (options.portability) {
            const auto q = fill(rel.portability, subject);
            const auto new_answer = words.unique_word();
            const auto old_answer = words.unique_word();
            r.cases.push_back({q, new_answer, Scope::in_scope, Category::compositional});
            oracle.edit_table.push_back({d.statement, q, new_answer});
            oracle.base_table.push_back({q, old_answer});
        }
        if (options.locality) {
            const auto q = fill(kLocality, subject);
            const auto sport = words.unique_word();
            r.cases.push_back({q, sport, Scope::out_of_scope, Category::unrelated_attribute});
            oracle.base_table.push_back({q, sport});
        }
        corpus.benchmark.push_back(std::move(r));
    }
    return corpus;
}

} // namespace lte::synthetic
