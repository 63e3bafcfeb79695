#pragma once

#include "lte/backend.hpp"
#include "lte/corpus.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Pluggable query synthesis through any generation backend. The engine never
// invents cases itself: every prompt comes from a user-supplied template and every
// case from a parsed backend response.
namespace lte::synthesis {

/// Placeholders: {statement} {edit_input} {edit_target} {subject}, plus
/// {question} and {answer} in the answer/verify templates. Empty template = disabled.
struct Templates {
    /// Response: JSON {"query", "answer"} or a list of them.
    std::string out_of_scope;
    /// Response: the question text.
    std::string free_text_question;
    /// Response: the answer text.
    std::string free_text_answer;
    /// Response starting with "yes" keeps the pair.
    std::string verify;
};

Templates templates_from_json(const nlohmann::json& j);

/// Replaces every {name} present in `vars`; unknown placeholders are left as-is.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Parses an out-of-scope synthesis response into cases; malformed responses yield none.
std::vector<QueryCase> parse_out_of_scope(std::string_view response);

struct AugmentStats {
    std::size_t records_augmented = 0;
    std::size_t cases_added = 0;
    std::size_t free_text_added = 0;
    std::size_t rejected = 0;
};

class SynthesisClient {
public:
    SynthesisClient(std::shared_ptr<Backend> backend, Templates templates, GenerationRequest defaults = {});

    std::vector<QueryCase> out_of_scope_cases(const EditDescriptor& d);

    /// Question, then answer, then verification; nullopt when verification rejects.
    std::optional<QueryCase> free_text_case(const EditDescriptor& d);

    /// Adds synthesized out-of-scope cases to records that have none, and one
    /// free-text case per record when those templates are configured.
    AugmentStats augment(Benchmark& benchmark);

private:
    std::string ask(const std::string& prompt);

    std::shared_ptr<Backend> backend_;
    Templates templates_;
    GenerationRequest defaults_;
};

} // namespace lte::synthesis
