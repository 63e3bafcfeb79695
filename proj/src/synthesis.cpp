#include "lte/synthesis.hpp"

#include "lte/error.hpp"
#include "lte/text.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace lte::synthesis {

using nlohmann::json;

namespace {

std::map<std::string, std::string> descriptor_vars(const EditDescriptor& d) {
    return {{"statement", d.statement},
            {"edit_input", d.edit_input},
            {"edit_target", d.edit_target},
            {"subject", d.subject.value_or("")}};
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

Templates templates_from_json(const json& j) {
    Templates t;
    t.out_of_scope = j.value("out_of_scope", std::string());
    t.free_text_question = j.value("free_text_question", std::string());
    t.free_text_answer = j.value("free_text_answer", std::string());
    t.verify = j.value("verify", std::string());
    return t;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const std::string name(tmpl.substr(i + 1, close - i - 1));
                if (auto it = vars.find(name); it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::vector<QueryCase> parse_out_of_scope(std::string_view response) {
    // Models often wrap JSON in prose or code fences; take the outermost JSON value.
    const auto begin = response.find_first_of("[{");
    const auto end = response.find_last_of("]}");
    if (begin == std::string_view::npos || end == std::string_view::npos || end < begin) return {};
    json j = json::parse(response.substr(begin, end - begin + 1), nullptr, false);
    if (j.is_discarded()) return {};
    if (j.is_object()) j = json::array({j});
    if (!j.is_array()) return {};

    std::vector<QueryCase> out;
    for (const auto& item : j) {
        if (!item.is_object()) continue;
        const auto q = item.value("query", std::string());
        const auto a = item.value("answer", std::string());
        if (trim(q).empty() || trim(a).empty()) continue;
        out.push_back({trim(q), trim(a), Scope::out_of_scope, Category::unrelated_attribute});
    }
    return out;
}

SynthesisClient::SynthesisClient(std::shared_ptr<Backend> backend, Templates templates, GenerationRequest defaults)
    : backend_(std::move(backend)), templates_(std::move(templates)), defaults_(std::move(defaults)) {}

std::string SynthesisClient::ask(const std::string& prompt) {
    GenerationRequest req = defaults_;
    req.prompt = prompt;
    return backend_->generate(req).text;
}

std::vector<QueryCase> SynthesisClient::out_of_scope_cases(const EditDescriptor& d) {
    if (templates_.out_of_scope.empty()) throw Error("synthesis: no out_of_scope template configured");
    return parse_out_of_scope(ask(fill_template(templates_.out_of_scope, descriptor_vars(d))));
}

std::optional<QueryCase> SynthesisClient::free_text_case(const EditDescriptor& d) {
    if (templates_.free_text_question.empty() || templates_.free_text_answer.empty())
        throw Error("synthesis: free-text templates not configured");
    auto vars = descriptor_vars(d);
    vars["question"] = trim(ask(fill_template(templates_.free_text_question, vars)));
    if (vars["question"].empty()) return std::nullopt;
    vars["answer"] = trim(ask(fill_template(templates_.free_text_answer, vars)));
    if (vars["answer"].empty()) return std::nullopt;
    if (!templates_.verify.empty()) {
        const auto verdict = text::normalize_for_match(ask(fill_template(templates_.verify, vars)));
        if (verdict.rfind("yes", 0) != 0) return std::nullopt;
    }
    return QueryCase{vars["question"], vars["answer"], Scope::in_scope, Category::free_text};
}

AugmentStats SynthesisClient::augment(Benchmark& benchmark) {
    AugmentStats stats;
    for (auto& record : benchmark) {
        std::set<std::pair<std::string, Scope>> seen;
        bool has_out = false;
        for (const auto& c : record.cases) {
            seen.emplace(c.prompt, c.scope);
            has_out = has_out || c.scope == Scope::out_of_scope;
        }
        bool touched = false;
        if (!has_out && !templates_.out_of_scope.empty()) {
            for (auto& c : out_of_scope_cases(record.descriptor)) {
                if (!seen.emplace(c.prompt, c.scope).second) continue;
                record.cases.push_back(std::move(c));
                ++stats.cases_added;
                touched = true;
            }
        }
        if (!templates_.free_text_question.empty() && !templates_.free_text_answer.empty()) {
            auto c = free_text_case(record.descriptor);
            if (!c) {
                ++stats.rejected;
            } else if (seen.emplace(c->prompt, c->scope).second) {
                record.cases.push_back(std::move(*c));
                ++stats.free_text_added;
                touched = true;
            }
        }
        if (touched) ++stats.records_augmented;
    }
    return stats;
}

} // namespace lte::synthesis
