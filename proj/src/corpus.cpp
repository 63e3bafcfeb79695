#include "lte/corpus.hpp"

#include "lte/error.hpp"
#include "lte/text.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <unordered_map>
#include <utility>

namespace lte {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 8> kCategoryNames{{
    {Category::reliability, "reliability"},
    {Category::paraphrase, "paraphrase"},
    {Category::subject_alias, "subject_alias"},
    {Category::compositional, "compositional"},
    {Category::one_to_many, "one_to_many"},
    {Category::unrelated_attribute, "unrelated_attribute"},
    {Category::free_text, "free_text"},
    {Category::other, "other"},
}};

// Keys interpreted by the loader; everything else lands in metadata.
const std::set<std::string, std::less<>> kKnownKeys{
    "id", "case_id", "subject", "edit_input", "edit_target", "statement", "original_answer", "cases",
    "metadata", "prompt", "target_new", "ground_truth", "rephrase", "rephrase_prompt", "portability",
    "locality",
};

[[noreturn]] void field_error(std::string_view field, std::string_view problem) {
    throw DataError("field '" + std::string(field) + "': " + std::string(problem));
}

// KnowEdit stores answers as a string, a list of strings, or a list of alias lists.
std::optional<std::string> first_answer(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        for (const auto& item : j) {
            if (auto a = first_answer(item); a && !a->empty()) return a;
        }
    }
    if (j.is_number()) return j.dump();
    return std::nullopt;
}

std::string required_string(const json& j, std::string_view field) {
    auto it = j.find(field);
    if (it == j.end()) field_error(field, "missing");
    auto value = first_answer(*it);
    if (!value || value->empty()) field_error(field, "must be a non-empty string");
    return *value;
}

std::optional<std::string> optional_string(const json& j, std::string_view field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    auto value = first_answer(*it);
    if (value && value->empty()) return std::nullopt;
    return value;
}

Category portability_category(std::string_view key) {
    if (key == "Subject_Aliasing" || key == "subject_alias") return Category::subject_alias;
    if (key == "reasoning" || key == "Reasoning" || key == "compositional" || key == "multi_hop"
        || key == "Compositionality_I" || key == "Compositionality_II")
        return Category::compositional;
    return Category::other;
}

Category locality_category(std::string_view key) {
    if (key == "Relation_Specificity" || key == "unrelated_attribute") return Category::unrelated_attribute;
    if (key == "Forgetfulness" || key == "one_to_many") return Category::one_to_many;
    return Category::other;
}

// Items look like {"prompt": p, "ground_truth": g}, where p may itself be a list
// zipped against a list of answers.
void append_query_items(const json& items, std::string_view field, Scope scope, Category category,
                        std::vector<QueryCase>& out) {
    auto add_one = [&](const json& item) {
        if (!item.is_object()) field_error(field, "expected objects with a 'prompt'");
        auto p = item.find("prompt");
        if (p == item.end()) field_error(std::string(field) + ".prompt", "missing");
        const json* gold = nullptr;
        for (const char* key : {"ground_truth", "answer", "target", "gold_answer"}) {
            if (auto g = item.find(key); g != item.end() && !g->is_null()) {
                gold = &*g;
                break;
            }
        }
        if (p->is_array()) {
            for (std::size_t i = 0; i < p->size(); ++i) {
                QueryCase c{(*p)[i].is_string() ? (*p)[i].get<std::string>() : std::string(), std::nullopt, scope,
                            category};
                if (gold) {
                    if (gold->is_array() && gold->size() == p->size())
                        c.gold_answer = first_answer((*gold)[i]);
                    else
                        c.gold_answer = first_answer(*gold);
                }
                out.push_back(std::move(c));
            }
        } else {
            QueryCase c{p->is_string() ? p->get<std::string>() : std::string(), std::nullopt, scope, category};
            if (gold) c.gold_answer = first_answer(*gold);
            out.push_back(std::move(c));
        }
    };

    auto add_list = [&](const json& list) {
        if (list.is_array()) {
            for (const auto& item : list) add_one(item);
        } else {
            add_one(list);
        }
    };

    if (items.is_object() && !items.contains("prompt")) {
        for (const auto& [key, list] : items.items()) {
            const Category c = scope == Scope::in_scope ? portability_category(key) : locality_category(key);
            category = c;
            add_list(list);
        }
    } else {
        add_list(items);
    }
}

std::string id_string(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

} // namespace

std::string_view to_string(Scope s) { return s == Scope::in_scope ? "in_scope" : "out_of_scope"; }

std::string_view to_string(Category c) {
    for (const auto& [cat, name] : kCategoryNames)
        if (cat == c) return name;
    return "other";
}

Scope scope_from_string(std::string_view s) {
    if (s == "in_scope") return Scope::in_scope;
    if (s == "out_of_scope") return Scope::out_of_scope;
    throw DataError("unknown scope '" + std::string(s) + "'");
}

Category category_from_string(std::string_view s) {
    for (const auto& [cat, name] : kCategoryNames)
        if (name == s) return cat;
    throw DataError("unknown category '" + std::string(s) + "'");
}

BenchmarkFormat format_from_string(std::string_view s) {
    if (s == "knowedit" || s == "knowedit_jsonl") return BenchmarkFormat::knowedit_jsonl;
    if (s == "native" || s == "native_jsonl") return BenchmarkFormat::native_jsonl;
    throw DataError("unknown benchmark format '" + std::string(s) + "' (expected knowedit or native)");
}

void check_record(const BenchmarkRecord& r) {
    const auto& d = r.descriptor;
    if (d.edit_input.empty()) field_error("edit_input", "must be non-empty");
    if (d.edit_target.empty()) field_error("edit_target", "must be non-empty");
    if (d.statement.empty()) field_error("statement", "must be non-empty");

    std::size_t reliability = 0;
    bool any_in_scope = false;
    std::set<std::pair<std::string, Scope>> seen;
    for (std::size_t i = 0; i < r.cases.size(); ++i) {
        const auto& c = r.cases[i];
        const std::string where = "cases[" + std::to_string(i) + "]";
        if (c.prompt.empty()) field_error(where + ".prompt", "must be non-empty");
        if (c.scope == Scope::in_scope) {
            any_in_scope = true;
            if (!c.gold_answer || c.gold_answer->empty())
                field_error(where + ".gold_answer", "in_scope cases must carry a gold answer");
        }
        const bool must_be_out = c.category == Category::unrelated_attribute || c.category == Category::one_to_many;
        const bool must_be_in = c.category == Category::reliability || c.category == Category::paraphrase
                                || c.category == Category::subject_alias || c.category == Category::compositional;
        if ((must_be_out && c.scope != Scope::out_of_scope) || (must_be_in && c.scope != Scope::in_scope))
            field_error(where + ".scope",
                        "category " + std::string(to_string(c.category)) + " inconsistent with scope "
                            + std::string(to_string(c.scope)));
        if (c.category == Category::reliability) {
            ++reliability;
            if (c.prompt != d.edit_input || c.gold_answer != d.edit_target)
                field_error(where, "reliability case must equal (edit_input, edit_target)");
        }
        if (!seen.emplace(c.prompt, c.scope).second)
            field_error(where + ".prompt", "duplicate (prompt, scope) pair");
    }
    if (!any_in_scope) field_error("cases", "at least one in_scope case required");
    if (reliability != 1) field_error("cases", "exactly one reliability case required");
}

BenchmarkRecord record_from_json(const json& j, BenchmarkFormat format) {
    if (!j.is_object()) throw DataError("record must be a JSON object");
    BenchmarkRecord r;
    auto& d = r.descriptor;

    if (auto it = j.find("id"); it != j.end() && !it->is_null())
        d.id = id_string(*it);
    else if (auto c = j.find("case_id"); c != j.end() && !c->is_null())
        d.id = id_string(*c);
    d.subject = optional_string(j, "subject");

    d.edit_input = j.contains("edit_input") ? required_string(j, "edit_input") : required_string(j, "prompt");
    d.edit_target = j.contains("edit_target") ? required_string(j, "edit_target") : required_string(j, "target_new");
    if (auto s = optional_string(j, "statement"))
        d.statement = *s;
    else
        d.statement = d.edit_input + " " + d.edit_target;
    d.statement = text::flatten_newlines(d.statement);

    r.original_answer = j.contains("original_answer") ? optional_string(j, "original_answer")
                                                      : optional_string(j, "ground_truth");

    std::vector<QueryCase> cases;
    if (auto it = j.find("cases"); it != j.end()) {
        if (!it->is_array()) field_error("cases", "must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& cj = (*it)[i];
            const std::string where = "cases[" + std::to_string(i) + "]";
            if (!cj.is_object()) field_error(where, "must be an object");
            QueryCase c;
            c.prompt = cj.value("prompt", std::string());
            if (auto g = cj.find("gold_answer"); g != cj.end() && !g->is_null()) c.gold_answer = first_answer(*g);
            try {
                c.scope = scope_from_string(cj.value("scope", std::string("in_scope")));
                c.category = category_from_string(cj.value("category", std::string("other")));
            } catch (const DataError& e) {
                field_error(where, e.what());
            }
            cases.push_back(std::move(c));
        }
    }
    for (const char* key : {"rephrase", "rephrase_prompt"}) {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) continue;
        std::vector<std::string> prompts;
        if (it->is_string()) {
            prompts.push_back(it->get<std::string>());
        } else if (it->is_array()) {
            for (const auto& p : *it)
                if (p.is_string()) prompts.push_back(p.get<std::string>());
        } else {
            field_error(key, "must be a string or list of strings");
        }
        for (auto& p : prompts) cases.push_back({std::move(p), d.edit_target, Scope::in_scope, Category::paraphrase});
    }
    if (auto it = j.find("portability"); it != j.end() && !it->is_null())
        append_query_items(*it, "portability", Scope::in_scope, Category::compositional, cases);
    if (auto it = j.find("locality"); it != j.end() && !it->is_null())
        append_query_items(*it, "locality", Scope::out_of_scope, Category::unrelated_attribute, cases);

    const bool has_reliability = std::any_of(cases.begin(), cases.end(), [](const QueryCase& c) {
        return c.category == Category::reliability;
    });
    if (!has_reliability)
        r.cases.push_back({d.edit_input, d.edit_target, Scope::in_scope, Category::reliability});

    if (format == BenchmarkFormat::knowedit_jsonl) {
        std::set<std::pair<std::string, Scope>> seen{{d.edit_input, Scope::in_scope}};
        for (auto& c : cases) {
            if (c.category == Category::reliability || seen.emplace(c.prompt, c.scope).second)
                r.cases.push_back(std::move(c));
        }
    } else {
        for (auto& c : cases) r.cases.push_back(std::move(c));
    }

    if (auto it = j.find("metadata"); it != j.end() && it->is_object()) r.metadata = *it;
    for (const auto& [key, value] : j.items()) {
        if (!kKnownKeys.contains(key)) r.metadata[key] = value;
    }

    check_record(r);
    return r;
}

Benchmark parse_benchmark(std::istream& in, BenchmarkFormat format) {
    Benchmark out;
    std::unordered_map<std::string, std::size_t> id_line;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        BenchmarkRecord r;
        try {
            r = record_from_json(j, format);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (r.descriptor.id.empty()) r.descriptor.id = "L" + std::to_string(line_no);
        auto [it, inserted] = id_line.emplace(r.descriptor.id, line_no);
        if (!inserted)
            throw DataError("duplicate id '" + r.descriptor.id + "' on lines " + std::to_string(it->second) + " and "
                            + std::to_string(line_no));
        out.push_back(std::move(r));
    }
    return out;
}

Benchmark load_benchmark(const std::filesystem::path& path, BenchmarkFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open benchmark file " + path.string());
    return parse_benchmark(in, format);
}

json to_native_json(const BenchmarkRecord& r) {
    json j;
    j["id"] = r.descriptor.id;
    if (r.descriptor.subject) j["subject"] = *r.descriptor.subject;
    j["edit_input"] = r.descriptor.edit_input;
    j["edit_target"] = r.descriptor.edit_target;
    j["statement"] = r.descriptor.statement;
    if (r.original_answer) j["original_answer"] = *r.original_answer;
    json cases = json::array();
    for (const auto& c : r.cases) {
        json cj{{"prompt", c.prompt}, {"scope", to_string(c.scope)}, {"category", to_string(c.category)}};
        if (c.gold_answer) cj["gold_answer"] = *c.gold_answer;
        cases.push_back(std::move(cj));
    }
    j["cases"] = std::move(cases);
    if (!r.metadata.empty()) j["metadata"] = r.metadata;
    return j;
}

void write_native(const Benchmark& benchmark, std::ostream& out) {
    for (const auto& r : benchmark) out << to_native_json(r).dump() << '\n';
}

void save_native(const Benchmark& benchmark, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_native(benchmark, out);
}

ValidationReport validate(const Benchmark& benchmark) {
    ValidationReport report;
    report.records = benchmark.size();
    for (const auto& r : benchmark) {
        std::size_t out_of_scope = 0;
        for (const auto& c : r.cases) {
            ++report.total_cases;
            ++report.per_scope[c.scope];
            ++report.per_category[c.category];
            if (c.scope == Scope::out_of_scope) ++out_of_scope;
        }
        if (out_of_scope == 0) report.warnings.push_back("record " + r.descriptor.id + ": no out_of_scope cases");
        if (!r.original_answer)
            report.warnings.push_back("record " + r.descriptor.id + ": no original_answer");
    }
    return report;
}

json to_json(const ValidationReport& report) {
    json j;
    j["records"] = report.records;
    j["total_cases"] = report.total_cases;
    for (const auto& [scope, n] : report.per_scope) j["per_scope"][std::string(to_string(scope))] = n;
    for (const auto& [cat, n] : report.per_category) j["per_category"][std::string(to_string(cat))] = n;
    j["warnings"] = report.warnings;
    return j;
}

} // namespace lte
