#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lte {

/// One unit of updated knowledge: the edit pair (x*, y*) and its rendered statement.
struct EditDescriptor {
    std::string id;
    std::optional<std::string> subject;
    std::string edit_input;
    std::string edit_target;
    std::string statement;

    bool operator==(const EditDescriptor&) const = default;
};

enum class Scope { in_scope, out_of_scope };

enum class Category {
    reliability,
    paraphrase,
    subject_alias,
    compositional,
    one_to_many,
    unrelated_attribute,
    free_text,
    other,
};

std::string_view to_string(Scope s);
std::string_view to_string(Category c);
Scope scope_from_string(std::string_view s);
Category category_from_string(std::string_view s);

struct QueryCase {
    std::string prompt;
    std::optional<std::string> gold_answer;
    Scope scope = Scope::in_scope;
    Category category = Category::other;

    bool operator==(const QueryCase&) const = default;
};

struct BenchmarkRecord {
    EditDescriptor descriptor;
    std::optional<std::string> original_answer;
    std::vector<QueryCase> cases;
    /// Source fields the loader did not interpret, preserved verbatim.
    nlohmann::json metadata = nlohmann::json::object();

    bool operator==(const BenchmarkRecord&) const = default;
};

using Benchmark = std::vector<BenchmarkRecord>;

/// A benchmark tagged with its source name ("zsre", "counterfact", ...).
struct NamedBenchmark {
    std::string name;
    Benchmark records;
};

enum class BenchmarkFormat { knowedit_jsonl, native_jsonl };

/// Accepts "knowedit", "knowedit_jsonl", "native", "native_jsonl".
BenchmarkFormat format_from_string(std::string_view s);

/// Throws DataError on malformed lines (with the 1-based line number),
/// invariant violations (naming the field) and duplicate ids (naming both lines).
Benchmark load_benchmark(const std::filesystem::path& path, BenchmarkFormat format);
Benchmark parse_benchmark(std::istream& in, BenchmarkFormat format);

/// Checks the BenchmarkRecord / QueryCase invariants, throwing DataError naming the field.
void check_record(const BenchmarkRecord& record);

/// Writes the native JSONL schema; reloading with native_jsonl yields an equal Benchmark.
void write_native(const Benchmark& benchmark, std::ostream& out);
void save_native(const Benchmark& benchmark, const std::filesystem::path& path);
nlohmann::json to_native_json(const BenchmarkRecord& record);

/// Builds a record from one native (or KnowEdit-compatible) JSON object.
BenchmarkRecord record_from_json(const nlohmann::json& j, BenchmarkFormat format);

struct ValidationReport {
    std::size_t records = 0;
    std::size_t total_cases = 0;
    std::map<Scope, std::size_t> per_scope;
    std::map<Category, std::size_t> per_category;
    std::vector<std::string> warnings;
};

ValidationReport validate(const Benchmark& benchmark);
nlohmann::json to_json(const ValidationReport& report);

} // namespace lte
