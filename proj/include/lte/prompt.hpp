#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace lte {

enum class InfoLayout {
    /// One "[Updated Information]" block, statements separated by newlines.
    single_block,
    /// The block header repeated once per statement.
    block_per_statement,
};

struct PromptTemplate {
    std::string info_prefix = "[Updated Information] ";
    std::string query_prefix = "[Query] ";
    InfoLayout layout = InfoLayout::single_block;

    /// Block marker used to detect an edit prompt (prefix without trailing whitespace).
    std::string info_marker() const;
};

PromptTemplate template_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PromptTemplate& t);

struct PromptBundle {
    std::vector<std::string> updated_information;
    std::string query;
    std::string rendered;
};

/// Renders "<info_prefix>s1\ns2...\n<query_prefix>query"; with no statements the
/// rendered prompt is the query itself. Statements are expected to be newline-free.
/// Throws std::invalid_argument on an empty query.
PromptBundle render(std::vector<std::string> updated_information, std::string query,
                    const PromptTemplate& tmpl = {});

} // namespace lte
