#include "lte/prompt.hpp"

#include "lte/error.hpp"

#include <stdexcept>

namespace lte {

std::string PromptTemplate::info_marker() const {
    auto end = info_prefix.find_last_not_of(" \t");
    return end == std::string::npos ? info_prefix : info_prefix.substr(0, end + 1);
}

PromptTemplate template_from_json(const nlohmann::json& j) {
    PromptTemplate t;
    t.info_prefix = j.value("updated_information_prefix", t.info_prefix);
    t.query_prefix = j.value("query_prefix", t.query_prefix);
    const auto layout = j.value("layout", std::string("single_block"));
    if (layout == "single_block")
        t.layout = InfoLayout::single_block;
    else if (layout == "block_per_statement")
        t.layout = InfoLayout::block_per_statement;
    else
        throw DataError("template: unknown layout '" + layout + "'");
    if (t.info_prefix.empty() || t.query_prefix.empty()) throw DataError("template: prefixes must be non-empty");
    return t;
}

nlohmann::json to_json(const PromptTemplate& t) {
    return {{"updated_information_prefix", t.info_prefix},
            {"query_prefix", t.query_prefix},
            {"layout", t.layout == InfoLayout::single_block ? "single_block" : "block_per_statement"}};
}

PromptBundle render(std::vector<std::string> updated_information, std::string query, const PromptTemplate& tmpl) {
    if (query.empty()) throw std::invalid_argument("render: query must be non-empty");
    PromptBundle b{std::move(updated_information), std::move(query), {}};
    if (b.updated_information.empty()) {
        b.rendered = b.query;
        return b;
    }
    std::string& out = b.rendered;
    if (tmpl.layout == InfoLayout::single_block) {
        out = tmpl.info_prefix;
        for (std::size_t i = 0; i < b.updated_information.size(); ++i) {
            if (i) out += '\n';
            out += b.updated_information[i];
        }
        out += '\n';
    } else {
        for (const auto& s : b.updated_information) {
            out += tmpl.info_prefix;
            out += s;
            out += '\n';
        }
    }
    out += tmpl.query_prefix;
    out += b.query;
    return b;
}

} // namespace lte
