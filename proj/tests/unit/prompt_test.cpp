#include "lte/error.hpp"
#include "lte/prompt.hpp"

#include <gtest/gtest.h>

using namespace lte;

TEST(Prompt, GoldenSingleStatement) {
    const auto b = render({"The current British Prime Minister is Rishi Sunak"}, "Who is married to the PM of the UK?");
    EXPECT_EQ(b.rendered,
              "[Updated Information] The current British Prime Minister is Rishi Sunak\n"
              "[Query] Who is married to the PM of the UK?");
    EXPECT_EQ(b.query, "Who is married to the PM of the UK?");
    EXPECT_EQ(b.updated_information.size(), 1u);
}

TEST(Prompt, EmptyEditsRenderRawQuery) {
    EXPECT_EQ(render({}, "Who is married to the PM of the UK?").rendered, "Who is married to the PM of the UK?");
}

TEST(Prompt, MultipleStatementsShareOneBlock) {
    EXPECT_EQ(render({"A is B", "C is D", "E is F"}, "Q?").rendered,
              "[Updated Information] A is B\nC is D\nE is F\n[Query] Q?");
}

TEST(Prompt, BlockPerStatementLayout) {
    PromptTemplate t;
    t.layout = InfoLayout::block_per_statement;
    EXPECT_EQ(render({"A is B", "C is D"}, "Q?", t).rendered,
              "[Updated Information] A is B\n[Updated Information] C is D\n[Query] Q?");
}

TEST(Prompt, CustomPrefixesAndMarker) {
    const auto t = template_from_json({{"updated_information_prefix", "<info>  "}, {"query_prefix", "<q> "}});
    EXPECT_EQ(t.info_marker(), "<info>");
    EXPECT_EQ(render({"x"}, "y", t).rendered, "<info>  x\n<q> y");
    EXPECT_EQ(PromptTemplate{}.info_marker(), "[Updated Information]");
    EXPECT_EQ(template_from_json(to_json(t)).info_prefix, "<info>  ");
}

TEST(Prompt, Errors) {
    EXPECT_THROW(render({"x"}, ""), std::invalid_argument);
    EXPECT_THROW(template_from_json({{"layout", "grid"}}), DataError);
    EXPECT_THROW(template_from_json({{"query_prefix", ""}}), DataError);
}
