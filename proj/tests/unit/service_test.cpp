#include "lte/error.hpp"
#include "lte/service.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>

using namespace lte;
using namespace lte::service;
using nlohmann::json;

namespace {

const std::string kStatement = "The current British Prime Minister is Rishi Sunak";
const std::string kQuestion = "Who is married to the PM of the UK?";

std::shared_ptr<MockBackend> pm_backend() {
    MockOracleConfig c;
    c.edit_table.push_back({kStatement, "married to the PM of the UK", "Akshata Murty"});
    c.base_table.push_back({"married to the PM of the UK", "Carrie Johnson"});
    return std::make_shared<MockBackend>(c);
}

class FailingBackend final : public Backend {
public:
    GenerationResult generate(const GenerationRequest&) override { throw BackendError("upstream exploded", 503); }
    std::string id() const override { return "failing"; }
};

ServiceConfig ephemeral(unsigned threads = 8) {
    ServiceConfig c;
    c.port = 0;
    c.threads = threads;
    return c;
}

MemoryBank empty_bank() { return MemoryBank(std::make_shared<ReferenceEmbedder>()); }

json post(httplib::Client& c, const std::string& path, const json& body, int& status) {
    auto res = c.Post(path, body.dump(), "application/json");
    if (!res) {
        status = 0;
        return {{"transport_error", httplib::to_string(res.error())}};
    }
    status = res->status;
    return json::parse(res->body);
}

} // namespace

TEST(Service, EditThenQueryOverHttp) {
    Service svc(ephemeral(), empty_bank(), pm_backend());
    const int port = svc.start();
    httplib::Client c("127.0.0.1", port);
    int status = 0;

    auto before = post(c, "/query", {{"question", kQuestion}}, status);
    EXPECT_EQ(status, 200);
    EXPECT_EQ(before.at("answer"), "Carrie Johnson");
    EXPECT_EQ(before.at("rendered_prompt"), kQuestion);
    EXPECT_TRUE(before.at("retrieved").empty());

    auto added = post(c, "/edits", {{"statement", kStatement}}, status);
    ASSERT_EQ(status, 200);
    const auto id = added.at("entry_id").get<EntryId>();
    post(c, "/edits", {{"statement", "The tallest mountain on Earth is Everest"}}, status);

    auto after = post(c, "/query", {{"question", kQuestion}}, status);
    EXPECT_EQ(status, 200);
    EXPECT_EQ(after.at("answer"), "Akshata Murty");
    EXPECT_EQ(after.at("retrieved")[0].at("entry_id"), id);
    EXPECT_EQ(after.at("retrieved")[0].at("statement"), kStatement);
    EXPECT_EQ(after.at("retrieved").size(), 2u);
    EXPECT_EQ(after.at("rendered_prompt").get<std::string>().rfind("[Updated Information] " + kStatement + "\n", 0), 0u);

    auto one = post(c, "/query", {{"question", kQuestion}, {"k", 1}}, status);
    EXPECT_EQ(one.at("retrieved").size(), 1u);

    auto health = c.Get("/healthz");
    ASSERT_TRUE(health);
    EXPECT_EQ(json::parse(health->body).at("bank_size"), 2);

    auto del = c.Delete("/edits/" + std::to_string(id));
    ASSERT_TRUE(del);
    EXPECT_EQ(del->status, 200);
    auto gone = c.Delete("/edits/" + std::to_string(id));
    EXPECT_EQ(gone->status, 404);
    EXPECT_EQ(post(c, "/query", {{"question", kQuestion}}, status).at("answer"), "Carrie Johnson");
    svc.stop();
}

TEST(Service, RejectsBadRequestsWithField) {
    Service svc(ephemeral(), empty_bank(), pm_backend());
    auto r = svc.add_edit(R"({"statement": ""})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body.at("field"), "statement");
    r = svc.add_edit(R"({"statement": 5})");
    EXPECT_EQ(r.body.at("field"), "statement");
    r = svc.add_edit("not json");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body.at("field"), "body");
    r = svc.query(R"({"question": "x", "k": 0})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body.at("field"), "k");
    r = svc.query(R"({})");
    EXPECT_EQ(r.body.at("field"), "question");
    EXPECT_EQ(svc.remove_edit("abc").status, 400);
    EXPECT_EQ(svc.remove_edit("12").status, 404);
    EXPECT_EQ(svc.snapshot("{}").status, 400);
}

TEST(Service, BackendFailureIs502) {
    Service svc(ephemeral(), empty_bank(), std::make_shared<FailingBackend>());
    const auto r = svc.query(json{{"question", "anything"}}.dump());
    EXPECT_EQ(r.status, 502);
    EXPECT_NE(r.body.at("upstream").get<std::string>().find("upstream exploded"), std::string::npos);
}

TEST(Service, QueryDoesNotMutateMemory) {
    Service svc(ephemeral(), empty_bank(), pm_backend());
    svc.add_edit(json{{"statement", kStatement}}.dump());
    const auto before = svc.bank().entries();
    for (int i = 0; i < 5; ++i) svc.query(json{{"question", kQuestion}}.dump());
    EXPECT_EQ(svc.bank().entries().size(), before.size());
    EXPECT_EQ(svc.bank().entries()[0].descriptor, before[0].descriptor);
}

TEST(Service, SnapshotAndRestore) {
    testutil::TempDir dir;
    Service svc(ephemeral(), empty_bank(), pm_backend());
    svc.add_edit(json{{"statement", kStatement}}.dump());
    const auto path = (dir / "bank.jsonl").string();
    const auto r = svc.snapshot(json{{"path", path}}.dump());
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body.at("count"), 1);
    Service restored(ephemeral(), MemoryBank::restore(path, std::make_shared<ReferenceEmbedder>()), pm_backend());
    EXPECT_EQ(restored.query(json{{"question", kQuestion}}.dump()).body.at("answer"), "Akshata Murty");
    // new edits never reuse restored ids
    const auto id = restored.add_edit(json{{"statement", "x y"}}.dump()).body.at("entry_id").get<EntryId>();
    EXPECT_GT(id, restored.bank().entries()[0].entry_id);
}

TEST(Service, ConcurrentReadersAndWriter) {
    Service svc(ephemeral(16), empty_bank(), pm_backend());
    const int port = svc.start();
    {
        httplib::Client c("127.0.0.1", port);
        int status = 0;
        post(c, "/edits", {{"statement", kStatement}}, status);
        ASSERT_EQ(status, 200);
    }
    constexpr int kReaders = 100;
    constexpr int kQueriesEach = 5;
    constexpr int kWrites = 50;
    std::atomic<int> server_errors{0};
    std::atomic<int> transport_errors{0};
    std::atomic<int> wrong{0};
    std::mutex first_error_mu;
    std::string first_error;
    std::vector<std::thread> threads;
    threads.emplace_back([&] {
        httplib::Client c("127.0.0.1", port);
        for (int i = 0; i < kWrites; ++i) {
            int status = 0;
            post(c, "/edits", {{"statement", "Filler fact number " + std::to_string(i) + " is true"}}, status);
            if (status == 0) ++transport_errors;
            else if (status >= 500) ++server_errors;
        }
    });
    for (int t = 0; t < kReaders; ++t) {
        threads.emplace_back([&] {
            httplib::Client c("127.0.0.1", port);
            for (int i = 0; i < kQueriesEach; ++i) {
                int status = 0;
                const auto j = post(c, "/query", {{"question", kQuestion}}, status);
                if (status == 0) {
                    if (transport_errors++ == 0) {
                        std::lock_guard lock(first_error_mu);
                        first_error = j.dump();
                    }
                } else if (status >= 500) ++server_errors;
                else if (j.at("answer") != "Akshata Murty") ++wrong;
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(server_errors.load(), 0);
    EXPECT_EQ(transport_errors.load(), 0) << first_error;
    EXPECT_EQ(wrong.load(), 0);
    EXPECT_EQ(svc.bank().size(), 1u + kWrites);
    httplib::Client c("127.0.0.1", port);
    EXPECT_EQ(json::parse(c.Get("/healthz")->body).at("bank_size"), 1 + kWrites);
    svc.stop();
}
