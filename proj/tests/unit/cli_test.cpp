#include "lte/cli.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = lte::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Writes a synthetic benchmark plus mock oracle into dir.
void synth(const testutil::TempDir& dir, int records, const std::vector<std::string>& extra = {}) {
    std::vector<std::string> args{"synth", "--records", std::to_string(records), "--out", (dir / "syn.jsonl").string(),
                                  "--mock-out", (dir / "mock.json").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
}

} // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    const auto no_data = run({"eval"});
    EXPECT_EQ(no_data.code, 2);
    EXPECT_NE(no_data.err.find("--data"), std::string::npos);
    EXPECT_EQ(run({"eval", "--data", "x.jsonl", "--bogus-flag"}).code, 2);
    EXPECT_EQ(run({"eval", "--data", "x.jsonl", "--mode", "parallel"}).code, 2);
}

TEST(Cli, HelpExitsZero) {
    const auto r = run({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("build-data"), std::string::npos);
    EXPECT_EQ(run({"eval", "--help"}).code, 0);
}

TEST(Cli, RuntimeErrorsExitOneWithJson) {
    const auto r = run({"ingest", "--data", "/nonexistent/file.jsonl"});
    EXPECT_EQ(r.code, 1);
    const auto j = json::parse(r.err);
    EXPECT_EQ(j.at("kind"), "data");
    EXPECT_TRUE(j.contains("error"));
}

TEST(Cli, SynthAndIngest) {
    testutil::TempDir dir;
    synth(dir, 7);
    const auto r = run({"ingest", "--data", (dir / "syn.jsonl").string(), "--out", (dir / "copy.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(testutil::read_file(dir / "syn.jsonl"), testutil::read_file(dir / "copy.jsonl"));
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.at((dir / "syn.jsonl").string()).at("records"), 7) << r.out;
}

TEST(Cli, SingleEvalWritesReportAndManifest) {
    testutil::TempDir dir;
    synth(dir, 20);
    const auto out = dir / "eval";
    const auto r = run({"eval", "--data", (dir / "syn.jsonl").string(), "--mock-config", (dir / "mock.json").string(),
                        "--out-dir", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = json::parse(testutil::read_file(out / "report.json"));
    EXPECT_EQ(report.at("average").at("Edit Succ."), 100.0);
    const auto manifest = json::parse(testutil::read_file(out / "manifest.json"));
    EXPECT_EQ(manifest.at("command"), "eval");
    EXPECT_EQ(manifest.at("inputs")[0].at("name"), "syn");
    EXPECT_EQ(manifest.at("backend").at("kind"), "mock");
    EXPECT_EQ(manifest.at("run_config").at("mode"), "single");
    EXPECT_NE(r.out.find("Edit Succ."), std::string::npos);
    EXPECT_NE(r.out.find("syn "), std::string::npos);
}

TEST(Cli, SequentialEvalWritesOneReportPerSize) {
    testutil::TempDir dir;
    synth(dir, 30);
    const auto out = dir / "seq";
    const auto r = run({"eval", "--data", (dir / "syn.jsonl").string(), "--mock-config", (dir / "mock.json").string(),
                        "--mode", "sequential", "--sizes", "1,2,5,10,30", "--out-dir", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int n : {1, 2, 5, 10, 30}) {
        const auto path = out / ("report_sequential_n" + std::to_string(n) + ".json");
        ASSERT_TRUE(std::filesystem::exists(path)) << path;
        EXPECT_TRUE(std::filesystem::exists(out / ("report_sequential_n" + std::to_string(n) + ".txt")));
        EXPECT_EQ(json::parse(testutil::read_file(path)).at("size"), n);
    }
    const auto manifest = json::parse(testutil::read_file(out / "manifest.json"));
    EXPECT_EQ(manifest.at("reports").size(), 10u);
    EXPECT_EQ(manifest.at("embedder").at("kind"), "reference");
}

TEST(Cli, BuildDataIsByteIdenticalAcrossRuns) {
    testutil::TempDir dir;
    synth(dir, 25);
    auto build = [&](const std::string& name) {
        const auto r = run({"build-data", "--data", (dir / "syn.jsonl").string(), "--seed", "7", "--out",
                            (dir / name).string()});
        EXPECT_EQ(r.code, 0) << r.err;
        return testutil::read_file(dir / name);
    };
    const auto a = build("a.jsonl");
    const auto b = build("b.jsonl");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b);
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 100);
    const auto bad = run({"build-data", "--data", (dir / "syn.jsonl").string(), "--threefold", "0.5,0.5,0.5", "--out",
                          (dir / "c.jsonl").string()});
    EXPECT_EQ(bad.code, 1);
}

TEST(Cli, SnapshotAndInspect) {
    testutil::TempDir dir;
    synth(dir, 12);
    const auto snap = (dir / "bank.jsonl").string();
    ASSERT_EQ(run({"snapshot", "--data", (dir / "syn.jsonl").string(), "--out", snap}).code, 0);
    const auto r = run({"snapshot", "--inspect", snap});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(r.out).at("restored_count"), 12);
}

TEST(Cli, BenchTime) {
    testutil::TempDir dir;
    synth(dir, 10);
    const auto r = run({"bench-time", "--data", (dir / "syn.jsonl").string(), "--mock-config",
                        (dir / "mock.json").string(), "--out", (dir / "t.json").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("edit 0.00 s"), std::string::npos) << r.out;
    EXPECT_EQ(json::parse(testutil::read_file(dir / "t.json")).at("timing").at("edits"), 10);
}
