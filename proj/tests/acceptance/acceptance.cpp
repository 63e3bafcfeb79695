// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "lte/alignbuild.hpp"
#include "lte/harness.hpp"
#include "lte/metrics.hpp"
#include "lte/prompt.hpp"
#include "lte/service.hpp"
#include "lte/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace lte;
using nlohmann::json;

namespace {

// Collects failed expectations of one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    // Measured value printed whether or not the criterion passes.
    void note(const std::string& what) { notes_.push_back(what); }
    const std::vector<std::string>& failures() const { return failures_; }
    const std::vector<std::string>& notes() const { return notes_; }

private:
    std::vector<std::string> failures_;
    std::vector<std::string> notes_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(10);
    s << v;
    return s.str();
}

std::shared_ptr<const Embedder> reference(std::size_t dim = 256) {
    return std::make_shared<ReferenceEmbedder>(ReferenceEmbedderConfig{dim, 0});
}

// Paraphrase queries share only the subject with their statement; at the default
// 256 buckets hash collisions against 1000 distractors push a few out of the top 3.
constexpr std::size_t kMassDim = 2048;

synthetic::Corpus corpus(std::size_t records, std::uint64_t seed = 1) {
    synthetic::Options o;
    o.records = records;
    o.seed = seed;
    return synthetic::make_corpus(o);
}

// AC1: single editing with a perfect oracle.
void oracle_single(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    auto syn = corpus(100);
    MockBackend backend(syn.oracle);
    std::vector<NamedBenchmark> b{{"syn", syn.benchmark}};
    const auto r = harness::eval_single(b, backend, {});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& m = r.average;
    c.expect(m.edit_success == 100.0, "edit_success " + fmt(m.edit_success.value_or(-1)));
    c.expect(m.portability == 100.0, "portability " + fmt(m.portability.value_or(-1)));
    c.expect(m.locality == 100.0, "locality " + fmt(m.locality.value_or(-1)));
    c.expect(secs < 10.0, "runtime " + fmt(secs) + " s");
    c.note("runtime " + fmt(secs) + " s");
}

// AC2: batch and sequential editing stay at 100 as memory grows.
void mass_stability(Check& c) {
    auto syn = corpus(1000);
    MockBackend backend(syn.oracle);
    std::vector<NamedBenchmark> b{{"syn", syn.benchmark}};
    for (auto mode : {harness::Mode::batch, harness::Mode::sequential}) {
        harness::RunConfig cfg;
        cfg.mode = mode;
        cfg.sizes = harness::default_sizes(mode);
        const auto reports = harness::eval_mass(b, backend, reference(kMassDim), cfg);
        c.expect(reports.size() == cfg.sizes.size(), "report count");
        for (const auto& r : reports)
            c.expect(r.average.edit_success == 100.0, std::string(harness::to_string(mode)) + " n=" +
                                                          std::to_string(r.size) + " edit_success " +
                                                          fmt(r.average.edit_success.value_or(-1)));
    }
    MemoryBank bank(reference(kMassDim));
    for (const auto& r : syn.benchmark) bank.add_edit(r.descriptor);
    std::vector<std::pair<EntryId, RetrievalResult>> hits;
    for (const auto& e : bank.entries()) hits.emplace_back(e.entry_id, bank.retrieve(e.descriptor.statement, 1));
    const double p = metrics::p_at_1(hits);
    c.note("p_at_1 " + fmt(p) + " over " + std::to_string(bank.size()) + " entries");
    c.expect(bank.size() == 1000 && p == 1.0, "p_at_1 " + fmt(p) + " over " + std::to_string(bank.size()));
}

// AC3: fluency against a brute-force oracle.
void fluency_formula(Check& c) {
    std::mt19937_64 gen(7);
    const std::vector<std::string> vocab{"a", "b", "c", "the", "The", "cat", "sat", "mat", "on", "x"};
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int len = static_cast<int>(gen() % 50);
        std::string s;
        for (int t = 0; t < len; ++t) s += (t ? " " : "") + vocab[gen() % vocab.size()];
        worst = std::max(worst, std::abs(metrics::fluency(s) - oracle::fluency(s)));
    }
    c.expect(worst <= 1e-9, "max deviation " + fmt(worst));
    c.note("max deviation " + fmt(worst) + "; \"a b a b a b\" -> " + fmt(metrics::fluency("a b a b a b")));
    c.expect(metrics::fluency("a a a a a") == 0.0, "\"a a a a a\" -> " + fmt(metrics::fluency("a a a a a")));
    const double f = metrics::fluency("a b a b a b");
    c.expect(std::abs(f - 0.985476) <= 1e-6, "\"a b a b a b\" -> " + fmt(f));
}

// AC4: threefold branch frequencies, exact statement placement and exclusion.
void threefold_sampler(Check& c) {
    MemoryBank pool(reference());
    auto syn = corpus(50, 4);
    for (const auto& r : syn.benchmark) pool.add_edit(r.descriptor);
    // duplicates of some statements under other ids must never reach the block via retrieval
    for (int i = 0; i < 5; ++i) {
        auto d = syn.benchmark[static_cast<std::size_t>(i)].descriptor;
        d.id += "-dup";
        pool.add_edit(d);
    }
    const auto entries = pool.entries();
    align::ThreefoldConfig cfg;
    rng::Engine rng(2024);
    std::array<int, 3> counts{};
    int bad_exact = 0, leaked = 0;
    constexpr int kDraws = 10000;
    for (int i = 0; i < kDraws; ++i) {
        const auto& e = entries[static_cast<std::size_t>(i) % entries.size()];
        const auto d = align::threefold_updated_information(e, pool, cfg, rng);
        ++counts[static_cast<std::size_t>(d.drawn) - 1];
        if (std::count(d.statements.begin(), d.statements.end(), e.descriptor.statement) != 1) ++bad_exact;
        for (auto id : d.retrieved)
            if (pool.find(id)->descriptor.statement == e.descriptor.statement) ++leaked;
    }
    const std::array<double, 3> expected{0.5, 0.25, 0.25};
    for (std::size_t b = 0; b < 3; ++b) {
        const double frac = counts[b] / static_cast<double>(kDraws);
        c.expect(std::abs(frac - expected[b]) <= 0.02, "branch " + std::to_string(b + 1) + " fraction " + fmt(frac));
        c.note("branch " + std::to_string(b + 1) + " fraction " + fmt(frac));
    }
    c.expect(bad_exact == 0, std::to_string(bad_exact) + " lists without exactly one exact statement");
    c.expect(leaked == 0, std::to_string(leaked) + " retrieved copies of the exact statement");
}

// AC5: parallel data construction.
void data_construction(Check& c) {
    std::vector<NamedBenchmark> sources{{"syn", corpus(1000, 5).benchmark}};
    align::BuildConfig cfg;
    cfg.threefold.rng_seed = 99;
    const auto a = align::build_dataset(sources, reference(), cfg);
    const auto b = align::build_dataset(sources, reference(), cfg);
    c.expect(a.samples.size() == 4000, "samples " + std::to_string(a.samples.size()));
    for (std::size_t v = 0; v < 4; ++v)
        c.expect(a.stats.per_variant[v] == 1000, "variant " + std::to_string(v) + " count " +
                                                     std::to_string(a.stats.per_variant[v]));
    testutil::TempDir dir;
    align::export_sft(a, dir / "a.jsonl");
    align::export_sft(b, dir / "b.jsonl");
    const auto bytes = testutil::read_file(dir / "a.jsonl");
    c.expect(!bytes.empty() && bytes == testutil::read_file(dir / "b.jsonl"), "re-run output differs");
    int marked = 0;
    for (const auto& s : a.samples)
        if ((s.variant == align::Variant::in_scope_plain || s.variant == align::Variant::out_scope_plain) &&
            s.input_text.find("[Updated Information]") != std::string::npos)
            ++marked;
    c.expect(marked == 0, std::to_string(marked) + " plain inputs carry the marker");
}

// AC6: prompt golden strings.
void prompt_golden(Check& c) {
    const std::string q = "Who is married to the PM of the UK?";
    const auto p = render({"The current British Prime Minister is Rishi Sunak"}, q).rendered;
    c.expect(p == "[Updated Information] The current British Prime Minister is Rishi Sunak\n[Query] " + q,
             "rendered " + json(p).dump());
    c.expect(render({}, q).rendered == q, "empty render " + json(render({}, q).rendered).dump());
}

std::string random_sentence(std::mt19937_64& gen) {
    static const std::vector<std::string> vocab{"king", "queen", "capital", "river", "city", "born", "in", "the",
                                                "of", "plays", "for", "club", "married", "to", "is", "Paris"};
    std::string s;
    const int n = 2 + static_cast<int>(gen() % 6);
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[gen() % vocab.size()];
    return s;
}

// AC7: retrieval equals a naive full sort; snapshot/restore keeps rankings.
void retrieval_correctness(Check& c) {
    // the oracle ranks the embedder's own vectors with its own dot product and stable sort
    const auto emb = reference();
    std::mt19937_64 gen(31337);
    MemoryBank bank(emb);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 50; ++i) {
        const auto s = random_sentence(gen);
        bank.add_edit({"s" + std::to_string(i), std::nullopt, s, "t", s});
        rows.push_back(emb->embed(s).values);
    }
    testutil::TempDir dir;
    bank.snapshot(dir / "bank.jsonl");
    const auto restored = MemoryBank::restore(dir / "bank.jsonl", reference());
    auto ids = [](const RetrievalResult& r) {
        std::vector<std::size_t> out;
        for (const auto& e : r.entries) out.push_back(static_cast<std::size_t>(e.entry.seq));
        return out;
    };
    int mismatched = 0, restore_mismatched = 0;
    for (int q = 0; q < 20; ++q) {
        const auto query = random_sentence(gen);
        for (int k : {1, 3, 10, 50}) {
            const auto got = bank.retrieve(query, k);
            if (ids(got) != oracle::top_k(rows, emb->embed(query).values, static_cast<std::size_t>(k)))
                ++mismatched;
            const auto again = restored.retrieve(query, k);
            bool same = ids(again) == ids(got);
            for (std::size_t i = 0; same && i < got.entries.size(); ++i)
                same = again.entries[i].entry.entry_id == got.entries[i].entry.entry_id &&
                       again.entries[i].score == got.entries[i].score;
            if (!same) ++restore_mismatched;
        }
    }
    c.expect(mismatched == 0, std::to_string(mismatched) + " rankings differ from the oracle");
    c.expect(restore_mismatched == 0, std::to_string(restore_mismatched) + " rankings changed after restore");
}

// AC8: timing report shape.
void timing_shape(Check& c) {
    auto syn = corpus(10);
    MockBackend fast(syn.oracle);
    const auto t = harness::time_per_edit(syn.benchmark, fast, reference(), {});
    c.expect(t.edit_time_s < 0.01 && harness::format_seconds(t.edit_time_s) == "0.00",
             "edit_time " + fmt(t.edit_time_s));
    c.expect(std::abs(t.total_time_s - (t.edit_time_s + t.inference_time_s)) <= 1e-9, "total != edit + inference");
    auto slow_cfg = syn.oracle;
    slow_cfg.latency = std::chrono::milliseconds(50);
    MockBackend slow(slow_cfg);
    const auto s = harness::time_per_edit(syn.benchmark, slow, reference(), {});
    c.note("edit_time " + harness::format_seconds(t.edit_time_s) + " s; 50 ms stub inference_time " +
           fmt(s.inference_time_s) + " s");
    c.expect(s.edits == 10, "edits " + std::to_string(s.edits));
    c.expect(s.inference_time_s >= 0.05 && s.inference_time_s <= 0.10, "inference_time " + fmt(s.inference_time_s));
    c.expect(std::abs(s.total_time_s - (s.edit_time_s + s.inference_time_s)) <= 1e-9, "slow total mismatch");
}

// AC9: in-scope noise lowers edit success without touching locality.
void noise_calibration(Check& c) {
    auto syn = corpus(500, 8);  // 1000 edit-success cases
    auto cfg = syn.oracle;
    cfg.noise_rate = 0.2;
    cfg.noise_scope = NoiseScope::edited_only;
    cfg.rng_seed = 12345;
    MockBackend backend(cfg);
    std::vector<NamedBenchmark> b{{"syn", syn.benchmark}};
    const auto r = harness::eval_single(b, backend, {});
    const auto es = r.average.edit_success.value_or(-1);
    c.expect(r.average.n_edit_success == 1000, "cases " + std::to_string(r.average.n_edit_success));
    c.expect(std::abs(es - 80.0) <= 4.0, "edit_success " + fmt(es));
    c.note("edit_success " + fmt(es) + ", locality " + fmt(r.average.locality.value_or(-1)));
    c.expect(r.average.locality == 100.0, "locality " + fmt(r.average.locality.value_or(-1)));
}

// AC10: live service flow and concurrent load.
void service_contract(Check& c) {
    const std::string statement = "The current British Prime Minister is Rishi Sunak";
    const std::string question = "Who is married to the PM of the UK?";
    MockOracleConfig oc;
    oc.edit_table.push_back({statement, "married to the PM of the UK", "Akshata Murty"});
    oc.base_table.push_back({"married to the PM of the UK", "Carrie Johnson"});
    service::ServiceConfig sc;
    sc.port = 0;
    sc.threads = 16;
    service::Service svc(sc, MemoryBank(reference()), std::make_shared<MockBackend>(oc));
    const int port = svc.start();

    auto post = [&](httplib::Client& cl, const std::string& path, const json& body, int& status) -> json {
        auto res = cl.Post(path, body.dump(), "application/json");
        status = res ? res->status : 0;
        return res ? json::parse(res->body, nullptr, false) : json();
    };
    httplib::Client cl("127.0.0.1", port);
    int status = 0;
    const auto before = post(cl, "/query", {{"question", question}}, status);
    c.expect(status == 200 && before.value("rendered_prompt", "") == question, "empty-bank query");
    const auto added = post(cl, "/edits", {{"statement", statement}}, status);
    c.expect(status == 200 && added.contains("entry_id"), "POST /edits status " + std::to_string(status));
    const auto after = post(cl, "/query", {{"question", question}}, status);
    c.expect(status == 200 && after.value("answer", "") == "Akshata Murty", "edited answer " + after.dump());
    c.expect(after.contains("retrieved") && !after["retrieved"].empty() &&
                 after["retrieved"][0].value("entry_id", EntryId(-1)) == added.value("entry_id", EntryId(-2)),
             "top retrieved entry");

    constexpr int kReaders = 100, kQueries = 5, kWrites = 50;
    std::atomic<int> five_xx{0}, transport{0};
    std::vector<std::thread> threads;
    threads.emplace_back([&] {
        httplib::Client w("127.0.0.1", port);
        for (int i = 0; i < kWrites; ++i) {
            int st = 0;
            post(w, "/edits", {{"statement", "Load fact " + std::to_string(i) + " holds"}}, st);
            if (st == 0) ++transport;
            if (st >= 500) ++five_xx;
        }
    });
    for (int t = 0; t < kReaders; ++t)
        threads.emplace_back([&] {
            httplib::Client r("127.0.0.1", port);
            for (int i = 0; i < kQueries; ++i) {
                int st = 0;
                post(r, "/query", {{"question", question}}, st);
                if (st == 0) ++transport;
                if (st >= 500) ++five_xx;
            }
        });
    for (auto& t : threads) t.join();
    c.expect(five_xx == 0, std::to_string(five_xx.load()) + " 5xx replies");
    c.expect(transport == 0, std::to_string(transport.load()) + " transport errors");
    auto health = cl.Get("/healthz");
    const auto size = health ? json::parse(health->body).value("bank_size", -1) : -1;
    c.expect(size == 1 + kWrites, "bank_size " + std::to_string(size));
    c.note(std::to_string(kReaders * kQueries + kWrites) + " concurrent requests, " + std::to_string(five_xx.load()) +
           " 5xx, bank_size " + std::to_string(size));
    svc.stop();
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"AC1 oracle single editing 100/100/100 under 10 s", oracle_single},
        {"AC2 batch/sequential edit success 100 at every size, p@1 = 1 (reference dim " + std::to_string(kMassDim) + ")", mass_stability},
        {"AC3 fluency matches brute-force oracle", fluency_formula},
        {"AC4 threefold sampler frequencies and exclusion", threefold_sampler},
        {"AC5 parallel data 4000 samples 1:1:1:1, reproducible", data_construction},
        {"AC6 prompt golden strings", prompt_golden},
        {"AC7 retrieval equals naive full sort, survives restore", retrieval_correctness},
        {"AC8 timing report shape", timing_shape},
        {"AC9 noise calibration 80 +- 4 with locality 100", noise_calibration},
        {"AC10 service flow and concurrent load", service_contract},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = c.failures().empty();
        failed += !ok;
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "  (" << fmt(std::round(secs * 100) / 100) << " s)";
        for (const auto& n : c.notes()) std::cout << "\n         " << n;
        for (const auto& f : c.failures()) std::cout << "\n         FAILED: " << f;
        std::cout << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
