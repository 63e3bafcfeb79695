#include "lte/harness.hpp"

#include "lte/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace lte::harness {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kFailureSampleLimit = 10;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

template <class Fn>
void parallel_for(std::size_t n, unsigned parallelism, Fn&& fn) {
    const std::size_t threads = std::min<std::size_t>(std::max(parallelism, 1u), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
}

// One generation call (plus an optional plain baseline call) for one query case.
struct Job {
    std::size_t record = 0;
    const QueryCase* query_case = nullptr;
    std::optional<EntryId> gold_entry;
    std::optional<RetrievalResult> retrieval;
    std::optional<std::string> generated;
    std::optional<std::string> baseline;
    double seconds = 0.0;
    std::string error;
};

struct StepOutcome {
    metrics::MetricReport report;
    double inference_seconds = 0.0;
    std::size_t queries = 0;
    std::size_t calls = 0;
    std::size_t failed = 0;
    std::vector<std::string> failure_samples;
};

// Runs every query of the first `n_records` records of `benchmark`. Without a bank
// each record's own statement is injected (single editing).
StepOutcome run_step(const Benchmark& benchmark, std::size_t n_records, const MemoryBank* bank, Backend& backend,
                     const RunConfig& cfg) {
    std::vector<Job> jobs;
    std::unordered_map<std::string, EntryId> entry_of;
    if (bank)
        for (const auto& e : bank->entries()) entry_of[e.descriptor.id] = e.entry_id;

    for (std::size_t r = 0; r < n_records; ++r) {
        const auto& record = benchmark[r];
        for (const auto& c : record.cases) {
            Job j;
            j.record = r;
            j.query_case = &c;
            if (bank) {
                if (auto it = entry_of.find(record.descriptor.id); it != entry_of.end()) j.gold_entry = it->second;
            }
            jobs.push_back(std::move(j));
        }
    }

    const bool want_baseline = cfg.locality == metrics::LocalityMode::baseline_consistency;
    std::atomic<std::size_t> failed{0};
    std::atomic<bool> aborted{false};
    const auto total = jobs.size();
    const auto failure_budget = static_cast<std::size_t>(std::floor(cfg.max_failure_fraction * static_cast<double>(total)));

    parallel_for(jobs.size(), cfg.parallelism, [&](std::size_t i) {
        if (aborted.load()) return;
        Job& job = jobs[i];
        const auto& record = benchmark[job.record];
        const auto& c = *job.query_case;
        GenerationRequest req;
        req.max_new_tokens = cfg.max_new_tokens;
        req.temperature = cfg.temperature;
        try {
            const auto start = Clock::now();
            std::vector<std::string> statements;
            if (bank) {
                job.retrieval = bank->retrieve(c.prompt, cfg.k);
                for (const auto& s : job.retrieval->entries) statements.push_back(s.entry.descriptor.statement);
            } else if (!cfg.no_prefix_control) {
                statements.push_back(record.descriptor.statement);
            }
            req.prompt = render(std::move(statements), c.prompt, cfg.prompt).rendered;
            job.generated = backend.generate(req).text;
            job.seconds = seconds_since(start);
            if (want_baseline && c.scope == Scope::out_of_scope) {
                req.prompt = c.prompt;
                job.baseline = backend.generate(req).text;
            }
        } catch (const BackendError& e) {
            job.generated.reset();
            job.error = e.what();
            if (++failed > failure_budget) aborted = true;
        }
    });

    StepOutcome out;
    out.calls = total;
    out.failed = failed.load();
    for (const auto& j : jobs) {
        if (!j.error.empty() && out.failure_samples.size() < kFailureSampleLimit) out.failure_samples.push_back(j.error);
    }
    if (aborted)
        throw RunAborted("backend failures exceeded " + std::to_string(cfg.max_failure_fraction * 100.0) + "% ("
                         + std::to_string(out.failed) + " of " + std::to_string(total) + " calls)"
                         + (out.failure_samples.empty() ? "" : "; first: " + out.failure_samples.front()));

    std::vector<metrics::CaseResult> results;
    std::vector<std::pair<EntryId, RetrievalResult>> retrievals;
    std::vector<std::string> per_record_text(n_records);
    std::vector<bool> record_has_text(n_records, false);
    double case_fluency_sum = 0.0;
    std::size_t case_fluency_n = 0;

    for (auto& j : jobs) {
        if (!j.generated) continue;
        out.inference_seconds += j.seconds;
        ++out.queries;
        results.push_back(metrics::score_case(*j.query_case, *j.generated, j.baseline, cfg.match, cfg.locality));
        if (j.retrieval && j.gold_entry && j.query_case->scope == Scope::in_scope)
            retrievals.emplace_back(*j.gold_entry, *j.retrieval);
        if (cfg.fluency_unit == FluencyUnit::per_case) {
            case_fluency_sum += metrics::fluency(*j.generated, cfg.fluency_weights);
            ++case_fluency_n;
        } else {
            auto& text = per_record_text[j.record];
            if (record_has_text[j.record]) text += '\n';
            text += *j.generated;
            record_has_text[j.record] = true;
        }
    }

    auto& rep = out.report;
    rep.edit_success = metrics::dimension_accuracy(results, metrics::Dimension::edit_success, cfg.locality, cfg.match);
    rep.portability = metrics::dimension_accuracy(results, metrics::Dimension::portability, cfg.locality, cfg.match);
    rep.locality = metrics::dimension_accuracy(results, metrics::Dimension::locality, cfg.locality, cfg.match);
    for (const auto& r : results) {
        switch (metrics::dimension_of(r.query_case)) {
        case metrics::Dimension::edit_success: ++rep.n_edit_success; break;
        case metrics::Dimension::portability: ++rep.n_portability; break;
        case metrics::Dimension::locality: ++rep.n_locality; break;
        }
    }
    if (cfg.fluency_unit == FluencyUnit::per_case) {
        if (case_fluency_n) rep.fluency = case_fluency_sum / static_cast<double>(case_fluency_n);
        rep.n_fluency = case_fluency_n;
    } else {
        double sum = 0.0;
        for (std::size_t r = 0; r < n_records; ++r) {
            if (!record_has_text[r]) continue;
            sum += metrics::fluency(per_record_text[r], cfg.fluency_weights);
            ++rep.n_fluency;
        }
        if (rep.n_fluency) rep.fluency = sum / static_cast<double>(rep.n_fluency);
    }
    if (bank) {
        rep.n_retrievals = retrievals.size();
        if (!retrievals.empty()) {
            rep.p_at_1 = metrics::p_at_1(retrievals);
            rep.top_k_hit_rate = metrics::top_k_hit_rate(retrievals);
        }
    }
    return out;
}

struct StepTotals {
    double inference_seconds = 0.0;
    std::size_t queries = 0;
};

void absorb(EvalReport& report, const std::string& name, StepOutcome&& step, StepTotals& totals) {
    report.per_benchmark[name] = step.report;
    report.total_calls += step.calls;
    report.failed_calls += step.failed;
    for (auto& s : step.failure_samples)
        if (report.failure_samples.size() < kFailureSampleLimit) report.failure_samples.push_back(std::move(s));
    totals.inference_seconds += step.inference_seconds;
    totals.queries += step.queries;
}

void finish_timing(EvalReport& report, double edit_seconds, std::size_t edits, const StepTotals& totals) {
    auto& t = report.timing;
    t.edits = edits;
    t.queries = totals.queries;
    t.edit_time_s = edits ? edit_seconds / static_cast<double>(edits) : 0.0;
    t.inference_time_s = totals.queries ? totals.inference_seconds / static_cast<double>(totals.queries) : 0.0;
    t.total_time_s = t.edit_time_s + t.inference_time_s;
}

std::string fmt_fixed(double v, int decimals) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(decimals) << v;
    return os.str();
}

} // namespace

Mode mode_from_string(std::string_view s) {
    if (s == "single") return Mode::single;
    if (s == "batch") return Mode::batch;
    if (s == "sequential") return Mode::sequential;
    throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected single, batch or sequential)");
}

std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::single: return "single";
    case Mode::batch: return "batch";
    case Mode::sequential: return "sequential";
    }
    return "unknown";
}

std::vector<std::size_t> default_sizes(Mode m) {
    switch (m) {
    case Mode::batch: return {1, 10, 100, 1000};
    case Mode::sequential: return {1, 10, 100, 500, 1000};
    case Mode::single: return {};
    }
    return {};
}

void RunConfig::check() const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] == 0) throw std::invalid_argument("sizes must be positive");
        if (i && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("sizes must be strictly ascending");
    }
    if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
        throw std::invalid_argument("max_failure_fraction must be in [0, 1]");
    fluency_weights.check();
}

std::vector<std::size_t> RunConfig::effective_sizes() const {
    auto s = sizes.empty() ? default_sizes(mode) : sizes;
    if (eval_each_step && !s.empty()) {
        const auto max = s.back();
        s.resize(max);
        std::iota(s.begin(), s.end(), std::size_t{1});
    }
    return s;
}

ordered_json to_json(const RunConfig& c) {
    ordered_json j;
    j["mode"] = to_string(c.mode);
    j["sizes"] = c.effective_sizes();
    j["k"] = c.k;
    j["parallelism"] = c.parallelism;
    j["seed"] = c.seed;
    j["match"] = metrics::to_string(c.match);
    j["locality"] = metrics::to_string(c.locality);
    j["fluency_weights"] = {c.fluency_weights.bigram, c.fluency_weights.trigram};
    j["fluency_unit"] = c.fluency_unit == FluencyUnit::per_record ? "per_record" : "per_case";
    j["template"] = to_json(c.prompt);
    j["no_prefix_control"] = c.no_prefix_control;
    j["max_new_tokens"] = c.max_new_tokens;
    j["temperature"] = c.temperature;
    j["max_failure_fraction"] = c.max_failure_fraction;
    j["eval_each_step"] = c.eval_each_step;
    return j;
}

std::string format_seconds(double s) { return fmt_fixed(s, 2); }

metrics::MetricReport average_reports(const std::map<std::string, metrics::MetricReport>& per_benchmark) {
    metrics::MetricReport avg;
    if (per_benchmark.empty()) return avg;
    auto mean_of = [&](auto member) -> std::optional<double> {
        double sum = 0.0;
        for (const auto& [name, r] : per_benchmark) {
            const auto& v = r.*member;
            if (!v) return std::nullopt;
            sum += *v;
        }
        return sum / static_cast<double>(per_benchmark.size());
    };
    avg.edit_success = mean_of(&metrics::MetricReport::edit_success);
    avg.portability = mean_of(&metrics::MetricReport::portability);
    avg.locality = mean_of(&metrics::MetricReport::locality);
    avg.fluency = mean_of(&metrics::MetricReport::fluency);
    avg.p_at_1 = mean_of(&metrics::MetricReport::p_at_1);
    avg.top_k_hit_rate = mean_of(&metrics::MetricReport::top_k_hit_rate);
    for (const auto& [name, r] : per_benchmark) {
        avg.n_edit_success += r.n_edit_success;
        avg.n_portability += r.n_portability;
        avg.n_locality += r.n_locality;
        avg.n_fluency += r.n_fluency;
        avg.n_retrievals += r.n_retrievals;
    }
    return avg;
}

ordered_json to_json(const TimingReport& t) {
    return {{"edit_time_s", t.edit_time_s},
            {"inference_time_s", t.inference_time_s},
            {"total_time_s", t.total_time_s},
            {"edit_time", format_seconds(t.edit_time_s)},
            {"inference_time", format_seconds(t.inference_time_s)},
            {"total_time", format_seconds(t.total_time_s)},
            {"edits", t.edits},
            {"queries", t.queries}};
}

ordered_json to_json(const EvalReport& r) {
    ordered_json j;
    j["mode"] = to_string(r.mode);
    j["size"] = r.size;
    ordered_json per = ordered_json::object();
    for (const auto& [name, m] : r.per_benchmark) per[name] = metrics::to_json(m);
    j["per_benchmark"] = per;
    j["average"] = metrics::to_json(r.average);
    j["timing"] = to_json(r.timing);
    j["failures"] = {{"failed_calls", r.failed_calls}, {"total_calls", r.total_calls}, {"samples", r.failure_samples}};
    j["config"] = to_json(r.config);
    return j;
}

std::string render_table(const EvalReport& r) {
    std::ostringstream os;
    auto cell = [](const std::optional<double>& v, int decimals) { return v ? fmt_fixed(*v, decimals) : std::string("-"); };
    auto row = [&](const std::string& name, const metrics::MetricReport& m) {
        os << std::left << std::setw(20) << name << std::right << " | " << std::setw(10) << cell(m.edit_success, 2)
           << " | " << std::setw(11) << cell(m.portability, 2) << " | " << std::setw(8) << cell(m.locality, 2) << " | "
           << std::setw(7) << cell(m.fluency, 2) << '\n';
    };
    os << "mode=" << to_string(r.mode);
    if (r.mode != Mode::single) os << " size=" << r.size;
    os << '\n';
    os << std::left << std::setw(20) << "Benchmark" << std::right << " | " << std::setw(10) << "Edit Succ." << " | "
       << std::setw(11) << "Portability" << " | " << std::setw(8) << "Locality" << " | " << std::setw(7) << "Fluency"
       << '\n';
    os << std::string(70, '-') << '\n';
    for (const auto& [name, m] : r.per_benchmark) row(name, m);
    if (r.per_benchmark.size() > 1) row("Average", r.average);
    os << "edit " << format_seconds(r.timing.edit_time_s) << " s / inference " << format_seconds(r.timing.inference_time_s)
       << " s / total " << format_seconds(r.timing.total_time_s) << " s per edit";
    if (r.failed_calls) os << "; " << r.failed_calls << " of " << r.total_calls << " backend calls failed";
    os << '\n';
    return os.str();
}

EvalReport eval_single(std::span<const NamedBenchmark> benchmarks, Backend& backend, const RunConfig& cfg) {
    cfg.check();
    std::size_t records = 0;
    for (const auto& b : benchmarks) records += b.records.size();
    if (records == 0) throw RunAborted("no records");

    EvalReport report;
    report.mode = Mode::single;
    report.config = cfg;
    StepTotals totals;
    for (const auto& b : benchmarks) {
        if (b.records.empty()) continue;
        absorb(report, b.name, run_step(b.records, b.records.size(), nullptr, backend, cfg), totals);
    }
    report.average = average_reports(report.per_benchmark);
    finish_timing(report, 0.0, 0, totals);
    return report;
}

std::vector<EvalReport> eval_mass(std::span<const NamedBenchmark> benchmarks, Backend& backend,
                                  std::shared_ptr<const Embedder> embedder, const RunConfig& cfg) {
    cfg.check();
    if (cfg.mode == Mode::single) throw std::invalid_argument("eval_mass: mode must be batch or sequential");
    const auto sizes = cfg.effective_sizes();
    if (sizes.empty()) throw std::invalid_argument("eval_mass: no sizes");
    if (benchmarks.empty()) throw RunAborted("no records");
    for (const auto& b : benchmarks) {
        if (b.records.size() < sizes.back())
            throw RunAborted("benchmark '" + b.name + "' has " + std::to_string(b.records.size())
                             + " records, fewer than the largest size " + std::to_string(sizes.back()));
    }
    if (cfg.snapshot_dir) std::filesystem::create_directories(*cfg.snapshot_dir);

    // Sequential state: one growing bank per benchmark plus its insertion time.
    std::map<std::string, std::unique_ptr<MemoryBank>> banks;
    std::map<std::string, double> insert_seconds;
    std::size_t inserted = 0;

    if (cfg.mode == Mode::sequential) {
        for (const auto& b : benchmarks) banks[b.name] = std::make_unique<MemoryBank>(embedder);
        if (!cfg.resume_snapshots.empty()) {
            std::optional<std::size_t> restored;
            for (const auto& b : benchmarks) {
                auto it = cfg.resume_snapshots.find(b.name);
                if (it == cfg.resume_snapshots.end()) throw RunAborted("no resume snapshot for benchmark '" + b.name + "'");
                auto bank = std::make_unique<MemoryBank>(MemoryBank::restore(it->second, embedder));
                const auto entries = bank->entries();
                for (std::size_t i = 0; i < entries.size(); ++i) {
                    if (i >= b.records.size() || entries[i].descriptor != b.records[i].descriptor)
                        throw RunAborted("resume snapshot for '" + b.name + "' does not match the benchmark stream");
                }
                if (restored && *restored != entries.size())
                    throw RunAborted("resume snapshots hold different stream positions");
                restored = entries.size();
                banks[b.name] = std::move(bank);
            }
            inserted = restored.value_or(0);
        }
    }

    std::vector<EvalReport> reports;
    for (const std::size_t n : sizes) {
        if (cfg.mode == Mode::sequential && n <= inserted) continue;

        EvalReport report;
        report.mode = cfg.mode;
        report.size = n;
        report.config = cfg;
        StepTotals totals;
        double edit_seconds = 0.0;
        std::size_t edits = 0;

        for (const auto& b : benchmarks) {
            MemoryBank* bank = nullptr;
            std::unique_ptr<MemoryBank> fresh;
            if (cfg.mode == Mode::batch) {
                fresh = std::make_unique<MemoryBank>(embedder);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto start = Clock::now();
                    fresh->add_edit(b.records[i].descriptor);
                    edit_seconds += seconds_since(start);
                    ++edits;
                }
                bank = fresh.get();
            } else {
                bank = banks.at(b.name).get();
                auto& spent = insert_seconds[b.name];
                for (std::size_t i = bank->size(); i < n; ++i) {
                    const auto start = Clock::now();
                    bank->add_edit(b.records[i].descriptor);
                    spent += seconds_since(start);
                }
                edit_seconds += spent;
                edits += n - std::min(n, inserted);
            }
            if (cfg.snapshot_dir)
                bank->snapshot(*cfg.snapshot_dir / (b.name + "_memory_n" + std::to_string(n) + ".jsonl"));
            absorb(report, b.name, run_step(b.records, n, bank, backend, cfg), totals);
        }
        report.average = average_reports(report.per_benchmark);
        finish_timing(report, edit_seconds, edits, totals);
        reports.push_back(std::move(report));
    }
    return reports;
}

TimingReport time_per_edit(const Benchmark& benchmark, Backend& backend, std::shared_ptr<const Embedder> embedder,
                           const RunConfig& cfg) {
    constexpr std::size_t kEdits = 10;
    if (benchmark.size() < kEdits)
        throw RunAborted("time_per_edit needs " + std::to_string(kEdits) + " records, got " + std::to_string(benchmark.size()));
    cfg.check();

    MemoryBank bank(std::move(embedder));
    double edit_seconds = 0.0;
    for (std::size_t i = 0; i < kEdits; ++i) {
        const auto start = Clock::now();
        bank.add_edit(benchmark[i].descriptor);
        edit_seconds += seconds_since(start);
    }

    double inference_seconds = 0.0;
    for (std::size_t i = 0; i < kEdits; ++i) {
        const auto& d = benchmark[i].descriptor;
        GenerationRequest req;
        req.max_new_tokens = cfg.max_new_tokens;
        req.temperature = cfg.temperature;
        const auto start = Clock::now();
        std::vector<std::string> statements;
        for (const auto& s : bank.retrieve(d.edit_input, cfg.k).entries) statements.push_back(s.entry.descriptor.statement);
        req.prompt = render(std::move(statements), d.edit_input, cfg.prompt).rendered;
        try {
            backend.generate(req);
        } catch (const BackendError& e) {
            throw RunAborted(std::string("time_per_edit: backend failure: ") + e.what());
        }
        inference_seconds += seconds_since(start);
    }

    TimingReport t;
    t.edits = kEdits;
    t.queries = kEdits;
    t.edit_time_s = edit_seconds / static_cast<double>(kEdits);
    t.inference_time_s = inference_seconds / static_cast<double>(kEdits);
    t.total_time_s = t.edit_time_s + t.inference_time_s;
    return t;
}

std::size_t fill_original_answers(Benchmark& benchmark, Backend& backend, const RunConfig& cfg) {
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < benchmark.size(); ++i)
        if (!benchmark[i].original_answer) missing.push_back(i);
    std::vector<std::optional<std::string>> answers(missing.size());
    parallel_for(missing.size(), cfg.parallelism, [&](std::size_t m) {
        GenerationRequest req;
        req.prompt = benchmark[missing[m]].descriptor.edit_input;
        req.max_new_tokens = cfg.max_new_tokens;
        req.temperature = cfg.temperature;
        try {
            auto text = backend.generate(req).text;
            if (!text.empty()) answers[m] = std::move(text);
        } catch (const BackendError&) {
        }
    });
    std::size_t filled = 0;
    for (std::size_t m = 0; m < missing.size(); ++m) {
        if (!answers[m]) continue;
        benchmark[missing[m]].original_answer = std::move(answers[m]);
        ++filled;
    }
    return filled;
}

} // namespace lte::harness
