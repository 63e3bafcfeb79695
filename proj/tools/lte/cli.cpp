#include "lte/cli.hpp"

#include "lte/alignbuild.hpp"
#include "lte/backend.hpp"
#include "lte/corpus.hpp"
#include "lte/embed.hpp"
#include "lte/error.hpp"
#include "lte/harness.hpp"
#include "lte/memory.hpp"
#include "lte/service.hpp"
#include "lte/synthesis.hpp"
#include "lte/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace lte::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw DataError(path.string() + ": malformed JSON");
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(piece, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != piece.size() || v <= 0)
            throw std::invalid_argument("--sizes: bad entry '" + piece + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::pair<std::string, std::string> split_assignment(const std::string& s, const char* flag) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
        throw std::invalid_argument(std::string(flag) + ": expected name=value, got '" + s + "'");
    return {s.substr(0, eq), s.substr(eq + 1)};
}

struct DataOpts {
    std::vector<std::string> paths;
    std::string format = "native";
};

void add_data_options(CLI::App* sub, DataOpts& o, bool required = true) {
    auto* opt = sub->add_option("--data", o.paths, "benchmark JSONL file (repeatable; name = file stem)");
    if (required) opt->required();
    sub->add_option("--format", o.format, "knowedit | native")
        ->check(CLI::IsMember({"knowedit", "knowedit_jsonl", "native", "native_jsonl"}))
        ->capture_default_str();
}

std::vector<NamedBenchmark> load_all(const DataOpts& o) {
    const auto fmt = format_from_string(o.format);
    std::vector<NamedBenchmark> out;
    std::set<std::string> names;
    for (const auto& p : o.paths) {
        std::string name = fs::path(p).stem().string();
        for (int i = 2; !names.insert(name).second; ++i) name = fs::path(p).stem().string() + "_" + std::to_string(i);
        out.push_back({name, load_benchmark(p, fmt)});
    }
    return out;
}

struct EmbedOpts {
    std::string kind = "reference";
    std::size_t dim = 256;
    std::uint64_t seed = 0;
    std::string url;
    std::string model;
};

void add_embed_options(CLI::App* sub, EmbedOpts& o) {
    sub->add_option("--embedder", o.kind, "reference | remote")
        ->check(CLI::IsMember({"reference", "remote"}))
        ->capture_default_str();
    sub->add_option("--embed-dim", o.dim, "reference embedder dimension")->capture_default_str();
    sub->add_option("--embed-seed", o.seed, "reference embedder hash seed")->capture_default_str();
    sub->add_option("--embed-url", o.url, "remote embedding service base URL");
    sub->add_option("--embed-model", o.model, "remote embedding model name");
}

json embed_json(const EmbedOpts& o) {
    json j{{"kind", o.kind}};
    if (o.kind == "reference") {
        j["dim"] = o.dim;
        j["seed"] = o.seed;
    } else {
        if (!o.url.empty()) j["base_url"] = o.url;
        if (!o.model.empty()) j["model"] = o.model;
    }
    return j;
}

struct BackendOpts {
    std::string kind;
    std::string url;
    std::string model;
    std::string mock_config;
    int parallelism = 8;
    int timeout_ms = 60000;
    int max_retries = 3;
};

void add_backend_options(CLI::App* sub, BackendOpts& o) {
    sub->add_option("--backend", o.kind, "mock | remote (default: remote when --backend-url is set)")
        ->check(CLI::IsMember({"mock", "remote"}));
    sub->add_option("--backend-url", o.url, "chat-completion base URL");
    sub->add_option("--model", o.model, "remote model name");
    sub->add_option("--mock-config", o.mock_config, "mock oracle JSON file");
    sub->add_option("--backend-parallelism", o.parallelism, "in-flight request bound")->capture_default_str();
    sub->add_option("--timeout-ms", o.timeout_ms, "remote request timeout")->capture_default_str();
    sub->add_option("--max-retries", o.max_retries, "remote transport retries")->capture_default_str();
}

json backend_json(const BackendOpts& o) {
    std::string kind = o.kind;
    if (kind.empty()) kind = !o.url.empty() ? "remote" : (!o.mock_config.empty() ? "mock" : "");
    if (kind.empty()) throw std::invalid_argument("no backend: pass --backend-url or --backend mock --mock-config FILE");
    if (kind == "mock") {
        if (o.mock_config.empty()) throw std::invalid_argument("--backend mock requires --mock-config");
        json j = read_json_file(o.mock_config);
        j["kind"] = "mock";
        return j;
    }
    if (o.url.empty()) throw std::invalid_argument("--backend remote requires --backend-url");
    json j{{"kind", "remote"},
           {"base_url", o.url},
           {"parallelism", o.parallelism},
           {"timeout_ms", o.timeout_ms},
           {"max_retries", o.max_retries}};
    if (!o.model.empty()) j["model"] = o.model;
    return j;
}

ordered_json echo_args(const std::vector<std::string>& args) {
    ordered_json a = ordered_json::array();
    for (const auto& s : args) a.push_back(s);
    return a;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const DataOpts& data, const std::string& out_path, const std::string& report_path, std::ostream& out) {
    const auto fmt = format_from_string(data.format);
    if (!out_path.empty() && data.paths.size() != 1) throw std::invalid_argument("--out needs exactly one --data");
    json reports = json::object();
    for (const auto& p : data.paths) {
        const auto bench = load_benchmark(p, fmt);
        reports[p] = to_json(validate(bench));
        if (!out_path.empty()) save_native(bench, out_path);
    }
    const auto text = reports.dump(2) + "\n";
    if (!report_path.empty()) write_text(report_path, text);
    out << text;
    return 0;
}

struct BuildOpts {
    std::uint64_t seed = 0;
    std::string threefold = "0.5,0.25,0.25";
    std::string out;
    std::size_t max_pairs = 1;
    unsigned parallelism = 1;
    bool first_position = false;
    std::vector<std::string> quotas;
    std::string template_path;
    std::string synthesis_path;
};

int cmd_build(const DataOpts& data, const EmbedOpts& eo, const BackendOpts& bo, const BuildOpts& o,
              const std::vector<std::string>& args, std::ostream& out) {
    align::BuildConfig cfg;
    cfg.threefold = align::parse_threefold(o.threefold);
    cfg.threefold.rng_seed = o.seed;
    cfg.threefold.randomize_position = !o.first_position;
    cfg.max_pairs_per_record = o.max_pairs;
    cfg.parallelism = o.parallelism;
    for (const auto& q : o.quotas) {
        auto [name, value] = split_assignment(q, "--quota");
        cfg.records_per_source[name] = std::stoul(value);
    }
    if (!o.template_path.empty()) cfg.prompt = template_from_json(read_json_file(o.template_path));

    auto sources = load_all(data);
    ordered_json synth_stats;
    if (!o.synthesis_path.empty()) {
        synthesis::SynthesisClient client(make_backend(backend_json(bo)),
                                          synthesis::templates_from_json(read_json_file(o.synthesis_path)));
        for (auto& s : sources) {
            const auto st = client.augment(s.records);
            synth_stats[s.name] = {{"records_augmented", st.records_augmented},
                                   {"cases_added", st.cases_added},
                                   {"free_text_added", st.free_text_added},
                                   {"rejected", st.rejected}};
        }
    }

    std::shared_ptr<const Embedder> embedder = make_embedder(embed_json(eo));
    auto result = align::build_dataset(sources, embedder, cfg);
    ordered_json inputs = ordered_json::array();
    for (std::size_t i = 0; i < data.paths.size(); ++i)
        inputs.push_back({{"name", sources[i].name}, {"path", data.paths[i]}, {"format", data.format}});
    result.run_info = {{"command", "build-data"}, {"args", echo_args(args)}, {"inputs", inputs}};
    if (!synth_stats.is_null()) result.run_info["synthesis"] = synth_stats;
    const auto paths = align::export_sft(result, o.out);

    ordered_json summary{{"data", paths.data.string()},
                         {"manifest", paths.manifest.string()},
                         {"samples", result.samples.size()},
                         {"warnings", result.stats.warnings.size()}};
    out << summary.dump(2) << "\n";
    return 0;
}

struct EvalOpts {
    std::string mode = "single";
    std::string sizes;
    int k = 3;
    std::uint64_t seed = 0;
    unsigned parallelism = 1;
    std::string match = "substring";
    std::string locality = "gold";
    std::string fluency_unit = "per_record";
    std::string out_dir = "lte-eval";
    bool each_step = false;
    std::string snapshot_dir;
    std::vector<std::string> resume;
    bool no_prefix = false;
    bool fill_original = false;
    int max_new_tokens = 100;
    double temperature = 0.0;
    double max_failure_fraction = 0.10;
    std::string template_path;
};

harness::RunConfig run_config(const EvalOpts& o) {
    harness::RunConfig cfg;
    cfg.mode = harness::mode_from_string(o.mode);
    if (!o.sizes.empty()) cfg.sizes = parse_sizes(o.sizes);
    cfg.k = o.k;
    cfg.seed = o.seed;
    cfg.parallelism = o.parallelism;
    cfg.match = metrics::match_mode_from_string(o.match);
    cfg.locality = metrics::locality_mode_from_string(o.locality);
    cfg.fluency_unit = o.fluency_unit == "per_case" ? harness::FluencyUnit::per_case : harness::FluencyUnit::per_record;
    cfg.eval_each_step = o.each_step;
    if (!o.snapshot_dir.empty()) cfg.snapshot_dir = o.snapshot_dir;
    for (const auto& r : o.resume) {
        auto [name, path] = split_assignment(r, "--resume");
        cfg.resume_snapshots[name] = path;
    }
    cfg.no_prefix_control = o.no_prefix;
    cfg.max_new_tokens = o.max_new_tokens;
    cfg.temperature = o.temperature;
    cfg.max_failure_fraction = o.max_failure_fraction;
    if (!o.template_path.empty()) cfg.prompt = template_from_json(read_json_file(o.template_path));
    cfg.check();
    return cfg;
}

int cmd_eval(const DataOpts& data, const EmbedOpts& eo, const BackendOpts& bo, const EvalOpts& o,
             const std::vector<std::string>& args, std::ostream& out) {
    const auto cfg = run_config(o);
    auto benchmarks = load_all(data);
    auto backend = make_backend(backend_json(bo));
    const fs::path dir = o.out_dir;
    fs::create_directories(dir);

    std::size_t filled = 0;
    if (o.fill_original)
        for (auto& b : benchmarks) filled += harness::fill_original_answers(b.records, *backend, cfg);

    std::vector<harness::EvalReport> reports;
    ordered_json embedder_echo;
    if (cfg.mode == harness::Mode::single) {
        reports.push_back(harness::eval_single(benchmarks, *backend, cfg));
    } else {
        std::shared_ptr<const Embedder> embedder = make_embedder(embed_json(eo));
        embedder_echo = to_json(embedder->fingerprint());
        reports = harness::eval_mass(benchmarks, *backend, embedder, cfg);
    }

    ordered_json files = ordered_json::array();
    for (const auto& r : reports) {
        std::string stem = "report";
        if (cfg.mode != harness::Mode::single)
            stem += "_" + std::string(harness::to_string(cfg.mode)) + "_n" + std::to_string(r.size);
        write_text(dir / (stem + ".json"), to_json(r).dump(2) + "\n");
        const auto table = harness::render_table(r);
        write_text(dir / (stem + ".txt"), table);
        files.push_back(stem + ".json");
        files.push_back(stem + ".txt");
        out << table << "\n";
    }

    ordered_json inputs = ordered_json::array();
    for (std::size_t i = 0; i < data.paths.size(); ++i)
        inputs.push_back({{"name", benchmarks[i].name}, {"path", data.paths[i]}, {"format", data.format}});
    json backend_echo = backend_json(bo);
    if (backend_echo.value("kind", "") == "mock") backend_echo = {{"kind", "mock"}, {"config", bo.mock_config}};
    ordered_json manifest{{"command", "eval"},
                          {"args", echo_args(args)},
                          {"inputs", inputs},
                          {"run_config", harness::to_json(cfg)},
                          {"backend", backend_echo},
                          {"backend_id", backend->id()},
                          {"reports", files}};
    if (!embedder_echo.is_null()) manifest["embedder"] = embedder_echo;
    if (o.fill_original) manifest["original_answers_filled"] = filled;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_bench_time(const DataOpts& data, const EmbedOpts& eo, const BackendOpts& bo, int k, const std::string& out_path,
                   const std::vector<std::string>& args, std::ostream& out) {
    if (data.paths.size() != 1) throw std::invalid_argument("bench-time takes exactly one --data");
    const auto bench = load_benchmark(data.paths.front(), format_from_string(data.format));
    auto backend = make_backend(backend_json(bo));
    std::shared_ptr<const Embedder> embedder = make_embedder(embed_json(eo));
    harness::RunConfig cfg;
    cfg.k = k;
    const auto t = harness::time_per_edit(bench, *backend, embedder, cfg);
    out << "edit " << harness::format_seconds(t.edit_time_s) << " s  inference "
        << harness::format_seconds(t.inference_time_s) << " s  total " << harness::format_seconds(t.total_time_s)
        << " s  (" << t.edits << " edits)\n";
    if (!out_path.empty()) {
        ordered_json j{{"command", "bench-time"},
                       {"args", echo_args(args)},
                       {"embedder", to_json(embedder->fingerprint())},
                       {"backend_id", backend->id()},
                       {"timing", harness::to_json(t)}};
        write_text(out_path, j.dump(2) + "\n");
    }
    return 0;
}

struct ServeOpts {
    std::string config;
    int port = -1;
    std::string host;
    std::string restore;
};

int cmd_serve(const ServeOpts& o, const EmbedOpts& eo, const BackendOpts& bo, std::ostream& out) {
    json file = o.config.empty() ? json::object() : read_json_file(o.config);
    auto scfg = service::service_config_from_json(file);
    if (o.port >= 0) scfg.port = o.port;
    if (!o.host.empty()) scfg.host = o.host;

    json ejson = file.contains("embedder") ? file.at("embedder") : embed_json(eo);
    json bjson = file.contains("backend") ? file.at("backend") : backend_json(bo);
    if (bjson.value("kind", "") == "mock" && bjson.contains("config_path")) {
        json m = read_json_file(bjson.at("config_path").get<std::string>());
        m["kind"] = "mock";
        bjson = m;
    }
    std::shared_ptr<const Embedder> embedder = make_embedder(ejson);
    auto bank = o.restore.empty() ? MemoryBank(embedder) : MemoryBank::restore(o.restore, embedder);
    service::Service svc(scfg, std::move(bank), make_backend(bjson));
    out << ordered_json{{"listening", scfg.host + ":" + std::to_string(scfg.port)}}.dump() << std::endl;
    svc.run();
    return 0;
}

int cmd_snapshot(const DataOpts& data, const EmbedOpts& eo, const std::string& out_path, const std::string& inspect,
                 std::ostream& out) {
    if (!inspect.empty()) {
        std::ifstream in(inspect);
        if (!in) throw DataError("cannot open " + inspect);
        std::string header;
        std::getline(in, header);
        json h = json::parse(header, nullptr, false);
        if (h.is_discarded()) throw DataError(inspect + ": malformed snapshot header");
        std::shared_ptr<const Embedder> embedder = make_embedder(h.at("embedder"));
        const auto bank = MemoryBank::restore(inspect, embedder);
        h["restored_count"] = bank.size();
        out << h.dump(2) << "\n";
        return 0;
    }
    if (data.paths.empty() || out_path.empty()) throw std::invalid_argument("snapshot needs --data and --out, or --inspect");
    std::shared_ptr<const Embedder> embedder = make_embedder(embed_json(eo));
    MemoryBank bank(embedder);
    for (const auto& b : load_all(data))
        for (const auto& r : b.records) bank.add_edit(r.descriptor);
    bank.snapshot(out_path);
    out << ordered_json{{"path", out_path}, {"count", bank.size()}}.dump() << "\n";
    return 0;
}

struct SynthOpts {
    synthetic::Options options;
    std::string out;
    std::string mock_out;
    double noise = 0.0;
    std::string noise_scope = "all";
    int latency_ms = 0;
};

int cmd_synth(const SynthOpts& o, std::ostream& out) {
    auto corpus = synthetic::make_corpus(o.options);
    save_native(corpus.benchmark, o.out);
    if (!o.mock_out.empty()) {
        corpus.oracle.noise_rate = o.noise;
        corpus.oracle.rng_seed = o.options.seed;
        corpus.oracle.noise_scope = o.noise_scope == "edited_only" ? NoiseScope::edited_only : NoiseScope::all;
        corpus.oracle.latency = std::chrono::milliseconds(o.latency_ms);
        corpus.oracle.check();
        write_text(o.mock_out, to_json(corpus.oracle).dump(2) + "\n");
    }
    out << ordered_json{{"records", corpus.benchmark.size()}, {"out", o.out}}.dump() << "\n";
    return 0;
}

std::string_view error_kind(const std::exception& e) {
    if (dynamic_cast<const DataError*>(&e)) return "data";
    if (dynamic_cast<const BackendError*>(&e)) return "backend";
    if (dynamic_cast<const RunAborted*>(&e)) return "aborted";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
    return "runtime";
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Retrieval-augmented knowledge editing toolkit", "lte"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand all subcommand help");

    DataOpts data;
    EmbedOpts embed;
    BackendOpts backend;

    std::string ingest_out, ingest_report;
    auto* ingest = app.add_subcommand("ingest", "load and validate a benchmark, optionally convert to native JSONL");
    add_data_options(ingest, data);
    ingest->add_option("--out", ingest_out, "write the native JSONL here");
    ingest->add_option("--report", ingest_report, "write the validation report here");

    BuildOpts build;
    auto* build_cmd = app.add_subcommand("build-data", "construct the parallel alignment dataset");
    add_data_options(build_cmd, data);
    add_embed_options(build_cmd, embed);
    add_backend_options(build_cmd, backend);
    build_cmd->add_option("--seed", build.seed, "sampling seed")->capture_default_str();
    build_cmd->add_option("--threefold", build.threefold, "branch probabilities p1,p2,p3")->capture_default_str();
    build_cmd->add_option("--out", build.out, "masked JSONL output path")->required();
    build_cmd->add_option("--max-pairs", build.max_pairs, "case pairs per record")->capture_default_str();
    build_cmd->add_option("--parallelism", build.parallelism, "worker threads")->capture_default_str();
    build_cmd->add_flag("--exact-first", build.first_position, "keep the exact statement first in the block");
    build_cmd->add_option("--quota", build.quotas, "cap records per source: name=N (repeatable)");
    build_cmd->add_option("--template", build.template_path, "prompt template JSON");
    build_cmd->add_option("--synthesis", build.synthesis_path, "synthesis templates JSON (uses the backend)");

    EvalOpts ev;
    auto* eval = app.add_subcommand("eval", "run the evaluation harness");
    add_data_options(eval, data);
    add_embed_options(eval, embed);
    add_backend_options(eval, backend);
    eval->add_option("--mode", ev.mode, "single | batch | sequential")
        ->check(CLI::IsMember({"single", "batch", "sequential"}))
        ->capture_default_str();
    eval->add_option("--sizes", ev.sizes, "comma-separated edit counts (batch/sequential)");
    eval->add_option("--k", ev.k, "retrieved statements per query")->capture_default_str();
    eval->add_option("--seed", ev.seed, "run seed")->capture_default_str();
    eval->add_option("--parallelism", ev.parallelism, "concurrent queries")->capture_default_str();
    eval->add_option("--match", ev.match, "exact | substring")
        ->check(CLI::IsMember({"exact", "substring"}))
        ->capture_default_str();
    eval->add_option("--locality", ev.locality, "gold | baseline")
        ->check(CLI::IsMember({"gold", "baseline", "baseline_consistency"}))
        ->capture_default_str();
    eval->add_option("--fluency-unit", ev.fluency_unit, "per_record | per_case")
        ->check(CLI::IsMember({"per_record", "per_case"}))
        ->capture_default_str();
    eval->add_option("--out-dir", ev.out_dir, "report directory")->capture_default_str();
    eval->add_flag("--eval-each-step", ev.each_step, "evaluate at every stream size");
    eval->add_option("--snapshot-dir", ev.snapshot_dir, "snapshot memory after each size");
    eval->add_option("--resume", ev.resume, "resume a sequential run: name=snapshot.jsonl (repeatable)");
    eval->add_flag("--no-prefix", ev.no_prefix, "single mode: query without any prefix (control run)");
    eval->add_flag("--fill-original", ev.fill_original, "fill missing original answers from the backend");
    eval->add_option("--max-new-tokens", ev.max_new_tokens)->capture_default_str();
    eval->add_option("--temperature", ev.temperature)->capture_default_str();
    eval->add_option("--max-failure-fraction", ev.max_failure_fraction)->capture_default_str();
    eval->add_option("--template", ev.template_path, "prompt template JSON");

    int bench_k = 3;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench-time", "per-edit wall clock over the first 10 records");
    add_data_options(bench, data);
    add_embed_options(bench, embed);
    add_backend_options(bench, backend);
    bench->add_option("--k", bench_k, "retrieved statements per query")->capture_default_str();
    bench->add_option("--out", bench_out, "timing JSON output");

    ServeOpts serve_opts;
    auto* serve = app.add_subcommand("serve", "serve the live edit/query endpoints");
    add_embed_options(serve, embed);
    add_backend_options(serve, backend);
    serve->add_option("--config", serve_opts.config, "service config JSON");
    serve->add_option("--port", serve_opts.port, "override the configured port");
    serve->add_option("--host", serve_opts.host, "override the configured host");
    serve->add_option("--restore", serve_opts.restore, "start from a memory snapshot");

    std::string snap_out, snap_inspect;
    auto* snapshot = app.add_subcommand("snapshot", "write a memory snapshot from benchmarks, or inspect one");
    add_data_options(snapshot, data, false);
    add_embed_options(snapshot, embed);
    snapshot->add_option("--out", snap_out, "snapshot path");
    snapshot->add_option("--inspect", snap_inspect, "print a snapshot's header after verifying it");

    SynthOpts synth;
    auto* synth_cmd = app.add_subcommand("synth", "write a seeded synthetic benchmark and its mock oracle");
    synth_cmd->add_option("--records", synth.options.records)->capture_default_str();
    synth_cmd->add_option("--seed", synth.options.seed)->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "benchmark JSONL path")->required();
    synth_cmd->add_option("--mock-out", synth.mock_out, "mock oracle JSON path");
    synth_cmd->add_option("--noise", synth.noise, "mock noise rate")->capture_default_str();
    synth_cmd->add_option("--noise-scope", synth.noise_scope, "all | edited_only")
        ->check(CLI::IsMember({"all", "edited_only"}))
        ->capture_default_str();
    synth_cmd->add_option("--latency-ms", synth.latency_ms, "mock per-call latency")->capture_default_str();
    bool no_locality = false;
    synth_cmd->add_flag("--no-locality", no_locality, "omit out-of-scope cases");

    std::vector<std::string> argv_store{"lte"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_store) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        out << target->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        CLI::App* target = &app;
        for (auto* sub : app.get_subcommands()) target = sub;
        err << "error: " << e.what() << "\n\n" << target->help();
        return 2;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(data, ingest_out, ingest_report, out);
        if (build_cmd->parsed()) return cmd_build(data, embed, backend, build, args, out);
        if (eval->parsed()) return cmd_eval(data, embed, backend, ev, args, out);
        if (bench->parsed()) return cmd_bench_time(data, embed, backend, bench_k, bench_out, args, out);
        if (serve->parsed()) return cmd_serve(serve_opts, embed, backend, out);
        if (snapshot->parsed()) return cmd_snapshot(data, embed, snap_out, snap_inspect, out);
        if (synth_cmd->parsed()) {
            synth.options.locality = !no_locality;
            return cmd_synth(synth, out);
        }
    } catch (const std::exception& e) {
        err << ordered_json{{"error", e.what()}, {"kind", error_kind(e)}}.dump() << "\n";
        return 1;
    }
    err << app.help();
    return 2;
}

} // namespace lte::cli
