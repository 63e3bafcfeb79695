#include "lte/alignbuild.hpp"

#include "lte/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace lte::align {

using nlohmann::ordered_json;

namespace {

constexpr std::size_t kManifestWarningLimit = 100;

std::size_t branch_index(Branch b) { return static_cast<std::size_t>(b) - 1; }

Branch branch_for_draw(double u, const ThreefoldConfig& cfg) {
    if (u < cfg.p_exact_only) return Branch::exact_only;
    if (u < cfg.p_exact_only + cfg.p_plus_top1) return Branch::plus_top1;
    return Branch::plus_top2;
}

} // namespace

std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::in_scope_with_prompt: return "in_scope_with_prompt";
    case Variant::in_scope_plain: return "in_scope_plain";
    case Variant::out_scope_with_prompt: return "out_scope_with_prompt";
    case Variant::out_scope_plain: return "out_scope_plain";
    }
    return "unknown";
}

bool has_prompt(Variant v) { return v == Variant::in_scope_with_prompt || v == Variant::out_scope_with_prompt; }

void ThreefoldConfig::check() const {
    for (double p : {p_exact_only, p_plus_top1, p_plus_top2})
        if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("threefold probabilities must be >= 0");
    const double sum = p_exact_only + p_plus_top1 + p_plus_top2;
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("threefold probabilities must sum to 1, got " + std::to_string(sum));
}

ThreefoldConfig parse_threefold(std::string_view spec) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const auto piece = spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start);
        try {
            std::size_t used = 0;
            const std::string s(piece);
            parts.push_back(std::stod(s, &used));
            if (used != s.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw std::invalid_argument("threefold: cannot parse '" + std::string(piece) + "'");
        }
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (parts.size() != 3) throw std::invalid_argument("threefold: expected three comma-separated probabilities");
    ThreefoldConfig cfg;
    cfg.p_exact_only = parts[0];
    cfg.p_plus_top1 = parts[1];
    cfg.p_plus_top2 = parts[2];
    cfg.check();
    return cfg;
}

ThreefoldDraw threefold_updated_information(const MemoryEntry& exact, const MemoryBank& pool,
                                            const ThreefoldConfig& cfg, rng::Engine& rng) {
    ThreefoldDraw draw;
    draw.drawn = branch_for_draw(rng::unit(rng), cfg);
    const int wanted = static_cast<int>(draw.drawn) - 1;

    std::vector<std::string> similar;
    if (wanted > 0) {
        const auto& exact_statement = exact.descriptor.statement;
        const auto result = pool.retrieve(exact.vector, wanted, [&](const MemoryEntry& e) {
            return e.entry_id != exact.entry_id && e.descriptor.statement != exact_statement;
        });
        for (const auto& s : result.entries) {
            similar.push_back(s.entry.descriptor.statement);
            draw.retrieved.push_back(s.entry.entry_id);
        }
    }
    draw.used = static_cast<Branch>(1 + similar.size());

    std::size_t position = 0;
    if (cfg.randomize_position && !similar.empty()) position = rng::below(rng, similar.size() + 1);
    draw.statements = std::move(similar);
    draw.statements.insert(draw.statements.begin() + static_cast<std::ptrdiff_t>(position), exact.descriptor.statement);
    return draw;
}

ThreefoldDraw threefold_updated_information(const EditDescriptor& descriptor, const MemoryBank& pool,
                                            const ThreefoldConfig& cfg, rng::Engine& rng) {
    for (const auto& e : pool.entries()) {
        if (e.descriptor.id == descriptor.id && e.descriptor.statement == descriptor.statement)
            return threefold_updated_information(e, pool, cfg, rng);
    }
    throw std::invalid_argument("threefold: descriptor '" + descriptor.id + "' is not in the pool");
}

void BuildStats::merge(const BuildStats& o) {
    for (std::size_t i = 0; i < kVariantCount; ++i) per_variant[i] += o.per_variant[i];
    for (std::size_t i = 0; i < 3; ++i) {
        branch_drawn[i] += o.branch_drawn[i];
        branch_used[i] += o.branch_used[i];
    }
    threefold_fallbacks += o.threefold_fallbacks;
    warnings.insert(warnings.end(), o.warnings.begin(), o.warnings.end());
}

std::vector<TrainingSample> build_parallel_samples(const BenchmarkRecord& record, const MemoryEntry& exact,
                                                   const MemoryBank& pool, const BuildConfig& cfg,
                                                   rng::Engine& rng, BuildStats& stats, std::string_view source) {
    std::vector<const QueryCase*> in_cases;
    std::vector<const QueryCase*> out_cases;
    for (const auto& c : record.cases) (c.scope == Scope::in_scope ? in_cases : out_cases).push_back(&c);

    const auto& id = record.descriptor.id;
    std::size_t pairs = std::min(cfg.max_pairs_per_record, in_cases.size());
    if (out_cases.empty())
        stats.warnings.push_back("record " + id + ": no out_of_scope case; out-of-scope variants not emitted");
    else
        pairs = std::min(pairs, out_cases.size());

    std::vector<TrainingSample> out;
    auto with_prompt = [&](const QueryCase& c, Variant v, const std::string& target) {
        const auto draw = threefold_updated_information(exact, pool, cfg.threefold, rng);
        ++stats.branch_drawn[branch_index(draw.drawn)];
        ++stats.branch_used[branch_index(draw.used)];
        if (draw.fell_back()) ++stats.threefold_fallbacks;
        auto bundle = render(draw.statements, c.prompt, cfg.prompt);
        out.push_back({std::move(bundle.rendered), target, v, std::string(source), id, draw.statements.size(),
                       static_cast<int>(draw.used)});
        ++stats.per_variant[static_cast<std::size_t>(v)];
    };
    auto plain = [&](const QueryCase& c, Variant v, const std::string& target) {
        out.push_back({c.prompt, target, v, std::string(source), id, 0, 0});
        ++stats.per_variant[static_cast<std::size_t>(v)];
    };

    for (std::size_t i = 0; i < pairs; ++i) {
        const QueryCase& in = *in_cases[i];
        if (!record.original_answer) {
            stats.warnings.push_back("record " + id + ": no original_answer; in-scope pair " + std::to_string(i)
                                     + " skipped");
        } else {
            with_prompt(in, Variant::in_scope_with_prompt, *in.gold_answer);
            plain(in, Variant::in_scope_plain, *record.original_answer);
        }
        if (i >= out_cases.size()) continue;
        const QueryCase& o = *out_cases[i];
        if (!o.gold_answer) {
            stats.warnings.push_back("record " + id + ": out_of_scope case without answer; pair " + std::to_string(i)
                                     + " skipped");
            continue;
        }
        with_prompt(o, Variant::out_scope_with_prompt, *o.gold_answer);
        plain(o, Variant::out_scope_plain, *o.gold_answer);
    }
    return out;
}

BuildResult build_dataset(std::span<const NamedBenchmark> sources, std::shared_ptr<const Embedder> embedder,
                          const BuildConfig& cfg) {
    cfg.threefold.check();

    struct Item {
        const BenchmarkRecord* record;
        const std::string* source;
    };
    std::vector<Item> items;
    BuildResult result;
    result.config = cfg;
    for (const auto& src : sources) {
        std::size_t take = src.records.size();
        if (auto it = cfg.records_per_source.find(src.name); it != cfg.records_per_source.end())
            take = std::min(take, it->second);
        for (std::size_t i = 0; i < take; ++i) items.push_back({&src.records[i], &src.name});
        result.records_per_source_used[src.name] += take;
    }

    result.embedder = to_json(embedder->fingerprint());
    MemoryBank pool(std::move(embedder));
    for (const auto& item : items) pool.add_edit(item.record->descriptor);
    const auto entries = pool.entries();

    std::vector<std::vector<TrainingSample>> per_record(items.size());
    std::vector<BuildStats> per_record_stats(items.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = rng::stream(cfg.threefold.rng_seed, i);
            per_record[i] = build_parallel_samples(*items[i].record, entries[i], pool, cfg, rng, per_record_stats[i],
                                                   *items[i].source);
        }
    };

    const std::size_t threads = std::clamp<std::size_t>(cfg.parallelism, 1, std::max<std::size_t>(items.size(), 1));
    if (threads == 1) {
        work(0, items.size());
    } else {
        std::vector<std::jthread> pool_threads;
        const std::size_t chunk = (items.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk;
            const std::size_t end = std::min(items.size(), begin + chunk);
            if (begin < end) pool_threads.emplace_back(work, begin, end);
        }
    }

    for (std::size_t i = 0; i < items.size(); ++i) {
        result.stats.merge(per_record_stats[i]);
        for (auto& s : per_record[i]) result.samples.push_back(std::move(s));
    }
    return result;
}

ordered_json alignment_hyperparameters() {
    auto preset = [](double lr) {
        return ordered_json{{"batch_size", 128},        {"learning_rate", lr},   {"epochs", 3},
                            {"max_length", 2048},       {"optimizer", "AdamW"}, {"scheduler", "cosine"},
                            {"weight_decay", 0},        {"warmup_ratio", 0.03}};
    };
    return ordered_json{{"standard_ft", preset(2e-5)}, {"lora", preset(3e-4)}};
}

ordered_json sample_to_json(const TrainingSample& s) {
    return ordered_json{{"input", s.input_text},
                        {"output", s.target_text},
                        {"loss_on", "output_only"},
                        {"variant", to_string(s.variant)},
                        {"meta",
                         {{"source", s.source},
                          {"source_record_id", s.source_record_id},
                          {"updated_information_count", s.updated_information_count},
                          {"threefold_branch", s.branch}}}};
}

ordered_json manifest_json(const BuildResult& r) {
    ordered_json m;
    m["format"] = "masked_jsonl";
    m["loss_on"] = "output_only";
    m["total"] = r.samples.size();
    ordered_json variants;
    for (std::size_t i = 0; i < kVariantCount; ++i) variants[std::string(to_string(static_cast<Variant>(i)))] = r.stats.per_variant[i];
    m["per_variant"] = variants;
    const auto& tf = r.config.threefold;
    m["rng_seed"] = tf.rng_seed;
    m["threefold"] = {{"probabilities", {tf.p_exact_only, tf.p_plus_top1, tf.p_plus_top2}},
                      {"randomize_position", tf.randomize_position},
                      {"branch_drawn", r.stats.branch_drawn},
                      {"branch_used", r.stats.branch_used},
                      {"fallbacks", r.stats.threefold_fallbacks}};
    m["max_pairs_per_record"] = r.config.max_pairs_per_record;
    ordered_json sources = ordered_json::object();
    for (const auto& [name, n] : r.records_per_source_used) sources[name] = n;
    m["records_per_source"] = sources;
    m["prompt_template"] = to_json(r.config.prompt);
    if (!r.embedder.is_null()) m["embedder"] = r.embedder;
    if (!r.run_info.is_null()) m["run"] = r.run_info;
    m["warnings_count"] = r.stats.warnings.size();
    const auto shown = std::min(r.stats.warnings.size(), kManifestWarningLimit);
    m["warnings"] = std::vector<std::string>(r.stats.warnings.begin(), r.stats.warnings.begin() + static_cast<std::ptrdiff_t>(shown));
    m["hyperparameters"] = alignment_hyperparameters();
    return m;
}

ExportPaths export_sft(const BuildResult& result, const std::filesystem::path& path) {
    if (result.samples.empty()) throw Error("export_sft: no samples to export");
    ExportPaths paths{path, path};
    paths.manifest += ".manifest.json";

    std::ofstream data(paths.data, std::ios::binary | std::ios::trunc);
    if (!data) throw Error("export_sft: cannot write " + paths.data.string());
    for (const auto& s : result.samples) data << sample_to_json(s).dump() << '\n';
    if (!data) throw Error("export_sft: write failed for " + paths.data.string());

    std::ofstream manifest(paths.manifest, std::ios::binary | std::ios::trunc);
    if (!manifest) throw Error("export_sft: cannot write " + paths.manifest.string());
    manifest << manifest_json(result).dump(2) << '\n';
    return paths;
}

} // namespace lte::align
