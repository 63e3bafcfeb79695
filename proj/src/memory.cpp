#include "lte/memory.hpp"

#include "lte/error.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace lte {

using nlohmann::json;

namespace {

constexpr int kSnapshotVersion = 1;

json descriptor_json(const EditDescriptor& d) {
    json j{{"id", d.id}, {"edit_input", d.edit_input}, {"edit_target", d.edit_target}, {"statement", d.statement}};
    if (d.subject) j["subject"] = *d.subject;
    return j;
}

EditDescriptor descriptor_from_json(const json& j) {
    EditDescriptor d;
    d.id = j.at("id").get<std::string>();
    if (auto it = j.find("subject"); it != j.end() && it->is_string()) d.subject = it->get<std::string>();
    d.edit_input = j.at("edit_input").get<std::string>();
    d.edit_target = j.at("edit_target").get<std::string>();
    d.statement = j.at("statement").get<std::string>();
    return d;
}

} // namespace

MemoryBank::MemoryBank(std::shared_ptr<const Embedder> embedder)
    : embedder_(std::move(embedder)), dim_(embedder_->dim()), fingerprint_(embedder_->fingerprint()) {}

MemoryBank::MemoryBank(MemoryBank&& other) noexcept
    : embedder_(std::move(other.embedder_)), dim_(other.dim_), fingerprint_(std::move(other.fingerprint_)) {
    std::unique_lock lock(other.mutex_);
    entries_ = std::move(other.entries_);
    next_id_ = other.next_id_;
}

EntryId MemoryBank::add_edit(const EditDescriptor& descriptor) {
    if (descriptor.statement.empty()) throw DataError("add_edit: descriptor '" + descriptor.id + "' has an empty statement");
    Vector v = embedder_->embed(descriptor.statement);
    if (v.dim() != dim_)
        throw Error("add_edit: embedder returned dim " + std::to_string(v.dim()) + ", bank dim " + std::to_string(dim_));
    std::unique_lock lock(mutex_);
    const EntryId id = next_id_++;
    entries_.push_back({id, descriptor, std::move(v), id});
    return id;
}

bool MemoryBank::remove(EntryId id) {
    std::unique_lock lock(mutex_);
    auto it = std::find_if(entries_.begin(), entries_.end(), [id](const MemoryEntry& e) { return e.entry_id == id; });
    if (it == entries_.end()) return false;
    entries_.erase(it);
    return true;
}

RetrievalResult MemoryBank::retrieve(std::string_view query_text, int k) const {
    if (k <= 0) throw std::invalid_argument("retrieve: k must be >= 1, got " + std::to_string(k));
    return retrieve(embedder_->embed(query_text), k);
}

RetrievalResult MemoryBank::retrieve(const Vector& query, int k, const Filter& keep) const {
    if (k <= 0) throw std::invalid_argument("retrieve: k must be >= 1, got " + std::to_string(k));
    RetrievalResult result;
    result.k_requested = k;

    std::shared_lock lock(mutex_);
    if (entries_.empty()) return result;
    if (query.dim() != dim_)
        throw std::invalid_argument("retrieve: query dim " + std::to_string(query.dim()) + " != bank dim "
                                    + std::to_string(dim_));

    struct Candidate {
        double score;
        std::size_t index;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (keep && !keep(entries_[i])) continue;
        candidates.push_back({dot(query, entries_[i].vector), i});
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
    // entries_ is in seq order, so index order breaks ties by insertion order
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                          if (a.score != b.score) return a.score > b.score;
                          return a.index < b.index;
                      });
    result.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) result.entries.push_back({entries_[candidates[i].index], candidates[i].score});
    return result;
}

std::optional<MemoryEntry> MemoryBank::find(EntryId id) const {
    std::shared_lock lock(mutex_);
    for (const auto& e : entries_)
        if (e.entry_id == id) return e;
    return std::nullopt;
}

std::vector<MemoryEntry> MemoryBank::entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
}

std::size_t MemoryBank::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void MemoryBank::snapshot(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("snapshot: cannot write " + path.string());
    std::shared_lock lock(mutex_);
    const json header{{"version", kSnapshotVersion},
                      {"dim", dim_},
                      {"embedder", to_json(fingerprint_)},
                      {"count", entries_.size()},
                      {"next_id", next_id_}};
    out << header.dump() << '\n';
    for (const auto& e : entries_) {
        const json line{{"entry_id", e.entry_id}, {"descriptor", descriptor_json(e.descriptor)}, {"vector", e.vector.values}};
        out << line.dump() << '\n';
    }
    if (!out) throw Error("snapshot: write failed for " + path.string());
}

MemoryBank MemoryBank::restore(const std::filesystem::path& path, std::shared_ptr<const Embedder> embedder) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("restore: cannot open " + path.string());

    MemoryBank bank(std::move(embedder));
    std::string line;
    std::size_t offset = 0;
    std::size_t line_index = 0;
    std::size_t expected = 0;
    auto corrupt = [&](const std::string& why) -> DataError {
        return DataError("restore: corrupt snapshot " + path.string() + " at byte offset " + std::to_string(offset)
                         + ": " + why);
    };

    while (std::getline(in, line)) {
        const std::size_t next_offset = offset + line.size() + 1;
        if (line.empty()) {
            offset = next_offset;
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw corrupt(e.what());
        }
        try {
            if (line_index == 0) {
                if (j.at("version").get<int>() != kSnapshotVersion)
                    throw corrupt("unsupported version " + j.at("version").dump());
                const auto dim = j.at("dim").get<std::size_t>();
                const auto fp = fingerprint_from_json(j.at("embedder"));
                if (dim != bank.dim_)
                    throw DataError("restore: snapshot dim " + std::to_string(dim) + " does not match embedder dim "
                                    + std::to_string(bank.dim_));
                if (!(fp == bank.fingerprint_))
                    throw DataError("restore: embedder fingerprint mismatch: snapshot " + to_json(fp).dump()
                                    + " vs embedder " + to_json(bank.fingerprint_).dump());
                expected = j.at("count").get<std::size_t>();
                bank.next_id_ = j.at("next_id").get<EntryId>();
            } else {
                MemoryEntry e;
                e.entry_id = j.at("entry_id").get<EntryId>();
                e.seq = e.entry_id;
                e.descriptor = descriptor_from_json(j.at("descriptor"));
                e.vector = Vector(j.at("vector").get<std::vector<double>>());
                if (e.vector.dim() != bank.dim_)
                    throw corrupt("entry vector dim " + std::to_string(e.vector.dim()) + " != "
                                  + std::to_string(bank.dim_));
                if (!bank.entries_.empty() && e.entry_id <= bank.entries_.back().entry_id)
                    throw corrupt("entry ids not increasing");
                if (e.entry_id >= bank.next_id_) throw corrupt("entry id beyond header next_id");
                bank.entries_.push_back(std::move(e));
            }
        } catch (const json::exception& e) {
            throw corrupt(e.what());
        }
        ++line_index;
        offset = next_offset;
    }
    if (line_index == 0) throw corrupt("missing header");
    if (bank.entries_.size() != expected)
        throw corrupt("header count " + std::to_string(expected) + " but " + std::to_string(bank.entries_.size())
                      + " entries");
    return bank;
}

} // namespace lte
