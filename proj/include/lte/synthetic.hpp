#pragma once

#include "lte/backend.hpp"
#include "lte/corpus.hpp"

#include <cstdint>

// Seeded synthetic editing benchmarks with a matching mock oracle. Subjects and
// answers are unique fixed-length pseudo-words, so no query pattern of one record
// is a substring of another record's query.
namespace lte::synthetic {

struct Options {
    std::size_t records = 100;
    std::uint64_t seed = 0;
    bool paraphrase = true;
    bool portability = true;
    bool locality = true;
    bool original_answer = true;
};

struct Corpus {
    Benchmark benchmark;
    /// Edited answers for every in-scope query, pre-edit answers for every query.
    MockOracleConfig oracle;
};

Corpus make_corpus(const Options& options);

} // namespace lte::synthetic
