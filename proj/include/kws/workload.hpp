#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kws/engine.hpp"
#include "kws/store.hpp"

namespace kws {

class WorkloadError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct KeywordTarget {
    std::string word;
    double idf = 0.01;     // fraction of the tuples containing the word
    std::string relation;  // Papers or Authors; empty for both
};

/// Synthetic publication corpus (Papers, Authors, Writes) and update stream.
struct WorkloadSpec {
    std::size_t papers = 1000;
    std::size_t authors = 1000;
    std::size_t writes = 2000;
    std::vector<KeywordTarget> keywords;
    double insert_share = 0.5;
    std::size_t ops = 1000;
    std::uint64_t seed = 1;
    std::size_t title_words = 8;
    std::size_t name_words = 2;
};

struct Workload {
    std::string schema;
    /// Initial tuples in load order.
    std::vector<std::pair<std::string, Tuple>> tuples;
    std::vector<UpdateOp> ops;

    /// A fresh store holding the initial tuples.
    [[nodiscard]] Store make_store() const;
};

/// Deterministic for a given spec. Each keyword lands in exactly
/// round(idf * N) tuples of every text relation; streamed tuples contain it
/// with probability idf. Throws WorkloadError for an idf outside (0, 1).
Workload generate_workload(WorkloadSpec const& spec);

/// Writes schema.txt, one <relation>.tsv per relation and updates.log.
void write_workload(Workload const& workload, std::filesystem::path const& dir);

}  // namespace kws
