#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "kws/lattice.hpp"
#include "kws/score.hpp"
#include "kws/store.hpp"

namespace kws {

struct OracleResult {
    std::vector<Jtt> jtts;                     // ranked
    std::map<std::string, std::size_t> per_cn;  // canonical CN key -> results
};

/// Every valid tree of at most `cn_max` tuples, found by growing connected
/// subtrees of the tuple graph from the matched tuples and scored from live
/// statistics. Exponential; meant for small instances.
OracleResult enumerate_jtts(Store const& store, KeywordQuery const& query, std::size_t cn_max);

/// First `k` results of enumerate_jtts.
std::vector<Jtt> brute_force_topk(Store const& store, KeywordQuery const& query, std::size_t k, std::size_t cn_max);

/// Keys of every valid CN, found by unpruned growth over the schema graph.
std::vector<std::string> enumerate_cn_keys(SchemaGraph const& schema, std::vector<bool> const& has_query,
                                           std::size_t cn_max);

}  // namespace kws
