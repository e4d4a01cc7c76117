#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "kws/score.hpp"
#include "kws/store.hpp"

namespace kws {

/// R^Q (query) or R^F (free) of one relation.
struct TupleSetId {
    RelationId relation = 0;
    bool query = false;

    friend auto operator<=>(TupleSetId const&, TupleSetId const&) = default;
};

std::string to_string(TupleSetId id, SchemaGraph const& schema);

struct ScoredTuple {
    TupleRef ref;
    std::string key;
    std::vector<std::uint32_t> tf;
    std::size_t dl = 0;
    double tscore_u = 0;
};

/// tscore_u descending, then key ascending
struct ScoredOrder {
    bool operator()(ScoredTuple const& a, ScoredTuple const& b) const
    {
        if (a.tscore_u != b.tscore_u) {
            return a.tscore_u > b.tscore_u;
        }
        return a.key < b.key;
    }
};

/// The matched tuples of one relation, kept sorted by upper score. Iterators
/// stay valid across inserts and erases of other members.
class TupleSet {
  public:
    using Members = std::set<ScoredTuple, ScoredOrder>;
    using iterator = Members::const_iterator;

    TupleSet() = default;
    explicit TupleSet(RelationId relation) : m_relation(relation) {}

    [[nodiscard]] RelationId relation() const noexcept { return m_relation; }
    [[nodiscard]] Members const& members() const noexcept { return m_members; }
    [[nodiscard]] bool empty() const noexcept { return m_members.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return m_members.size(); }
    [[nodiscard]] iterator begin() const { return m_members.begin(); }
    [[nodiscard]] iterator end() const { return m_members.end(); }
    [[nodiscard]] double top() const { return m_members.empty() ? 0.0 : m_members.begin()->tscore_u; }

    [[nodiscard]] iterator find(TupleRef ref) const;
    [[nodiscard]] bool contains(TupleRef ref) const { return m_index.contains(ref); }
    iterator insert(ScoredTuple tuple);
    void erase(TupleRef ref);
    /// Replaces all members; used after an envelope refresh.
    void assign(std::vector<ScoredTuple> tuples);

  private:
    RelationId m_relation = 0;
    Members m_members;
    std::unordered_map<TupleRef, iterator, TupleRefHash> m_index;
};

ScoredTuple score_member(Store const& store, TupleRef ref, KeywordQuery const& query, ScoreEnvelope const& envelope);

/// One query tuple set per relation (empty for relations without text).
std::vector<TupleSet> compute_tuple_sets(Store const& store, KeywordQuery const& query, ScoreEnvelope const& envelope);

/// A join edge of a CN: `referencing` holds the foreign key `fk` pointing at
/// `referenced`.
struct CnEdge {
    std::size_t referencing = 0;
    std::size_t referenced = 0;
    EdgeId fk = 0;
};

struct CandidateNetwork {
    std::size_t id = 0;
    std::vector<TupleSetId> nodes;
    std::vector<CnEdge> edges;
    std::string key;
    double max_score = 0;
    std::size_t cluster = 0;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
    [[nodiscard]] std::string to_string(SchemaGraph const& schema) const;
};

/// Label used for the edge as seen from `from` towards its neighbour.
std::string edge_label(CnEdge const& edge, std::size_t from);

/// Minimal AHU encoding over all rootings; equal iff the labelled trees are
/// isomorphic.
std::string canonical_key(CandidateNetwork const& cn);
/// Encoding of the subtree at `node` seen from its neighbour `parent`; pass
/// SIZE_MAX to encode the whole tree rooted at `node`.
std::string rooted_key(CandidateNetwork const& cn, std::size_t node, std::size_t parent);

/// Structural checks: tree shape, query leaves, size bound, and no node holding
/// the same foreign key towards two neighbours.
bool valid_cn(CandidateNetwork const& cn, SchemaGraph const& schema, std::size_t cn_max);

/// Every valid CN over the relations flagged in `has_query`, deduplicated and
/// numbered from 1 in (size, key) order.
std::vector<CandidateNetwork> generate_cns(SchemaGraph const& schema, std::vector<bool> const& has_query,
                                           std::size_t cn_max);

/// Sum of the top upper score of each query slot divided by size; 0 when a
/// query slot is empty.
double max_score(CandidateNetwork const& cn, std::vector<TupleSet> const& sets);

double cluster_feature(CandidateNetwork const& cn);

struct CnCluster {
    std::size_t id = 0;
    std::vector<std::size_t> members;  // indexes into the input
    double centroid = 0;
};

/// 1-D k-means with K = max(1, round(ratio * n)); cluster ids ascend with the
/// centroid. Returns the clusters and writes each value's cluster id.
std::vector<CnCluster> kmeans_1d(std::vector<double> const& values, std::size_t k, std::vector<std::size_t>& assignment);
std::size_t cluster_count(std::size_t n, double ratio);

/// Clusters on Max(C)·ln(size(C)); stores the cluster id in each CN.
std::vector<CnCluster> cluster_cns(std::vector<CandidateNetwork>& cns, double ratio);

}  // namespace kws
