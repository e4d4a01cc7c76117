#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kws/cngen.hpp"
#include "kws/store.hpp"

namespace kws {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Direction that walks a join edge from the node holding (or not holding)
/// the foreign key to its neighbour.
inline Direction walk(bool from_references)
{
    return from_references ? Direction::toward_referenced : Direction::toward_referencing;
}

/// A child edge of a lattice node. Identical child subtrees reached over the
/// same edge collapse into one slot with a multiplicity.
struct ChildSlot {
    std::size_t node = 0;
    EdgeId fk = 0;
    bool parent_references = false;
    std::size_t multiplicity = 1;

    [[nodiscard]] Direction down() const { return walk(parent_references); }
    [[nodiscard]] Direction up() const { return walk(!parent_references); }
};

struct ParentLink {
    std::size_t node = 0;
    std::size_t slot = 0;
};

struct LatticeNode {
    std::size_t id = 0;
    TupleSetId set;
    std::size_t cluster = 0;
    std::string key;  // rooted subtree encoding, unique within the cluster
    std::vector<ChildSlot> children;
    std::vector<ParentLink> parents;
    std::set<std::size_t> cns;
    std::optional<std::size_t> root_of;
    std::set<Slot> output;

    // query nodes only
    std::unordered_set<TupleRef, TupleRefHash> processed;
    TupleSet::iterator cur;

    [[nodiscard]] bool query() const noexcept { return set.query; }
    [[nodiscard]] bool leaf() const noexcept { return children.empty(); }
};

/// Eccentricity centre; ties prefer a free tuple set, then the smallest
/// rooted encoding.
std::size_t root_of(CandidateNetwork const& cn);

/// Rooted CN trees of each cluster merged on common subtrees.
class Lattice {
  public:
    /// Embeds `cn` (its cluster is taken from cn.cluster) and returns the ids
    /// of nodes created for it, children before parents. A CN whose key is
    /// already embedded is left alone.
    std::vector<std::size_t> add(CandidateNetwork const& cn);

    [[nodiscard]] std::vector<LatticeNode> const& nodes() const noexcept { return m_nodes; }
    [[nodiscard]] LatticeNode& node(std::size_t id) { return m_nodes.at(id); }
    [[nodiscard]] LatticeNode const& node(std::size_t id) const { return m_nodes.at(id); }
    [[nodiscard]] std::size_t size() const noexcept { return m_nodes.size(); }
    [[nodiscard]] std::size_t root(std::size_t cn_id) const { return m_roots.at(cn_id); }
    [[nodiscard]] bool contains(std::string const& cn_key) const { return m_cn_keys.contains(cn_key); }

    bool buffer_insert(std::size_t node, Slot slot) { return m_nodes.at(node).output.insert(slot).second; }
    bool buffer_remove(std::size_t node, Slot slot) { return m_nodes.at(node).output.erase(slot) > 0; }

    /// `node <id> set=<relation>/<Q|F> cur=<idx> out=[keys] cns=[ids]` per node.
    [[nodiscard]] std::string dump(Store const& store, std::vector<TupleSet> const& sets) const;

  private:
    std::size_t embed(CandidateNetwork const& cn, std::size_t v, std::size_t parent, std::vector<std::size_t>& created);

    std::vector<LatticeNode> m_nodes;
    std::map<std::pair<std::size_t, std::string>, std::size_t> m_by_key;
    std::map<std::size_t, std::size_t> m_roots;
    std::set<std::string> m_cn_keys;
};

/// A joint-tuple-tree. Node 0 is the root; every other node records its
/// parent and the join edge to it.
struct JttNode {
    TupleRef ref;
    std::size_t parent = npos;
    EdgeId fk = 0;
    bool parent_references = false;
    std::size_t lattice_node = npos;
};

struct Jtt {
    std::size_t cn = 0;
    std::vector<JttNode> nodes;
    std::string identity;
    double score = 0;
    double score_u = 0;

    [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// Canonical serialisation over relation:key labels, minimal over rootings.
std::string jtt_identity(Jtt const& jtt, Store const& store);

/// Distinct tuples and matched leaves.
bool validate_jtt(Jtt const& jtt, std::vector<TupleSet> const& sets);

/// score desc, size asc, identity asc
bool ranks_before(Jtt const& a, Jtt const& b);

using ResultId = std::size_t;

/// Found results keyed by identity, ranked by score and indexed by the
/// (lattice node, tuple) positions they occupy.
class TopKQueue {
  public:
    /// Returns the new id, or nothing when the identity is already present.
    std::optional<ResultId> add(Jtt jtt);
    void remove(ResultId id);
    /// Removes every result with `ref` at lattice node `node`.
    std::size_t purge_at(std::size_t node, TupleRef ref);
    void set_scores(ResultId id, double score, double score_u);

    [[nodiscard]] Jtt const& get(ResultId id) const { return *m_results.at(id); }
    [[nodiscard]] bool contains(std::string const& identity) const { return m_by_identity.contains(identity); }
    [[nodiscard]] std::size_t size() const noexcept { return m_by_identity.size(); }

    /// Score of the n-th ranked result (1-based), or -inf with fewer results.
    [[nodiscard]] double kth(std::size_t n) const;
    [[nodiscard]] std::size_t count_score_at_least(double theta) const;
    [[nodiscard]] std::size_t count_upper_at_least(double theta) const;
    [[nodiscard]] std::vector<ResultId> upper_at_least(double theta) const;
    [[nodiscard]] std::vector<ResultId> all() const;
    /// First `k` ranked results whose score is at least `theta`.
    [[nodiscard]] std::vector<Jtt const*> first(std::size_t k, double theta) const;

  private:
    struct RankKey {
        double score;
        std::size_t size;
        std::string identity;
        ResultId id;

        bool operator<(RankKey const& o) const
        {
            if (score != o.score) {
                return score > o.score;
            }
            if (size != o.size) {
                return size < o.size;
            }
            return identity < o.identity;
        }
    };
    struct Position {
        std::size_t node;
        TupleRef ref;
        bool operator==(Position const&) const = default;
    };
    struct PositionHash {
        std::size_t operator()(Position const& p) const noexcept
        {
            return std::hash<std::uint64_t>{}(p.ref.packed() * 1000003U + p.node);
        }
    };

    RankKey rank_key(ResultId id) const;

    std::vector<std::optional<Jtt>> m_results;
    std::vector<ResultId> m_free;
    std::unordered_map<std::string, ResultId> m_by_identity;
    std::set<RankKey> m_ranked;
    std::multiset<std::pair<double, ResultId>> m_by_upper;
    std::unordered_map<Position, std::set<ResultId>, PositionHash> m_positions;
};

}  // namespace kws
