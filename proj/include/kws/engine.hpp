#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kws/cngen.hpp"
#include "kws/lattice.hpp"
#include "kws/score.hpp"
#include "kws/store.hpp"

namespace kws {

struct UpdateOp {
    enum class Kind : std::uint8_t { insertion, deletion };

    Kind kind = Kind::insertion;
    std::string relation;
    std::string key;
    Tuple tuple;  // insertions only

    static UpdateOp insert(std::string relation, Tuple tuple)
    {
        auto key = tuple.key();
        return {Kind::insertion, std::move(relation), std::move(key), std::move(tuple)};
    }
    static UpdateOp erase(std::string relation, std::string key)
    {
        return {Kind::deletion, std::move(relation), std::move(key), {}};
    }
};

struct EngineConfig {
    std::size_t cn_max = 6;
    double kmean = 0.6;
    EnvelopePolicy envelope;
    std::size_t dk_step = 2;
    std::size_t dk_max = 20;
    bool join_cache = true;
    bool rollback = true;
};

struct Metrics {
    std::uint64_t store_accesses = 0;
    std::uint64_t inserts_recursed = 0;
    std::uint64_t deletes_recursed = 0;
    std::uint64_t results_purged = 0;
    std::uint64_t micros = 0;

    [[nodiscard]] std::uint64_t cost() const noexcept { return store_accesses + inserts_recursed + deletes_recursed; }
};

/// Joined-tuple lists fetched from the store, keyed by (tuple, edge,
/// direction). Valid for one store snapshot; cleared on every update.
class JoinCache {
  public:
    explicit JoinCache(bool enabled = true) : m_enabled(enabled) {}

    std::vector<Slot> neighbors(Store const& store, TupleRef ref, Tuple const& tuple, EdgeId fk, Direction dir);
    void clear() { m_entries.clear(); }
    [[nodiscard]] bool enabled() const noexcept { return m_enabled; }
    [[nodiscard]] std::size_t size() const noexcept { return m_entries.size(); }

  private:
    struct Key {
        std::uint64_t ref;
        EdgeId fk;
        Direction dir;
        bool operator==(Key const&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(Key const& k) const noexcept
        {
            return std::hash<std::uint64_t>{}(k.ref * 31U + k.fk * 2U + static_cast<unsigned>(k.dir));
        }
    };

    bool m_enabled;
    std::unordered_map<Key, std::vector<Slot>, KeyHash> m_entries;
};

/// Counts of the partitions of the result queue and the bound state, for
/// invariant checks between operations.
struct EngineReport {
    std::vector<std::string> semijoin_violations;
    std::vector<std::string> result_violations;
    std::vector<std::string> envelope_violations;
    double max_node_upper = 0;
    std::size_t upper_at_least_theta = 0;
    std::size_t score_at_least_theta = 0;
    std::size_t score_above_theta = 0;
    std::size_t ties_at_theta = 0;  // score or score_u equal to θ
};

/// A continual top-k keyword query over a store: candidate networks merged
/// into a lattice, evaluated in a pipeline and maintained under updates.
class Engine {
  public:
    using Observer = std::function<void(Jtt const& candidate, bool valid)>;

    /// Builds tuple sets, CNs and the lattice. Does not evaluate.
    Engine(Store& store, KeywordQuery query, EngineConfig config = {});

    /// Runs the pipelined evaluation to its stopping point.
    Metrics evaluate();
    /// One round of the pipelined evaluation. Returns false (and fixes θ)
    /// when no node can contribute anymore.
    bool step();

    /// Applies one update and restores the top-k. Throws StoreError for an
    /// unknown relation or key; the engine is unchanged in that case.
    Metrics maintain(UpdateOp const& op);

    [[nodiscard]] std::vector<Jtt const*> current_topk() const;
    [[nodiscard]] double theta() const noexcept { return m_theta; }
    [[nodiscard]] std::size_t delta_k() const noexcept { return m_delta_k; }
    [[nodiscard]] KeywordQuery const& query() const noexcept { return m_query; }
    [[nodiscard]] EngineConfig const& config() const noexcept { return m_config; }
    [[nodiscard]] Store const& store() const noexcept { return m_store; }
    [[nodiscard]] Lattice const& lattice() const noexcept { return m_lattice; }
    [[nodiscard]] std::vector<CandidateNetwork> const& cns() const noexcept { return m_cns; }
    [[nodiscard]] std::vector<CnCluster> const& clusters() const noexcept { return m_clusters; }
    [[nodiscard]] std::vector<TupleSet> const& tuple_sets() const noexcept { return m_sets; }
    [[nodiscard]] ScoreEnvelope const& envelope() const noexcept { return m_envelope; }
    [[nodiscard]] TopKQueue const& results() const noexcept { return m_topk; }
    [[nodiscard]] Metrics const& last_metrics() const noexcept { return m_metrics; }
    [[nodiscard]] std::size_t rounds() const noexcept { return m_rounds; }

    /// Best bound of any tree still reachable through the node's cursor; 0 if
    /// none (exhausted cursor, empty child output or no live CN).
    [[nodiscard]] double node_upper(std::size_t node) const;
    /// Bound of trees placing `t` at query node `node`, over its CNs.
    [[nodiscard]] double tuple_upper(std::size_t node, ScoredTuple const& t) const;

    void set_observer(Observer observer) { m_observer = std::move(observer); }

    /// Recomputes buffers, results and bounds from scratch and reports any
    /// disagreement with the maintained state. Expensive.
    [[nodiscard]] EngineReport check() const;

    [[nodiscard]] std::string dump() const { return m_lattice.dump(m_store, m_sets); }
    [[nodiscard]] double rescored(Jtt const& jtt) const;

  private:
    struct ChainEntry {
        std::size_t node;
        TupleRef ref;
        std::size_t slot;  // child slot of the next entry's node that holds this one
    };
    using Chain = std::vector<ChainEntry>;
    using Forest = std::vector<JttNode>;

    struct CnShape {
        std::size_t cn;
        std::size_t size;
        std::vector<RelationId> others;  // other query slots, one own occurrence removed
    };

    void prepare_node(std::size_t id);
    void prepare_shapes();
    double bound(std::size_t node, double t_upper) const;
    double pending_upper(std::size_t node) const;
    std::optional<std::size_t> best_node(double floor) const;
    void process(std::size_t node);
    void advance(LatticeNode& node);
    bool processed(LatticeNode const& node, TupleRef ref) const;

    std::vector<Slot> neighbors(TupleRef ref, EdgeId fk, Direction dir);
    bool joins_output(TupleRef ref, ChildSlot const& slot);
    bool supported(std::size_t node, TupleRef ref);

    void insert_proc(std::size_t node, TupleRef ref, Chain& chain);
    void delete_proc(std::size_t node, TupleRef ref);
    void eval_path(std::size_t root, Chain const& chain);
    std::vector<Forest> subtrees(std::size_t node, TupleRef ref, Chain const& chain, std::size_t depth,
                                 std::map<std::pair<std::size_t, Slot>, std::vector<Forest>>& memo);
    void offer(std::size_t cn, Forest forest);
    void score(Jtt& jtt) const;
    void rescore(std::vector<ResultId> const& ids);
    void rescore_all();

    void pipeline();
    void drain();
    void resume_or_rollback();
    void rollback();
    void rebuild_set(RelationId rel, std::optional<TupleRef> excluded);
    void admit(TupleSet::iterator it);
    void splice(RelationId rel);

    Store& m_store;
    KeywordQuery m_query;
    EngineConfig m_config;
    ScoreEnvelope m_envelope;
    std::vector<TupleSet> m_sets;
    std::vector<CandidateNetwork> m_cns;
    std::vector<CnCluster> m_clusters;
    Lattice m_lattice;
    TopKQueue m_topk;
    JoinCache m_cache;
    std::vector<std::vector<CnShape>> m_shapes;           // per lattice node
    std::vector<std::vector<std::size_t>> m_nodes_of;     // per relation
    std::vector<std::size_t> m_cn_root;                   // per CN index
    std::unordered_map<std::size_t, std::size_t> m_cn_index;
    std::optional<std::pair<TupleRef, Tuple>> m_ghost;
    Observer m_observer;
    Metrics m_metrics;
    double m_theta = -std::numeric_limits<double>::infinity();
    std::size_t m_delta_k = 0;
    std::size_t m_rounds = 0;
    bool m_evaluated = false;
};

}  // namespace kws
