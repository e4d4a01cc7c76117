#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kws/cngen.hpp"
#include "kws/lattice.hpp"
#include "kws/store.hpp"

namespace kws::sample {

// Papers (0), Authors (1), Writes (2); fk 0 is Writes.aid -> Authors, fk 1 is
// Writes.pid -> Papers.
inline SchemaGraph schema()
{
    return load_schema_file(KWS_FIXTURES "/publication/schema.txt");
}

inline Store store()
{
    Store s(schema());
    load_tsv_directory(s, KWS_FIXTURES "/publication");
    return s;
}

inline CandidateNetwork network(std::vector<TupleSetId> nodes, std::vector<CnEdge> edges)
{
    CandidateNetwork cn;
    cn.nodes = std::move(nodes);
    cn.edges = std::move(edges);
    cn.key = canonical_key(cn);
    return cn;
}

inline constexpr TupleSetId pq{0, true}, pf{0, false}, aq{1, true}, af{1, false}, w{2, false};

/// The seven networks of "james p2p" at size bound 5, in the order
/// P^Q, A^Q, P^Q<-W->A^Q, P^Q<-W->A^Q<-W->P^Q, P^Q<-W->A^F<-W->P^Q,
/// A^Q<-W->P^Q<-W->A^Q, A^Q<-W->P^F<-W->A^Q.
inline std::vector<CandidateNetwork> cns()
{
    std::vector<CandidateNetwork> out{
        network({pq}, {}),
        network({aq}, {}),
        network({w, pq, aq}, {{0, 1, 1}, {0, 2, 0}}),
        network({aq, w, pq, w, pq}, {{1, 0, 0}, {1, 2, 1}, {3, 0, 0}, {3, 4, 1}}),
        network({af, w, pq, w, pq}, {{1, 0, 0}, {1, 2, 1}, {3, 0, 0}, {3, 4, 1}}),
        network({pq, w, aq, w, aq}, {{1, 0, 1}, {1, 2, 0}, {3, 0, 1}, {3, 4, 0}}),
        network({pf, w, aq, w, aq}, {{1, 0, 1}, {1, 2, 0}, {3, 0, 1}, {3, 4, 0}}),
    };
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].id = i + 1;
    }
    return out;
}

/// Position (1-based) of `cn` in the list above, matched on the canonical key.
inline std::size_t number_of(CandidateNetwork const& cn)
{
    auto all = cns();
    for (auto const& c: all) {
        if (c.key == cn.key) {
            return c.id;
        }
    }
    return 0;
}

/// Lattice node by tuple set and the tuple sets of its children.
inline std::optional<std::size_t> find_node(Lattice const& lattice, TupleSetId set, std::vector<TupleSetId> children,
                                            std::size_t cluster = 0)
{
    std::sort(children.begin(), children.end());
    for (auto const& n: lattice.nodes()) {
        if (n.set != set || n.cluster != cluster) {
            continue;
        }
        std::vector<TupleSetId> got;
        for (auto const& c: n.children) {
            for (std::size_t m = 0; m < c.multiplicity; ++m) {
                got.push_back(lattice.node(c.node).set);
            }
        }
        std::sort(got.begin(), got.end());
        if (got == children) {
            return n.id;
        }
    }
    return std::nullopt;
}

/// Nodes of the single-cluster lattice, named V1..V9 as in the running
/// example. Returns npos for a missing node.
struct Names {
    std::size_t v[10]{};
};

inline Names names(Lattice const& lattice)
{
    auto get = [&](TupleSetId s, std::vector<TupleSetId> c) { return find_node(lattice, s, std::move(c)).value_or(npos); };
    Names n;
    n.v[0] = npos;
    n.v[1] = get(pq, {w, w});
    n.v[2] = get(pf, {w, w});
    n.v[3] = get(aq, {w, w});
    n.v[4] = get(af, {w, w});
    n.v[5] = get(w, {aq});
    n.v[6] = get(w, {pq, aq});
    n.v[7] = get(w, {pq});
    n.v[8] = get(aq, {});
    n.v[9] = get(pq, {});
    return n;
}

}  // namespace kws::sample
