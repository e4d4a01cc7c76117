#include "kws/oracle.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <set>
#include <unordered_map>

#include "kws/cngen.hpp"

namespace kws {

namespace {

struct Link {
    TupleRef holder;
    TupleRef target;
    EdgeId fk;
};

struct Partial {
    std::vector<TupleRef> nodes;  // sorted
    std::vector<Link> links;
};

class TupleGraph {
  public:
    TupleGraph(Store const& store, KeywordQuery const& query) : m_store(store), m_query(query) {}

    bool matched(TupleRef ref)
    {
        auto [it, fresh] = m_matched.try_emplace(ref, false);
        if (fresh) {
            for (auto const& w: m_query.keywords) {
                if (m_store.tf(ref, w) > 0) {
                    it->second = true;
                    break;
                }
            }
        }
        return it->second;
    }

    std::vector<std::pair<TupleRef, Link>> const& adjacent(TupleRef ref)
    {
        auto [it, fresh] = m_adjacent.try_emplace(ref);
        if (fresh) {
            auto const& schema = m_store.schema();
            for (auto fk: schema.incident(ref.relation)) {
                auto const& e = schema.edge(fk);
                if (e.from == ref.relation) {
                    for (auto s: m_store.join_neighbors(ref, fk, Direction::toward_referenced)) {
                        TupleRef y{e.to, s};
                        it->second.push_back({y, {ref, y, fk}});
                    }
                }
                if (e.to == ref.relation) {
                    for (auto s: m_store.join_neighbors(ref, fk, Direction::toward_referencing)) {
                        TupleRef y{e.from, s};
                        it->second.push_back({y, {y, ref, fk}});
                    }
                }
            }
        }
        return it->second;
    }

  private:
    Store const& m_store;
    KeywordQuery const& m_query;
    std::unordered_map<TupleRef, bool, TupleRefHash> m_matched;
    std::unordered_map<TupleRef, std::vector<std::pair<TupleRef, Link>>, TupleRefHash> m_adjacent;
};

std::vector<std::uint64_t> key_of(Partial const& p)
{
    std::vector<std::uint64_t> key;
    for (auto n: p.nodes) {
        key.push_back(n.packed());
    }
    std::vector<std::array<std::uint64_t, 3>> links;
    for (auto const& l: p.links) {
        links.push_back({l.holder.packed(), l.target.packed(), l.fk});
    }
    std::sort(links.begin(), links.end());
    for (auto const& l: links) {
        key.insert(key.end(), l.begin(), l.end());
    }
    return key;
}

std::vector<std::size_t> degrees(Partial const& p)
{
    std::vector<std::size_t> deg(p.nodes.size(), 0);
    auto index = [&](TupleRef r) {
        return static_cast<std::size_t>(std::lower_bound(p.nodes.begin(), p.nodes.end(), r) - p.nodes.begin());
    };
    for (auto const& l: p.links) {
        ++deg[index(l.holder)];
        ++deg[index(l.target)];
    }
    return deg;
}

Jtt to_jtt(Partial const& p, Store const& store)
{
    Jtt jtt;
    std::vector<std::size_t> at(p.nodes.size(), npos);
    auto index = [&](TupleRef r) {
        return static_cast<std::size_t>(std::lower_bound(p.nodes.begin(), p.nodes.end(), r) - p.nodes.begin());
    };
    std::deque<std::size_t> queue{0};
    at[0] = 0;
    jtt.nodes.push_back({p.nodes[0], npos, 0, false, npos});
    while (!queue.empty()) {
        auto x = queue.front();
        queue.pop_front();
        for (auto const& l: p.links) {
            std::size_t y;
            bool x_holds;
            if (index(l.holder) == x) {
                y = index(l.target);
                x_holds = true;
            } else if (index(l.target) == x) {
                y = index(l.holder);
                x_holds = false;
            } else {
                continue;
            }
            if (at[y] != npos) {
                continue;
            }
            at[y] = jtt.nodes.size();
            jtt.nodes.push_back({p.nodes[y], at[x], l.fk, x_holds, npos});
            queue.push_back(y);
        }
    }
    jtt.identity = jtt_identity(jtt, store);
    return jtt;
}

}  // namespace

OracleResult enumerate_jtts(Store const& store, KeywordQuery const& query, std::size_t cn_max)
{
    OracleResult result;
    if (cn_max == 0) {
        return result;
    }
    TupleGraph graph(store, query);
    auto const& schema = store.schema();
    std::set<std::vector<std::uint64_t>> seen;
    std::vector<Partial> frontier;
    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        for (auto s: store.live_slots(rel)) {
            TupleRef ref{rel, s};
            if (graph.matched(ref)) {
                Partial p{{ref}, {}};
                seen.insert(key_of(p));
                frontier.push_back(std::move(p));
            }
        }
    }
    for (std::size_t size = 1; !frontier.empty(); ++size) {
        std::vector<Partial> next;
        for (auto const& p: frontier) {
            auto deg = degrees(p);
            bool complete = true;
            for (std::size_t i = 0; i < p.nodes.size(); ++i) {
                if (deg[i] <= 1 && !graph.matched(p.nodes[i])) {
                    complete = false;
                    break;
                }
            }
            if (complete) {
                auto jtt = to_jtt(p, store);
                std::vector<double> scores;
                CandidateNetwork cn;
                for (auto const& n: jtt.nodes) {
                    bool m = graph.matched(n.ref);
                    scores.push_back(m ? tscore(store, n.ref, query) : 0.0);
                    cn.nodes.push_back({n.ref.relation, m});
                }
                for (std::size_t i = 1; i < jtt.nodes.size(); ++i) {
                    auto const& n = jtt.nodes[i];
                    cn.edges.push_back(n.parent_references ? CnEdge{n.parent, i, n.fk} : CnEdge{i, n.parent, n.fk});
                }
                jtt.score = jtt_score(std::move(scores));
                jtt.score_u = jtt.score;
                ++result.per_cn[canonical_key(cn)];
                result.jtts.push_back(std::move(jtt));
            }
            if (size == cn_max) {
                continue;
            }
            for (auto x: p.nodes) {
                for (auto const& [y, link]: graph.adjacent(x)) {
                    if (std::binary_search(p.nodes.begin(), p.nodes.end(), y)) {
                        continue;
                    }
                    Partial q = p;
                    q.nodes.insert(std::lower_bound(q.nodes.begin(), q.nodes.end(), y), y);
                    q.links.push_back(link);
                    auto qdeg = degrees(q);
                    std::size_t open = 0;
                    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
                        open += qdeg[i] <= 1 && !graph.matched(q.nodes[i]);
                    }
                    if (open > cn_max - q.nodes.size()) {
                        continue;
                    }
                    if (seen.insert(key_of(q)).second) {
                        next.push_back(std::move(q));
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    std::sort(result.jtts.begin(), result.jtts.end(), ranks_before);
    return result;
}

std::vector<Jtt> brute_force_topk(Store const& store, KeywordQuery const& query, std::size_t k, std::size_t cn_max)
{
    auto all = enumerate_jtts(store, query, cn_max).jtts;
    if (all.size() > k) {
        all.resize(k);
    }
    return all;
}

std::vector<std::string> enumerate_cn_keys(SchemaGraph const& schema, std::vector<bool> const& has_query,
                                           std::size_t cn_max)
{
    std::set<std::string> seen;
    std::set<std::string> valid;
    std::vector<CandidateNetwork> frontier;
    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        if (has_query[rel]) {
            CandidateNetwork cn;
            cn.nodes.push_back({rel, true});
            cn.key = canonical_key(cn);
            seen.insert(cn.key);
            frontier.push_back(std::move(cn));
        }
    }
    while (!frontier.empty()) {
        std::vector<CandidateNetwork> next;
        for (auto const& cn: frontier) {
            if (valid_cn(cn, schema, cn_max)) {
                valid.insert(cn.key);
            }
            if (cn.size() >= cn_max) {
                continue;
            }
            for (std::size_t x = 0; x < cn.size(); ++x) {
                auto rel = cn.nodes[x].relation;
                for (auto fk: schema.incident(rel)) {
                    auto const& e = schema.edge(fk);
                    for (int side = 0; side < 2; ++side) {
                        bool x_holds = side == 0;
                        if ((x_holds && e.from != rel) || (!x_holds && e.to != rel)) {
                            continue;
                        }
                        auto other = x_holds ? e.to : e.from;
                        for (int q = 0; q < 2; ++q) {
                            if (q == 1 && !has_query[other]) {
                                continue;
                            }
                            auto grown = cn;
                            auto y = grown.nodes.size();
                            grown.nodes.push_back({other, q == 1});
                            grown.edges.push_back(x_holds ? CnEdge{x, y, fk} : CnEdge{y, x, fk});
                            grown.key = canonical_key(grown);
                            if (seen.insert(grown.key).second) {
                                next.push_back(std::move(grown));
                            }
                        }
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return {valid.begin(), valid.end()};
}

}  // namespace kws
