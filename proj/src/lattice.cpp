#include "kws/lattice.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace kws {

std::size_t root_of(CandidateNetwork const& cn)
{
    auto n = cn.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto const& e: cn.edges) {
        adj[e.referencing].push_back(e.referenced);
        adj[e.referenced].push_back(e.referencing);
    }
    auto eccentricity = [&](std::size_t from) {
        std::vector<std::size_t> dist(n, npos);
        std::deque<std::size_t> queue{from};
        dist[from] = 0;
        std::size_t far = 0;
        while (!queue.empty()) {
            auto x = queue.front();
            queue.pop_front();
            far = std::max(far, dist[x]);
            for (auto y: adj[x]) {
                if (dist[y] == npos) {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        return far;
    };
    std::size_t best = 0;
    std::size_t best_ecc = npos;
    std::string best_key;
    for (std::size_t v = 0; v < n; ++v) {
        auto ecc = eccentricity(v);
        if (ecc > best_ecc) {
            continue;
        }
        auto key = rooted_key(cn, v, npos);
        bool better = ecc < best_ecc;
        if (!better) {
            bool v_free = !cn.nodes[v].query;
            bool b_free = !cn.nodes[best].query;
            better = v_free != b_free ? v_free : key < best_key;
        }
        if (better) {
            best = v;
            best_ecc = ecc;
            best_key = std::move(key);
        }
    }
    return best;
}

std::size_t Lattice::embed(CandidateNetwork const& cn, std::size_t v, std::size_t parent, std::vector<std::size_t>& created)
{
    auto key = rooted_key(cn, v, parent);
    if (auto it = m_by_key.find({cn.cluster, key}); it != m_by_key.end()) {
        return it->second;
    }
    std::map<std::tuple<std::size_t, EdgeId, bool>, std::size_t> grouped;
    for (auto const& e: cn.edges) {
        std::size_t other;
        if (e.referencing == v) {
            other = e.referenced;
        } else if (e.referenced == v) {
            other = e.referencing;
        } else {
            continue;
        }
        if (other == parent) {
            continue;
        }
        auto child = embed(cn, other, v, created);
        ++grouped[{child, e.fk, e.referencing == v}];
    }
    LatticeNode node;
    node.id = m_nodes.size();
    node.set = cn.nodes[v];
    node.cluster = cn.cluster;
    node.key = key;
    for (auto const& [slot, count]: grouped) {
        node.children.push_back({std::get<0>(slot), std::get<1>(slot), std::get<2>(slot), count});
    }
    for (std::size_t s = 0; s < node.children.size(); ++s) {
        m_nodes[node.children[s].node].parents.push_back({node.id, s});
    }
    m_by_key.emplace(std::make_pair(cn.cluster, std::move(key)), node.id);
    created.push_back(node.id);
    m_nodes.push_back(std::move(node));
    return m_nodes.back().id;
}

std::vector<std::size_t> Lattice::add(CandidateNetwork const& cn)
{
    std::vector<std::size_t> created;
    if (!m_cn_keys.insert(cn.key).second) {
        return created;
    }
    auto root = embed(cn, root_of(cn), npos, created);
    if (m_nodes[root].root_of) {
        throw std::logic_error("lattice node already roots another CN");
    }
    m_nodes[root].root_of = cn.id;
    m_roots[cn.id] = root;
    std::vector<std::size_t> stack{root};
    while (!stack.empty()) {
        auto id = stack.back();
        stack.pop_back();
        if (!m_nodes[id].cns.insert(cn.id).second) {
            continue;
        }
        for (auto const& c: m_nodes[id].children) {
            stack.push_back(c.node);
        }
    }
    return created;
}

std::string Lattice::dump(Store const& store, std::vector<TupleSet> const& sets) const
{
    std::ostringstream out;
    auto const& schema = store.schema();
    for (auto const& n: m_nodes) {
        out << "node " << n.id << " set=" << schema.relation(n.set.relation).name << '/' << (n.query() ? 'Q' : 'F')
            << " cur=";
        if (n.query()) {
            out << std::distance(sets[n.set.relation].begin(), n.cur);
        } else {
            out << '-';
        }
        std::vector<std::string> keys;
        for (auto s: n.output) {
            keys.push_back(store.key_of({n.set.relation, s}));
        }
        std::sort(keys.begin(), keys.end());
        out << " out=[";
        for (std::size_t i = 0; i < keys.size(); ++i) {
            out << (i ? "," : "") << keys[i];
        }
        out << "] cns=[";
        std::size_t i = 0;
        for (auto c: n.cns) {
            out << (i++ ? "," : "") << c;
        }
        out << "]\n";
    }
    return out.str();
}

namespace {

struct JttAdjacency {
    std::vector<std::vector<std::pair<std::size_t, std::string>>> edges;
};

std::string encode_jtt(std::vector<std::string> const& labels, JttAdjacency const& adj, std::size_t x, std::size_t from)
{
    std::vector<std::string> parts;
    for (auto const& [y, label]: adj.edges[x]) {
        if (y != from) {
            parts.push_back(label + encode_jtt(labels, adj, y, x));
        }
    }
    if (parts.empty()) {
        return labels[x];
    }
    std::sort(parts.begin(), parts.end());
    std::string out = labels[x] + "(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        out += (i ? "," : "") + parts[i];
    }
    return out + ")";
}

}  // namespace

std::string jtt_identity(Jtt const& jtt, Store const& store)
{
    auto const& schema = store.schema();
    auto n = jtt.size();
    std::vector<std::string> labels(n);
    JttAdjacency adj;
    adj.edges.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto ref = jtt.nodes[i].ref;
        labels[i] = schema.relation(ref.relation).name + ":" + store.key_of(ref);
        auto p = jtt.nodes[i].parent;
        if (p == npos) {
            continue;
        }
        auto const& attr = schema.edge(jtt.nodes[i].fk).attribute;
        bool parent_refs = jtt.nodes[i].parent_references;
        adj.edges[p].push_back({i, parent_refs ? attr + ">" : "<" + attr});
        adj.edges[i].push_back({p, parent_refs ? "<" + attr : attr + ">"});
    }
    std::string best;
    for (std::size_t r = 0; r < n; ++r) {
        auto s = encode_jtt(labels, adj, r, npos);
        if (r == 0 || s < best) {
            best = std::move(s);
        }
    }
    return best;
}

bool validate_jtt(Jtt const& jtt, std::vector<TupleSet> const& sets)
{
    auto n = jtt.size();
    if (n == 0) {
        return false;
    }
    std::vector<std::size_t> degree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (jtt.nodes[i].parent != npos) {
            ++degree[i];
            ++degree[jtt.nodes[i].parent];
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (jtt.nodes[i].ref == jtt.nodes[j].ref) {
                return false;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto ref = jtt.nodes[i].ref;
        if (degree[i] <= 1 && !sets.at(ref.relation).contains(ref)) {
            return false;
        }
    }
    return true;
}

bool ranks_before(Jtt const& a, Jtt const& b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    if (a.size() != b.size()) {
        return a.size() < b.size();
    }
    return a.identity < b.identity;
}

TopKQueue::RankKey TopKQueue::rank_key(ResultId id) const
{
    auto const& j = *m_results[id];
    return {j.score, j.size(), j.identity, id};
}

std::optional<ResultId> TopKQueue::add(Jtt jtt)
{
    if (m_by_identity.contains(jtt.identity)) {
        return std::nullopt;
    }
    ResultId id;
    if (!m_free.empty()) {
        id = m_free.back();
        m_free.pop_back();
        m_results[id] = std::move(jtt);
    } else {
        id = m_results.size();
        m_results.emplace_back(std::move(jtt));
    }
    auto const& j = *m_results[id];
    m_by_identity.emplace(j.identity, id);
    m_ranked.insert(rank_key(id));
    m_by_upper.insert({j.score_u, id});
    for (auto const& n: j.nodes) {
        m_positions[{n.lattice_node, n.ref}].insert(id);
    }
    return id;
}

void TopKQueue::remove(ResultId id)
{
    auto& slot = m_results.at(id);
    if (!slot) {
        return;
    }
    auto const& j = *slot;
    m_ranked.erase(rank_key(id));
    m_by_upper.erase(m_by_upper.find({j.score_u, id}));
    for (auto const& n: j.nodes) {
        auto it = m_positions.find({n.lattice_node, n.ref});
        it->second.erase(id);
        if (it->second.empty()) {
            m_positions.erase(it);
        }
    }
    m_by_identity.erase(j.identity);
    slot.reset();
    m_free.push_back(id);
}

std::size_t TopKQueue::purge_at(std::size_t node, TupleRef ref)
{
    auto it = m_positions.find({node, ref});
    if (it == m_positions.end()) {
        return 0;
    }
    auto ids = it->second;
    for (auto id: ids) {
        remove(id);
    }
    return ids.size();
}

void TopKQueue::set_scores(ResultId id, double score, double score_u)
{
    auto& j = *m_results.at(id);
    if (j.score == score && j.score_u == score_u) {
        return;
    }
    m_ranked.erase(rank_key(id));
    m_by_upper.erase(m_by_upper.find({j.score_u, id}));
    j.score = score;
    j.score_u = score_u;
    m_ranked.insert(rank_key(id));
    m_by_upper.insert({score_u, id});
}

double TopKQueue::kth(std::size_t n) const
{
    if (n == 0 || n > m_ranked.size()) {
        return -std::numeric_limits<double>::infinity();
    }
    auto it = m_ranked.begin();
    std::advance(it, static_cast<long>(n - 1));
    return it->score;
}

std::size_t TopKQueue::count_score_at_least(double theta) const
{
    std::size_t count = 0;
    for (auto const& r: m_ranked) {
        if (r.score < theta) {
            break;
        }
        ++count;
    }
    return count;
}

std::size_t TopKQueue::count_upper_at_least(double theta) const
{
    auto it = m_by_upper.lower_bound({theta, 0});
    return static_cast<std::size_t>(std::distance(it, m_by_upper.end()));
}

std::vector<ResultId> TopKQueue::upper_at_least(double theta) const
{
    std::vector<ResultId> out;
    for (auto it = m_by_upper.lower_bound({theta, 0}); it != m_by_upper.end(); ++it) {
        out.push_back(it->second);
    }
    return out;
}

std::vector<ResultId> TopKQueue::all() const
{
    std::vector<ResultId> out;
    for (auto const& r: m_ranked) {
        out.push_back(r.id);
    }
    return out;
}

std::vector<Jtt const*> TopKQueue::first(std::size_t k, double theta) const
{
    std::vector<Jtt const*> out;
    for (auto const& r: m_ranked) {
        if (out.size() >= k || r.score < theta) {
            break;
        }
        out.push_back(&*m_results[r.id]);
    }
    return out;
}

}  // namespace kws
