#include "kws/cngen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace kws {

namespace {

constexpr std::size_t no_parent = std::numeric_limits<std::size_t>::max();

std::string label(TupleSetId id)
{
    return std::to_string(id.relation) + (id.query ? "Q" : "F");
}

std::vector<std::vector<std::size_t>> incident_edges(CandidateNetwork const& cn)
{
    std::vector<std::vector<std::size_t>> adj(cn.size());
    for (std::size_t e = 0; e < cn.edges.size(); ++e) {
        adj[cn.edges[e].referencing].push_back(e);
        adj[cn.edges[e].referenced].push_back(e);
    }
    return adj;
}

std::string encode(CandidateNetwork const& cn, std::vector<std::vector<std::size_t>> const& adj, std::size_t node,
                   std::size_t parent)
{
    std::vector<std::string> parts;
    for (auto e: adj[node]) {
        auto const& edge = cn.edges[e];
        auto other = edge.referencing == node ? edge.referenced : edge.referencing;
        if (other == parent) {
            continue;
        }
        parts.push_back(edge_label(edge, node) + encode(cn, adj, other, node));
    }
    std::sort(parts.begin(), parts.end());
    std::string out = label(cn.nodes[node]) + "(";
    for (auto const& p: parts) {
        out += p;
    }
    return out + ")";
}

std::size_t free_leaves(CandidateNetwork const& cn)
{
    std::vector<std::size_t> degree(cn.size(), 0);
    for (auto const& e: cn.edges) {
        ++degree[e.referencing];
        ++degree[e.referenced];
    }
    std::size_t count = 0;
    for (std::size_t i = 0; i < cn.size(); ++i) {
        count += (degree[i] <= 1 && !cn.nodes[i].query) ? 1 : 0;
    }
    return count;
}

bool holds_fk(CandidateNetwork const& cn, std::size_t node, EdgeId fk)
{
    return std::any_of(cn.edges.begin(), cn.edges.end(), [&](CnEdge const& e) {
        return e.referencing == node && e.fk == fk;
    });
}

std::string describe(CandidateNetwork const& cn, SchemaGraph const& schema,
                     std::vector<std::vector<std::size_t>> const& adj, std::size_t node, std::size_t parent)
{
    std::string out = to_string(cn.nodes[node], schema);
    std::vector<std::string> parts;
    for (auto e: adj[node]) {
        auto const& edge = cn.edges[e];
        auto other = edge.referencing == node ? edge.referenced : edge.referencing;
        if (other == parent) {
            continue;
        }
        parts.push_back((edge.referencing == node ? "->" : "<-") + describe(cn, schema, adj, other, node));
    }
    if (!parts.empty()) {
        out += "(";
        for (std::size_t i = 0; i < parts.size(); ++i) {
            out += (i ? " " : "") + parts[i];
        }
        out += ")";
    }
    return out;
}

}  // namespace

std::string to_string(TupleSetId id, SchemaGraph const& schema)
{
    return schema.relation(id.relation).name + (id.query ? "^Q" : "^F");
}

TupleSet::iterator TupleSet::find(TupleRef ref) const
{
    auto it = m_index.find(ref);
    return it == m_index.end() ? m_members.end() : it->second;
}

TupleSet::iterator TupleSet::insert(ScoredTuple tuple)
{
    auto ref = tuple.ref;
    auto [it, inserted] = m_members.insert(std::move(tuple));
    if (!inserted) {
        throw StoreError("tuple already in its tuple set");
    }
    m_index.emplace(ref, it);
    return it;
}

void TupleSet::erase(TupleRef ref)
{
    auto it = m_index.find(ref);
    if (it == m_index.end()) {
        return;
    }
    m_members.erase(it->second);
    m_index.erase(it);
}

void TupleSet::assign(std::vector<ScoredTuple> tuples)
{
    m_members.clear();
    m_index.clear();
    for (auto& t: tuples) {
        insert(std::move(t));
    }
}

ScoredTuple score_member(Store const& store, TupleRef ref, KeywordQuery const& query, ScoreEnvelope const& envelope)
{
    ScoredTuple st;
    st.ref = ref;
    st.key = store.key_of(ref);
    st.dl = store.tuple(ref).dl;
    st.tf.reserve(query.size());
    for (auto const& w: query.keywords) {
        st.tf.push_back(store.tf(ref, w));
    }
    st.tscore_u = envelope.tscore_upper(ref.relation, st.tf, st.dl);
    return st;
}

std::vector<TupleSet> compute_tuple_sets(Store const& store, KeywordQuery const& query, ScoreEnvelope const& envelope)
{
    auto const& schema = store.schema();
    std::vector<TupleSet> sets;
    sets.reserve(schema.size());
    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        sets.emplace_back(rel);
        if (!schema.relation(rel).has_text()) {
            continue;
        }
        std::vector<ScoredTuple> members;
        for (auto const& m: store.matched_tuples(rel, query.keywords)) {
            members.push_back(score_member(store, {rel, m.slot}, query, envelope));
        }
        sets.back().assign(std::move(members));
    }
    return sets;
}

std::string CandidateNetwork::to_string(SchemaGraph const& schema) const
{
    if (nodes.empty()) {
        return "";
    }
    return describe(*this, schema, incident_edges(*this), 0, no_parent);
}

std::string edge_label(CnEdge const& edge, std::size_t from)
{
    return std::to_string(edge.fk) + (edge.referencing == from ? ">" : "<");
}

std::string rooted_key(CandidateNetwork const& cn, std::size_t node, std::size_t parent)
{
    return encode(cn, incident_edges(cn), node, parent);
}

std::string canonical_key(CandidateNetwork const& cn)
{
    auto adj = incident_edges(cn);
    std::string best;
    for (std::size_t root = 0; root < cn.size(); ++root) {
        auto k = encode(cn, adj, root, no_parent);
        if (root == 0 || k < best) {
            best = std::move(k);
        }
    }
    return best;
}

bool valid_cn(CandidateNetwork const& cn, SchemaGraph const& schema, std::size_t cn_max)
{
    auto n = cn.size();
    if (n == 0 || n > cn_max || cn.edges.size() != n - 1) {
        return false;
    }
    for (auto const& e: cn.edges) {
        if (e.referencing >= n || e.referenced >= n || e.fk >= schema.edges().size()) {
            return false;
        }
        auto const& fk = schema.edge(e.fk);
        if (cn.nodes[e.referencing].relation != fk.from || cn.nodes[e.referenced].relation != fk.to) {
            return false;
        }
    }
    for (std::size_t i = 0; i < cn.edges.size(); ++i) {
        for (std::size_t j = i + 1; j < cn.edges.size(); ++j) {
            if (cn.edges[i].referencing == cn.edges[j].referencing && cn.edges[i].fk == cn.edges[j].fk) {
                return false;
            }
        }
    }
    // connected with n-1 edges means a tree
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) {
            x = parent[x] = parent[parent[x]];
        }
        return x;
    };
    for (auto const& e: cn.edges) {
        auto a = root(e.referencing);
        auto b = root(e.referenced);
        if (a == b) {
            return false;
        }
        parent[a] = b;
    }
    if (n == 1) {
        return cn.nodes[0].query;
    }
    return free_leaves(cn) == 0;
}

std::vector<CandidateNetwork> generate_cns(SchemaGraph const& schema, std::vector<bool> const& has_query,
                                           std::size_t cn_max)
{
    std::vector<CandidateNetwork> out;
    std::set<std::string> seen;
    std::deque<CandidateNetwork> frontier;
    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        if (rel < has_query.size() && has_query[rel]) {
            CandidateNetwork cn;
            cn.nodes.push_back({rel, true});
            cn.key = canonical_key(cn);
            seen.insert(cn.key);
            out.push_back(cn);
            frontier.push_back(std::move(cn));
        }
    }
    auto try_add = [&](CandidateNetwork const& base, std::size_t at, RelationId rel, EdgeId fk, bool base_refs) {
        for (bool query: {false, true}) {
            if (query && !(rel < has_query.size() && has_query[rel])) {
                continue;
            }
            auto cn = base;
            auto added = cn.nodes.size();
            cn.nodes.push_back({rel, query});
            if (base_refs) {
                cn.edges.push_back({at, added, fk});
            } else {
                cn.edges.push_back({added, at, fk});
            }
            if (free_leaves(cn) > cn_max - cn.size()) {
                continue;
            }
            cn.key = canonical_key(cn);
            if (!seen.insert(cn.key).second) {
                continue;
            }
            if (free_leaves(cn) == 0) {
                out.push_back(cn);
            }
            if (cn.size() < cn_max) {
                frontier.push_back(std::move(cn));
            }
        }
    };
    while (!frontier.empty()) {
        auto base = std::move(frontier.front());
        frontier.pop_front();
        for (std::size_t i = 0; i < base.size(); ++i) {
            auto rel = base.nodes[i].relation;
            for (auto const& fk: schema.edges()) {
                if (fk.from == rel && !holds_fk(base, i, fk.id)) {
                    try_add(base, i, fk.to, fk.id, true);
                }
                if (fk.to == rel) {
                    try_add(base, i, fk.from, fk.id, false);
                }
            }
        }
    }
    std::sort(out.begin(), out.end(), [](auto const& a, auto const& b) {
        return a.size() != b.size() ? a.size() < b.size() : a.key < b.key;
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].id = i + 1;
    }
    return out;
}

double max_score(CandidateNetwork const& cn, std::vector<TupleSet> const& sets)
{
    std::vector<double> tops;
    for (auto const& node: cn.nodes) {
        if (!node.query) {
            tops.push_back(0.0);
            continue;
        }
        auto const& set = sets.at(node.relation);
        if (set.empty()) {
            return 0.0;
        }
        tops.push_back(set.top());
    }
    return normalized_sum(std::move(tops), cn.size());
}

double cluster_feature(CandidateNetwork const& cn)
{
    return cn.max_score * std::log(static_cast<double>(cn.size()));
}

std::size_t cluster_count(std::size_t n, double ratio)
{
    auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(n, 1));
}

std::vector<CnCluster> kmeans_1d(std::vector<double> const& values, std::size_t k, std::vector<std::size_t>& assignment)
{
    auto n = values.size();
    assignment.assign(n, 0);
    if (n == 0) {
        return {};
    }
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<double> centroids(k);
    if (k == n) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
        std::vector<CnCluster> clusters(n);
        for (std::size_t c = 0; c < n; ++c) {
            clusters[c] = {c, {order[c]}, values[order[c]]};
            assignment[order[c]] = c;
        }
        return clusters;
    }

    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t c = 0; c < k; ++c) {
        double pos = (static_cast<double>(c) + 0.5) / static_cast<double>(k) * static_cast<double>(n - 1);
        auto lo = static_cast<std::size_t>(std::floor(pos));
        auto hi = std::min(lo + 1, n - 1);
        centroids[c] = sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    }

    auto assign = [&] {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c) {
                if (std::abs(values[i] - centroids[c]) < std::abs(values[i] - centroids[best])) {
                    best = c;
                }
            }
            changed = changed || assignment[i] != best;
            assignment[i] = best;
        }
        return changed;
    };

    assign();
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> sum(k, 0.0);
        std::vector<std::size_t> count(k, 0);
        std::vector<double> lo(k, std::numeric_limits<double>::infinity());
        std::vector<double> hi(k, -std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < n; ++i) {
            auto c = assignment[i];
            sum[c] += values[i];
            ++count[c];
            lo[c] = std::min(lo[c], values[i]);
            hi[c] = std::max(hi[c], values[i]);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) {
                centroids[c] = sum[c] / static_cast<double>(count[c]);
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] > 0) {
                continue;
            }
            std::size_t widest = k;
            for (std::size_t d = 0; d < k; ++d) {
                if (count[d] > 1 && hi[d] > lo[d] && (widest == k || hi[d] - lo[d] > hi[widest] - lo[widest])) {
                    widest = d;
                }
            }
            if (widest == k) {
                break;
            }
            // split the widest cluster at its midpoint
            double mid = (lo[widest] + hi[widest]) / 2.0;
            centroids[c] = (mid + hi[widest]) / 2.0;
            centroids[widest] = (lo[widest] + mid) / 2.0;
            hi[widest] = lo[widest];
        }
        if (!assign()) {
            break;
        }
    }

    std::vector<CnCluster> clusters;
    for (std::size_t c = 0; c < k; ++c) {
        CnCluster cl;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment[i] == c) {
                cl.members.push_back(i);
                sum += values[i];
            }
        }
        if (cl.members.empty()) {
            continue;
        }
        cl.centroid = sum / static_cast<double>(cl.members.size());
        clusters.push_back(std::move(cl));
    }
    std::stable_sort(clusters.begin(), clusters.end(), [](auto const& a, auto const& b) {
        return a.centroid < b.centroid;
    });
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        clusters[c].id = c;
        for (auto i: clusters[c].members) {
            assignment[i] = c;
        }
    }
    return clusters;
}

std::vector<CnCluster> cluster_cns(std::vector<CandidateNetwork>& cns, double ratio)
{
    std::vector<double> features;
    features.reserve(cns.size());
    for (auto const& cn: cns) {
        features.push_back(cluster_feature(cn));
    }
    std::vector<std::size_t> assignment;
    auto clusters = kmeans_1d(features, cluster_count(cns.size(), ratio), assignment);
    for (std::size_t i = 0; i < cns.size(); ++i) {
        cns[i].cluster = assignment[i];
    }
    return clusters;
}

}  // namespace kws
