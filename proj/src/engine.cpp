#include "kws/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kws {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

void append(std::vector<JttNode>& dst, std::vector<JttNode> const& src, std::size_t attach, ChildSlot const& slot)
{
    auto offset = dst.size();
    for (auto n: src) {
        if (n.parent == npos) {
            n.parent = attach;
            n.fk = slot.fk;
            n.parent_references = slot.parent_references;
        } else {
            n.parent += offset;
        }
        dst.push_back(n);
    }
}

}  // namespace

std::vector<Slot> JoinCache::neighbors(Store const& store, TupleRef ref, Tuple const& tuple, EdgeId fk, Direction dir)
{
    if (!m_enabled) {
        return store.join_neighbors(ref, tuple, fk, dir);
    }
    Key key{ref.packed(), fk, dir};
    if (auto it = m_entries.find(key); it != m_entries.end()) {
        return it->second;
    }
    auto out = store.join_neighbors(ref, tuple, fk, dir);
    m_entries.emplace(key, out);
    return out;
}

Engine::Engine(Store& store, KeywordQuery query, EngineConfig config)
    : m_store(store),
      m_query(std::move(query)),
      m_config(config),
      m_envelope(store, m_query, config.envelope),
      m_cache(config.join_cache),
      m_delta_k(m_query.delta_k)
{
    if (config.cn_max == 0) {
        throw std::invalid_argument("CN size bound must be at least 1");
    }
    auto const& schema = store.schema();
    m_sets = compute_tuple_sets(store, m_query, m_envelope);
    m_nodes_of.resize(schema.size());
    std::vector<bool> has_query;
    for (auto const& s: m_sets) {
        has_query.push_back(!s.empty());
    }
    m_cns = generate_cns(schema, has_query, config.cn_max);
    for (auto& cn: m_cns) {
        cn.max_score = max_score(cn, m_sets);
    }
    if (!m_cns.empty()) {
        m_clusters = cluster_cns(m_cns, config.kmean);
    }
    for (std::size_t i = 0; i < m_cns.size(); ++i) {
        m_cn_index[m_cns[i].id] = i;
        for (auto id: m_lattice.add(m_cns[i])) {
            prepare_node(id);
        }
    }
    prepare_shapes();
}

void Engine::prepare_node(std::size_t id)
{
    auto& node = m_lattice.node(id);
    if (node.query()) {
        node.cur = m_sets[node.set.relation].begin();
    }
    m_nodes_of[node.set.relation].push_back(id);
}

void Engine::prepare_shapes()
{
    m_shapes.assign(m_lattice.size(), {});
    for (auto const& node: m_lattice.nodes()) {
        if (!node.query()) {
            continue;
        }
        for (auto cn_id: node.cns) {
            auto const& cn = m_cns[m_cn_index.at(cn_id)];
            CnShape shape{cn_id, cn.size(), {}};
            bool own_removed = false;
            for (auto const& s: cn.nodes) {
                if (!s.query) {
                    continue;
                }
                if (!own_removed && s.relation == node.set.relation) {
                    own_removed = true;
                    continue;
                }
                shape.others.push_back(s.relation);
            }
            m_shapes[node.id].push_back(std::move(shape));
        }
    }
}

double Engine::bound(std::size_t node, double t_upper) const
{
    double best = neg_inf;
    std::vector<double> tops;
    for (auto const& shape: m_shapes[node]) {
        tops.clear();
        bool live = true;
        for (auto r: shape.others) {
            if (m_sets[r].empty()) {
                live = false;
                break;
            }
            tops.push_back(m_sets[r].top());
        }
        if (live) {
            best = std::max(best, cn_tuple_upper(t_upper, tops, shape.size));
        }
    }
    return best;
}

double Engine::pending_upper(std::size_t id) const
{
    auto const& node = m_lattice.node(id);
    if (!node.query() || node.cur == m_sets[node.set.relation].end()) {
        return neg_inf;
    }
    for (auto const& c: node.children) {
        if (m_lattice.node(c.node).output.empty()) {
            return neg_inf;
        }
    }
    return bound(id, node.cur->tscore_u);
}

double Engine::node_upper(std::size_t node) const
{
    auto u = pending_upper(node);
    return u == neg_inf ? 0.0 : u;
}

double Engine::tuple_upper(std::size_t node, ScoredTuple const& t) const
{
    auto u = bound(node, t.tscore_u);
    return u == neg_inf ? 0.0 : u;
}

std::optional<std::size_t> Engine::best_node(double floor) const
{
    std::optional<std::size_t> best;
    double best_u = neg_inf;
    for (auto const& node: m_lattice.nodes()) {
        auto u = pending_upper(node.id);
        if (u == neg_inf || u < floor) {
            continue;
        }
        if (!best || u > best_u) {
            best = node.id;
            best_u = u;
        }
    }
    return best;
}

bool Engine::processed(LatticeNode const& node, TupleRef ref) const
{
    if (node.query()) {
        return node.processed.contains(ref);
    }
    return !m_sets[node.set.relation].contains(ref);
}

void Engine::advance(LatticeNode& node)
{
    auto end = m_sets[node.set.relation].end();
    while (node.cur != end && node.processed.contains(node.cur->ref)) {
        ++node.cur;
    }
}

void Engine::process(std::size_t id)
{
    auto& node = m_lattice.node(id);
    auto ref = node.cur->ref;
    node.processed.insert(ref);
    advance(node);
    Chain chain;
    insert_proc(id, ref, chain);
}

bool Engine::step()
{
    auto floor = m_topk.kth(m_query.k + m_delta_k);
    auto best = best_node(floor);
    if (!best) {
        m_theta = floor;
        m_evaluated = true;
        return false;
    }
    process(*best);
    ++m_rounds;
    return true;
}

Metrics Engine::evaluate()
{
    auto started = std::chrono::steady_clock::now();
    auto accesses = m_store.access_count();
    m_metrics = {};
    while (step()) {
    }
    m_metrics.store_accesses = m_store.access_count() - accesses;
    m_metrics.micros = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started).count());
    return m_metrics;
}

void Engine::pipeline()
{
    while (auto best = best_node(m_topk.kth(m_query.k + m_delta_k))) {
        process(*best);
        ++m_rounds;
    }
}

void Engine::drain()
{
    while (auto best = best_node(m_theta)) {
        process(*best);
    }
}

std::vector<Slot> Engine::neighbors(TupleRef ref, EdgeId fk, Direction dir)
{
    if (m_ghost && m_ghost->first == ref) {
        return m_cache.neighbors(m_store, ref, m_ghost->second, fk, dir);
    }
    return m_cache.neighbors(m_store, ref, m_store.tuple(ref), fk, dir);
}

bool Engine::joins_output(TupleRef ref, ChildSlot const& slot)
{
    auto const& child = m_lattice.node(slot.node);
    if (child.output.empty()) {
        return false;
    }
    for (auto s: neighbors(ref, slot.fk, slot.down())) {
        if (child.output.contains(s)) {
            return true;
        }
    }
    return false;
}

bool Engine::supported(std::size_t id, TupleRef ref)
{
    for (auto const& c: m_lattice.node(id).children) {
        if (!joins_output(ref, c)) {
            return false;
        }
    }
    return true;
}

void Engine::insert_proc(std::size_t id, TupleRef ref, Chain& chain)
{
    ++m_metrics.inserts_recursed;
    auto& node = m_lattice.node(id);
    if (!node.output.contains(ref.slot)) {
        if (!supported(id, ref)) {
            return;
        }
        m_lattice.buffer_insert(id, ref.slot);
    }
    chain.push_back({id, ref, npos});
    if (node.root_of) {
        eval_path(id, chain);
    }
    for (auto const& link: node.parents) {
        auto const& parent = m_lattice.node(link.node);
        auto const& slot = parent.children[link.slot];
        chain.back().slot = link.slot;
        for (auto s: neighbors(ref, slot.fk, slot.up())) {
            TupleRef candidate{parent.set.relation, s};
            if (processed(parent, candidate)) {
                insert_proc(link.node, candidate, chain);
            }
        }
    }
    chain.pop_back();
}

void Engine::delete_proc(std::size_t id, TupleRef ref)
{
    ++m_metrics.deletes_recursed;
    if (!m_lattice.buffer_remove(id, ref.slot)) {
        return;
    }
    m_metrics.results_purged += m_topk.purge_at(id, ref);
    for (auto const& link: m_lattice.node(id).parents) {
        auto const& parent = m_lattice.node(link.node);
        if (parent.output.empty()) {
            continue;
        }
        auto const& slot = parent.children[link.slot];
        for (auto s: neighbors(ref, slot.fk, slot.up())) {
            TupleRef candidate{parent.set.relation, s};
            if (parent.output.contains(s) && !joins_output(candidate, slot)) {
                delete_proc(link.node, candidate);
            }
        }
    }
}

std::vector<Engine::Forest> Engine::subtrees(std::size_t id, TupleRef ref, Chain const& chain, std::size_t depth,
                                             std::map<std::pair<std::size_t, Slot>, std::vector<Forest>>& memo)
{
    if (depth == npos) {
        if (auto it = memo.find({id, ref.slot}); it != memo.end()) {
            return it->second;
        }
    }
    auto const& node = m_lattice.node(id);
    std::size_t forced = depth != npos && depth > 0 ? chain[depth - 1].slot : npos;
    std::vector<Forest> result{Forest{JttNode{ref, npos, 0, false, id}}};
    for (std::size_t s = 0; s < node.children.size() && !result.empty(); ++s) {
        auto const& slot = node.children[s];
        auto const& child = m_lattice.node(slot.node);
        std::vector<Slot> candidates;
        for (auto x: neighbors(ref, slot.fk, slot.down())) {
            if (child.output.contains(x)) {
                candidates.push_back(x);
            }
        }
        std::vector<std::vector<Forest>> options;
        for (auto x: candidates) {
            options.push_back(subtrees(slot.node, {child.set.relation, x}, chain, npos, memo));
        }
        auto copies = slot.multiplicity;
        std::vector<Forest> partial = std::move(result);
        if (forced == s) {
            auto const& below = chain[depth - 1];
            auto forced_trees = subtrees(below.node, below.ref, chain, depth - 1, memo);
            std::vector<Forest> next;
            for (auto const& p: partial) {
                for (auto const& f: forced_trees) {
                    auto tree = p;
                    append(tree, f, 0, slot);
                    next.push_back(std::move(tree));
                }
            }
            partial = std::move(next);
            --copies;
        }
        // remaining copies as multisets over the candidates
        std::vector<Forest> done;
        auto choose = [&](auto&& self, Forest const& tree, std::size_t from, std::size_t left) -> void {
            if (left == 0) {
                done.push_back(tree);
                return;
            }
            for (std::size_t i = from; i < options.size(); ++i) {
                for (auto const& f: options[i]) {
                    auto next = tree;
                    append(next, f, 0, slot);
                    self(self, next, i, left - 1);
                }
            }
        };
        for (auto const& p: partial) {
            choose(choose, p, 0, copies);
        }
        result = std::move(done);
    }
    if (depth == npos) {
        memo.emplace(std::make_pair(id, ref.slot), result);
    }
    return result;
}

void Engine::eval_path(std::size_t root, Chain const& chain)
{
    std::map<std::pair<std::size_t, Slot>, std::vector<Forest>> memo;
    auto cn = *m_lattice.node(root).root_of;
    for (auto& tree: subtrees(root, chain.back().ref, chain, chain.size() - 1, memo)) {
        offer(cn, std::move(tree));
    }
}

void Engine::offer(std::size_t cn, Forest forest)
{
    Jtt jtt;
    jtt.cn = cn;
    jtt.nodes = std::move(forest);
    bool valid = validate_jtt(jtt, m_sets);
    jtt.identity = jtt_identity(jtt, m_store);
    if (m_observer) {
        m_observer(jtt, valid);
    }
    if (!valid || m_topk.contains(jtt.identity)) {
        return;
    }
    score(jtt);
    m_topk.add(std::move(jtt));
}

void Engine::score(Jtt& jtt) const
{
    std::vector<double> scores;
    std::vector<double> uppers;
    for (auto const& n: jtt.nodes) {
        if (m_lattice.node(n.lattice_node).query()) {
            scores.push_back(tscore(m_store, n.ref, m_query));
            uppers.push_back(m_sets[n.ref.relation].find(n.ref)->tscore_u);
        } else {
            scores.push_back(0.0);
            uppers.push_back(0.0);
        }
    }
    jtt.score = jtt_score(std::move(scores));
    jtt.score_u = jtt_score(std::move(uppers));
}

double Engine::rescored(Jtt const& jtt) const
{
    std::vector<double> scores;
    for (auto const& n: jtt.nodes) {
        scores.push_back(m_lattice.node(n.lattice_node).query() ? tscore(m_store, n.ref, m_query) : 0.0);
    }
    return jtt_score(std::move(scores));
}

void Engine::rescore(std::vector<ResultId> const& ids)
{
    for (auto id: ids) {
        auto const& jtt = m_topk.get(id);
        m_topk.set_scores(id, rescored(jtt), jtt.score_u);
    }
}

void Engine::rescore_all()
{
    for (auto id: m_topk.all()) {
        auto jtt = m_topk.get(id);
        score(jtt);
        m_topk.set_scores(id, jtt.score, jtt.score_u);
    }
}

void Engine::rebuild_set(RelationId rel, std::optional<TupleRef> excluded)
{
    std::vector<ScoredTuple> members;
    for (auto const& m: m_sets[rel]) {
        if (!excluded || m.ref != *excluded) {
            members.push_back(score_member(m_store, m.ref, m_query, m_envelope));
        }
    }
    m_sets[rel].assign(std::move(members));
    for (auto id: m_nodes_of[rel]) {
        auto& node = m_lattice.node(id);
        if (node.query()) {
            node.cur = m_sets[rel].begin();
            advance(node);
        }
    }
}

void Engine::admit(TupleSet::iterator it)
{
    auto rel = it->ref.relation;
    for (auto id: m_nodes_of[rel]) {
        auto& node = m_lattice.node(id);
        if (!node.query()) {
            continue;
        }
        bool open = std::all_of(node.children.begin(), node.children.end(),
                                [&](ChildSlot const& c) { return !m_lattice.node(c.node).output.empty(); });
        auto u = open ? bound(id, it->tscore_u) : neg_inf;
        if (u != neg_inf && u >= m_theta) {
            node.processed.insert(it->ref);
            if (node.cur == it) {
                advance(node);
            }
            Chain chain;
            insert_proc(id, it->ref, chain);
        } else if (node.cur == m_sets[rel].end() || ScoredOrder{}(*it, *node.cur)) {
            node.cur = it;
        }
    }
}

void Engine::splice(RelationId rel)
{
    (void)rel;
    auto const& schema = m_store.schema();
    std::vector<bool> has_query;
    for (auto const& s: m_sets) {
        has_query.push_back(!s.empty());
    }
    std::size_t next_id = 1;
    for (auto const& cn: m_cns) {
        next_id = std::max(next_id, cn.id + 1);
    }
    std::vector<std::size_t> added;
    for (auto& cn: generate_cns(schema, has_query, m_config.cn_max)) {
        if (m_lattice.contains(cn.key)) {
            continue;
        }
        cn.id = next_id++;
        cn.max_score = max_score(cn, m_sets);
        auto feature = cluster_feature(cn);
        if (m_clusters.empty()) {
            m_clusters.push_back({0, {}, feature});
        }
        std::size_t nearest = 0;
        for (std::size_t c = 1; c < m_clusters.size(); ++c) {
            if (std::abs(m_clusters[c].centroid - feature) < std::abs(m_clusters[nearest].centroid - feature)) {
                nearest = c;
            }
        }
        cn.cluster = m_clusters[nearest].id;
        m_clusters[nearest].members.push_back(m_cns.size());
        m_cn_index[cn.id] = m_cns.size();
        m_cns.push_back(cn);
        for (auto id: m_lattice.add(cn)) {
            prepare_node(id);
            auto& node = m_lattice.node(id);
            if (node.query()) {
                continue;
            }
            for (auto s: m_store.live_slots(node.set.relation)) {
                TupleRef ref{node.set.relation, s};
                if (!m_sets[ref.relation].contains(ref) && supported(id, ref)) {
                    m_lattice.buffer_insert(id, s);
                }
            }
        }
        added.push_back(cn.id);
    }
    prepare_shapes();
    for (auto cn_id: added) {
        auto root = m_lattice.root(cn_id);
        auto output = m_lattice.node(root).output;
        for (auto s: output) {
            Chain chain{{root, {m_lattice.node(root).set.relation, s}, npos}};
            eval_path(root, chain);
        }
    }
}

void Engine::rollback()
{
    for (auto const& n: m_lattice.nodes()) {
        if (!n.query()) {
            continue;
        }
        auto id = n.id;
        auto const& set = m_sets[n.set.relation];
        while (true) {
            auto& node = m_lattice.node(id);
            if (node.cur == set.begin()) {
                break;
            }
            auto prev = std::prev(node.cur);
            if (bound(id, prev->tscore_u) >= m_theta) {
                break;
            }
            auto ref = prev->ref;
            if (node.output.contains(ref.slot)) {
                delete_proc(id, ref);
            }
            node.processed.erase(ref);
            node.cur = prev;
        }
    }
}

void Engine::resume_or_rollback()
{
    auto k = m_query.k;
    if (m_topk.count_score_at_least(m_theta) < k) {
        m_delta_k = std::max(m_delta_k, std::min(m_delta_k + m_config.dk_step, m_config.dk_max));
        rescore_all();
        pipeline();
        m_theta = m_topk.kth(k + m_delta_k);
    } else if (m_config.rollback && m_topk.kth(k + m_delta_k) > m_theta) {
        m_theta = m_topk.kth(k + m_delta_k);
        rollback();
    }
}

Metrics Engine::maintain(UpdateOp const& op)
{
    if (!m_evaluated) {
        evaluate();
    }
    auto const& schema = m_store.schema();
    auto rel_id = schema.find(op.relation);
    if (!rel_id) {
        throw StoreError("unknown relation '" + op.relation + "'");
    }
    auto rel = *rel_id;
    auto started = std::chrono::steady_clock::now();
    auto accesses = m_store.access_count();
    m_metrics = {};
    m_cache.clear();

    bool insertion = op.kind == UpdateOp::Kind::insertion;
    TupleRef ref;
    bool matched = false;
    if (insertion) {
        ref = m_store.insert(rel, op.tuple);
        auto const& t = m_store.tuple(ref);
        auto tf = term_frequencies(schema.relation(rel), t, m_query.keywords);
        matched = std::any_of(tf.begin(), tf.end(), [](std::uint32_t x) { return x > 0; });
    } else {
        auto found = m_store.find(rel, op.key);
        if (!found) {
            throw StoreError("delete of unknown tuple " + op.relation + ":" + op.key);
        }
        ref = *found;
        matched = m_sets[rel].contains(ref);
        m_ghost.emplace(ref, m_store.erase(rel, op.key));
        for (auto id: m_nodes_of[rel]) {
            m_metrics.results_purged += m_topk.purge_at(id, ref);
        }
    }

    auto violation = m_envelope.check(rel, m_store.stats(rel));
    if (!violation.empty()) {
        m_envelope.enlarge(rel, violation, m_store.stats(rel));
        rebuild_set(rel, insertion ? std::nullopt : std::optional<TupleRef>(ref));
        rescore_all();
    } else {
        rescore(m_topk.upper_at_least(m_theta));
    }

    if (insertion) {
        if (!matched) {
            for (auto id: m_nodes_of[rel]) {
                if (!m_lattice.node(id).query()) {
                    Chain chain;
                    insert_proc(id, ref, chain);
                }
            }
        } else {
            bool was_empty = m_sets[rel].empty();
            auto it = m_sets[rel].insert(score_member(m_store, ref, m_query, m_envelope));
            if (was_empty) {
                splice(rel);
            }
            admit(it);
        }
    } else {
        if (matched) {
            auto& set = m_sets[rel];
            for (auto id: m_nodes_of[rel]) {
                auto& node = m_lattice.node(id);
                if (!node.query()) {
                    continue;
                }
                if (node.cur != set.end() && node.cur->ref == ref) {
                    ++node.cur;
                    advance(node);
                }
                node.processed.erase(ref);
            }
            if (set.contains(ref)) {
                set.erase(ref);
            }
        }
        for (auto id: m_nodes_of[rel]) {
            if (m_lattice.node(id).output.contains(ref.slot)) {
                delete_proc(id, ref);
            }
        }
    }

    drain();
    resume_or_rollback();
    m_ghost.reset();

    m_metrics.store_accesses = m_store.access_count() - accesses;
    m_metrics.micros = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started).count());
    return m_metrics;
}

std::vector<Jtt const*> Engine::current_topk() const
{
    return m_topk.first(m_query.k, m_theta);
}

EngineReport Engine::check() const
{
    EngineReport report;
    auto const& schema = m_store.schema();
    auto name = [&](LatticeNode const& n) { return "node " + std::to_string(n.id); };
    auto joins = [&](TupleRef ref, ChildSlot const& slot) {
        auto const& child = m_lattice.node(slot.node);
        for (auto s: m_store.join_neighbors(ref, slot.fk, slot.down())) {
            if (child.output.contains(s)) {
                return true;
            }
        }
        return false;
    };
    for (auto const& node: m_lattice.nodes()) {
        auto rel = node.set.relation;
        auto const& set = m_sets[rel];
        std::set<Slot> expected;
        std::vector<TupleRef> candidates;
        if (node.query()) {
            for (auto ref: node.processed) {
                if (!set.contains(ref)) {
                    report.semijoin_violations.push_back(name(node) + " processed non-member " + m_store.key_of(ref));
                    continue;
                }
                candidates.push_back(ref);
            }
            auto first = set.begin();
            while (first != set.end() && node.processed.contains(first->ref)) {
                ++first;
            }
            if (first != node.cur) {
                report.semijoin_violations.push_back(name(node) + " cursor is not at the first unprocessed tuple");
            }
        } else {
            for (auto s: m_store.live_slots(rel)) {
                if (!set.contains({rel, s})) {
                    candidates.push_back({rel, s});
                }
            }
        }
        for (auto ref: candidates) {
            if (std::all_of(node.children.begin(), node.children.end(),
                            [&](ChildSlot const& c) { return joins(ref, c); })) {
                expected.insert(ref.slot);
            }
        }
        if (expected != node.output) {
            std::ostringstream msg;
            msg << name(node) << " (" << schema.relation(rel).name << ") output has " << node.output.size()
                << " tuples, expected " << expected.size();
            report.semijoin_violations.push_back(msg.str());
        }
    }

    for (auto id: m_topk.all()) {
        auto const& jtt = m_topk.get(id);
        if (!validate_jtt(jtt, m_sets)) {
            report.result_violations.push_back("invalid result " + jtt.identity);
        }
        for (auto const& n: jtt.nodes) {
            if (!m_lattice.node(n.lattice_node).output.contains(n.ref.slot)) {
                report.result_violations.push_back("result outside the buffers " + jtt.identity);
                break;
            }
        }
        if (jtt.score_u >= m_theta && jtt.score != rescored(jtt)) {
            report.result_violations.push_back("stale score " + jtt.identity);
        }
        if (rescored(jtt) > jtt.score_u) {
            report.envelope_violations.push_back("score above its bound " + jtt.identity);
        }
    }

    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        if (!m_envelope.check(rel, m_store.stats(rel)).empty()) {
            report.envelope_violations.push_back("outstanding violation in " + schema.relation(rel).name);
        }
        for (auto const& m: m_sets[rel]) {
            if (tscore(m_store, m.ref, m_query) > m.tscore_u) {
                report.envelope_violations.push_back("tuple above its bound " + m.key);
            }
        }
    }

    report.max_node_upper = neg_inf;
    for (auto const& node: m_lattice.nodes()) {
        report.max_node_upper = std::max(report.max_node_upper, pending_upper(node.id));
    }
    report.upper_at_least_theta = m_topk.count_upper_at_least(m_theta);
    report.score_at_least_theta = m_topk.count_score_at_least(m_theta);
    for (auto id: m_topk.upper_at_least(m_theta)) {
        auto const& j = m_topk.get(id);
        report.ties_at_theta += j.score == m_theta || j.score_u == m_theta;
        report.score_above_theta += j.score > m_theta;
    }
    return report;
}

}  // namespace kws
