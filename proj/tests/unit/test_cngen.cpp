#include <doctest.h>

#include <algorithm>
#include <random>

#include "kws/cngen.hpp"

using namespace kws;

namespace {

SchemaGraph publication_schema()
{
    return load_schema_file(KWS_FIXTURES "/publication/schema.txt");
}

// W is relation 2; fk 0 is W.aid -> A (1), fk 1 is W.pid -> P (0)
CandidateNetwork star(std::vector<TupleSetId> nodes, std::vector<CnEdge> edges)
{
    CandidateNetwork cn;
    cn.nodes = std::move(nodes);
    cn.edges = std::move(edges);
    cn.key = canonical_key(cn);
    return cn;
}

std::vector<CandidateNetwork> example_cns()
{
    TupleSetId pq{0, true}, pf{0, false}, aq{1, true}, af{1, false}, w{2, false};
    return {
        star({pq}, {}),
        star({aq}, {}),
        star({w, pq, aq}, {{0, 1, 1}, {0, 2, 0}}),
        // P^Q <- W -> A^Q <- W -> P^Q
        star({aq, w, pq, w, pq}, {{1, 0, 0}, {1, 2, 1}, {3, 0, 0}, {3, 4, 1}}),
        star({af, w, pq, w, pq}, {{1, 0, 0}, {1, 2, 1}, {3, 0, 0}, {3, 4, 1}}),
        star({pq, w, aq, w, aq}, {{1, 0, 1}, {1, 2, 0}, {3, 0, 1}, {3, 4, 0}}),
        star({pf, w, aq, w, aq}, {{1, 0, 1}, {1, 2, 0}, {3, 0, 1}, {3, 4, 0}}),
    };
}

}  // namespace

TEST_CASE("tuple sets of the sample database")
{
    Store store(publication_schema());
    load_tsv_directory(store, KWS_FIXTURES "/publication");
    auto q = KeywordQuery::parse("james p2p", 3);
    ScoreEnvelope env(store, q, EnvelopePolicy{0.20, 0.10});
    auto sets = compute_tuple_sets(store, q, env);
    REQUIRE(sets.size() == 3);
    CHECK(sets[2].empty());
    std::vector<std::string> keys;
    for (auto const& m: sets[1]) {
        keys.push_back(m.key);
    }
    CHECK(keys == std::vector<std::string>{"a1", "a3", "a5"});
    keys.clear();
    for (auto const& m: sets[0]) {
        keys.push_back(m.key);
    }
    CHECK(keys == std::vector<std::string>{"p2", "p5", "p1"});
    CHECK(std::abs(sets[1].top() - 4.23) <= 0.01);

    auto none = compute_tuple_sets(store, KeywordQuery::parse("zzz", 1), env);
    CHECK(std::all_of(none.begin(), none.end(), [](auto const& s) { return s.empty(); }));
}

TEST_CASE("canonical keys")
{
    TupleSetId pq{0, true}, aq{1, true}, af{1, false}, w{2, false};
    auto a = star({w, pq, aq}, {{0, 1, 1}, {0, 2, 0}});
    auto b = star({pq, w, aq}, {{1, 0, 1}, {1, 2, 0}});
    CHECK(a.key == b.key);
    auto cn4 = star({aq, w, pq, w, pq}, {{1, 0, 0}, {1, 2, 1}, {3, 0, 0}, {3, 4, 1}});
    auto cn5 = star({af, w, pq, w, pq}, {{1, 0, 0}, {1, 2, 1}, {3, 0, 0}, {3, 4, 1}});
    CHECK(cn4.key != cn5.key);

    // relabelled random trees
    std::mt19937 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng() % 7;
        CandidateNetwork cn;
        for (std::size_t i = 0; i < n; ++i) {
            cn.nodes.push_back({static_cast<RelationId>(rng() % 3), rng() % 2 == 0});
            if (i > 0) {
                auto p = rng() % i;
                if (rng() % 2) {
                    cn.edges.push_back({i, p, static_cast<EdgeId>(rng() % 2)});
                } else {
                    cn.edges.push_back({p, i, static_cast<EdgeId>(rng() % 2)});
                }
            }
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        CandidateNetwork other;
        other.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            other.nodes[perm[i]] = cn.nodes[i];
        }
        for (auto const& e: cn.edges) {
            other.edges.push_back({perm[e.referencing], perm[e.referenced], e.fk});
        }
        std::shuffle(other.edges.begin(), other.edges.end(), rng);
        CHECK(canonical_key(cn) == canonical_key(other));
    }
}

TEST_CASE("candidate networks of the sample query")
{
    auto schema = publication_schema();
    auto cns = generate_cns(schema, {true, true, false}, 5);
    std::set<std::string> got;
    for (auto const& cn: cns) {
        got.insert(cn.key);
        CHECK(valid_cn(cn, schema, 5));
    }
    std::set<std::string> want;
    for (auto const& cn: example_cns()) {
        want.insert(cn.key);
    }
    CHECK(cns.size() == 7);
    CHECK(got == want);
    CHECK(cns[0].nodes == std::vector<TupleSetId>{{0, true}});
    CHECK(cns[1].nodes == std::vector<TupleSetId>{{1, true}});

    SUBCASE("single relation")
    {
        auto one = generate_cns(load_schema("relation R key=id text=t\n"), {true}, 1);
        REQUIRE(one.size() == 1);
        CHECK(one[0].nodes == std::vector<TupleSetId>{{0, true}});
    }
    SUBCASE("monotone in the size bound")
    {
        std::set<std::string> previous;
        for (std::size_t m = 1; m <= 6; ++m) {
            std::set<std::string> current;
            for (auto const& cn: generate_cns(schema, {true, true, false}, m)) {
                current.insert(cn.key);
            }
            CHECK(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
            previous = std::move(current);
        }
    }
}

TEST_CASE("clustering")
{
    SUBCASE("reference feature values split in two")
    {
        std::vector<double> features{5.15, 2.93, 5.39, 6.84, 5.32, 5.70, 3.03};
        REQUIRE(cluster_count(7, 2.0 / 7.0) == 2);
        std::vector<std::size_t> assignment;
        auto clusters = kmeans_1d(features, 2, assignment);
        REQUIRE(clusters.size() == 2);
        CHECK(clusters[0].members == std::vector<std::size_t>{1, 6});
        CHECK(clusters[1].members == std::vector<std::size_t>{0, 2, 3, 4, 5});
    }
    SUBCASE("ratio extremes")
    {
        auto cns = example_cns();
        for (std::size_t i = 0; i < cns.size(); ++i) {
            cns[i].max_score = 1.0 + static_cast<double>(i);
        }
        CHECK(cluster_cns(cns, 0.0).size() == 1);
        auto singles = cluster_cns(cns, 1.0);
        CHECK(singles.size() == cns.size());
        for (auto const& c: singles) {
            CHECK(c.members.size() == 1);
        }
    }
    SUBCASE("deterministic and a partition")
    {
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> u(0.0, 10.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> v(2 + rng() % 30);
            for (auto& x: v) {
                x = rng() % 4 == 0 ? 3.0 : u(rng);
            }
            auto k = 1 + rng() % v.size();
            std::vector<std::size_t> a1, a2;
            auto c1 = kmeans_1d(v, k, a1);
            auto c2 = kmeans_1d(v, k, a2);
            CHECK(a1 == a2);
            std::size_t total = 0;
            for (std::size_t c = 0; c < c1.size(); ++c) {
                total += c1[c].members.size();
                if (c > 0) {
                    CHECK(c1[c - 1].centroid <= c1[c].centroid);
                }
            }
            CHECK(total == v.size());
        }
    }
}
