#include <doctest.h>

#include <cmath>
#include <random>

#include "kws/store.hpp"

using namespace kws;

namespace {

Store publication_store()
{
    Store store(load_schema_file(KWS_FIXTURES "/publication/schema.txt"));
    load_tsv_directory(store, KWS_FIXTURES "/publication");
    return store;
}

std::vector<std::string> keys(Store const& store, RelationId rel, std::vector<Slot> const& slots)
{
    std::vector<std::string> out;
    for (auto s: slots) {
        out.push_back(store.key_of({rel, s}));
    }
    return out;
}

}  // namespace

TEST_CASE("schema descriptor")
{
    SUBCASE("publication")
    {
        auto g = load_schema_file(KWS_FIXTURES "/publication/schema.txt");
        REQUIRE(g.size() == 3);
        REQUIRE(g.edges().size() == 2);
        auto w = *g.find("Writes");
        CHECK(g.edge(0).from == w);
        CHECK(g.edge(0).to == *g.find("Authors"));
        CHECK(g.edge(1).to == *g.find("Papers"));
    }
    SUBCASE("empty") { CHECK(load_schema("").size() == 0); }
    SUBCASE("bibliographic schema has parallel citation edges")
    {
        auto g = load_schema_file(KWS_FIXTURES "/dblp/schema.txt");
        CHECK(g.size() == 7);
        auto cite = *g.find("PaperCite");
        auto papers = *g.find("Papers");
        int parallel = 0;
        for (auto const& e: g.edges()) {
            parallel += (e.from == cite && e.to == papers) ? 1 : 0;
        }
        CHECK(parallel == 2);
    }
    SUBCASE("every violation is reported")
    {
        std::string bad =
            "relation A key=id text=t\n"
            "relation A key=id\n"
            "relation B key=id plain=x\n"
            "fk B.y -> A\n"
            "fk B.x -> C\n";
        try {
            load_schema(bad);
            FAIL("expected SchemaError");
        } catch (SchemaError const& e) {
            CHECK(e.violations().size() == 3);
        }
    }
}

TEST_CASE("tokenize")
{
    CHECK(tokenize("P2P or Not P2P?") == std::vector<std::string>{"p2p", "or", "not", "p2p"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("James S. W. Walkerdines") == std::vector<std::string>{"james", "s", "w", "walkerdines"});
    CHECK(char_count("caf\xc3\xa9") == 4);
}

TEST_CASE("publication fixture statistics")
{
    auto store = publication_store();
    auto papers = *store.schema().find("Papers");
    auto authors = *store.schema().find("Authors");
    CHECK(store.stats(papers).n == 150);
    CHECK(store.stats(papers).avdl() == doctest::Approx(57.8).epsilon(1e-9));
    CHECK(store.stats(authors).n == 170);
    CHECK(store.stats(authors).avdl() == doctest::Approx(14.6).epsilon(1e-9));
    CHECK(store.stats(papers).document_frequency("p2p") == 3);
    CHECK(store.stats(authors).document_frequency("james") == 3);

    auto p2 = *store.find(papers, "p2");
    CHECK(store.tuple(p2).dl == 28);
    CHECK(store.tf(p2, "p2p") == 3);

    std::vector<std::string> q{"james", "p2p"};
    std::vector<std::string> matched;
    for (auto const& m: store.matched_tuples(papers, q)) {
        matched.push_back(store.key_of({papers, m.slot}));
    }
    CHECK(matched == std::vector<std::string>{"p1", "p2", "p5"});
    matched.clear();
    for (auto const& m: store.matched_tuples(authors, q)) {
        matched.push_back(store.key_of({authors, m.slot}));
    }
    CHECK(matched == std::vector<std::string>{"a1", "a3", "a5"});
    CHECK(store.matched_tuples(papers, {"absent"}).empty());
}

TEST_CASE("join neighbors")
{
    auto store = publication_store();
    auto const& g = store.schema();
    auto papers = *g.find("Papers");
    auto writes = *g.find("Writes");
    EdgeId wp = 1;
    auto w1 = *store.find(writes, "w1");
    CHECK(keys(store, papers, store.join_neighbors(w1, wp, Direction::toward_referenced))
          == std::vector<std::string>{"p2"});
    auto p2 = *store.find(papers, "p2");
    CHECK(keys(store, writes, store.join_neighbors(p2, wp, Direction::toward_referencing))
          == std::vector<std::string>{"w1", "w7"});
    auto p3 = *store.find(papers, "p3");
    CHECK(keys(store, writes, store.join_neighbors(p3, wp, Direction::toward_referencing))
          == std::vector<std::string>{"w3"});

    auto before = store.access_count();
    (void)store.join_neighbors(p3, wp, Direction::toward_referencing);
    CHECK(store.access_count() == before + 1);

    // dangling reference resolves to nothing
    auto const& rs = g.relation(writes);
    store.insert(writes, build_tuple(rs, {{"wid", "w99"}, {"aid", "a1"}, {"pid", "p999"}}));
    CHECK(store.join_neighbors(*store.find(writes, "w99"), wp, Direction::toward_referenced).empty());
}

TEST_CASE("insert and delete")
{
    auto store = publication_store();
    auto papers = *store.schema().find("Papers");
    auto const& rs = store.schema().relation(papers);

    SUBCASE("duplicate key")
    {
        CHECK_THROWS_AS(store.insert(papers, build_tuple(rs, {{"pid", "p1"}})), StoreError);
    }
    SUBCASE("unknown relation") { CHECK_THROWS_AS(store.insert("Nope", Tuple{{"x"}, 0}), StoreError); }
    SUBCASE("unknown key") { CHECK_THROWS_AS(store.erase(papers, "p1000"), StoreError); }
    SUBCASE("empty text")
    {
        auto df = store.stats(papers).df;
        store.insert(papers, build_tuple(rs, {{"pid", "p1000"}}));
        CHECK(store.stats(papers).df == df);
        CHECK(store.stats(papers).avdl() == doctest::Approx(8670.0 / 151));
    }
    SUBCASE("delete then reinsert")
    {
        auto stats = store.stats(papers);
        auto p2 = store.erase(papers, "p2");
        CHECK(store.stats(papers).document_frequency("p2p") == 2);
        CHECK(store.stats(papers).n == 149);
        store.insert(papers, p2);
        CHECK(store.stats(papers).n == stats.n);
        CHECK(store.stats(papers).total_dl == stats.total_dl);
        CHECK(store.stats(papers).df == stats.df);
    }
    SUBCASE("delete the only tuple")
    {
        Store s(load_schema("relation R key=id text=t\n"));
        s.insert("R", build_tuple(s.schema().relation(0), {{"id", "x"}, {"t", "hello"}}));
        s.erase(0, "x");
        CHECK(s.stats(0).n == 0);
        CHECK(s.stats(0).avdl() == 0.0);
    }
}

TEST_CASE("statistics agree with a recount after random operations")
{
    Store store(load_schema("relation R key=id text=a,b plain=f\nrelation S key=id\nfk R.f -> S\n"));
    auto const& rs = store.schema().relation(0);
    std::vector<std::string> vocab{"alpha", "beta", "gamma", "delta", "eps"};
    std::mt19937 rng(11);
    std::vector<std::string> live;
    int next = 0;
    for (int op = 0; op < 10000; ++op) {
        if (live.empty() || rng() % 3 != 0) {
            auto text = [&] {
                std::string t;
                for (int i = rng() % 4; i > 0; --i) {
                    t += vocab[rng() % vocab.size()] + " ";
                }
                return t;
            };
            auto key = "r" + std::to_string(next++);
            store.insert(0, build_tuple(rs, {{"id", key}, {"a", text()}, {"b", text()}, {"f", std::to_string(rng() % 5)}}));
            live.push_back(key);
        } else {
            auto i = rng() % live.size();
            store.erase(0, live[i]);
            live.erase(live.begin() + static_cast<long>(i));
        }
    }
    auto slots = store.live_slots(0);
    REQUIRE(slots.size() == live.size());
    std::uint64_t dl = 0;
    std::map<std::string, std::uint32_t> df;
    std::map<std::string, std::map<Slot, std::uint32_t>> postings;
    std::map<std::string, std::set<Slot>> by_fk;
    for (auto s: slots) {
        auto const& t = store.tuple({0, s});
        dl += char_count(t.values[1]) + char_count(t.values[2]);
        std::map<std::string, std::uint32_t> tf;
        for (auto const& w: tokenize(t.values[1] + " " + t.values[2])) {
            ++tf[w];
        }
        for (auto const& [w, c]: tf) {
            ++df[w];
            postings[w][s] = c;
        }
        by_fk[t.values[3]].insert(s);
    }
    CHECK(store.stats(0).n == live.size());
    CHECK(store.stats(0).total_dl == dl);
    for (auto const& w: vocab) {
        CHECK(store.stats(0).document_frequency(w) == df[w]);
        auto const* list = store.postings(0, w);
        if (df[w] == 0) {
            CHECK(list == nullptr);
        } else {
            CHECK(*list == postings[w]);
        }
    }
    for (int f = 0; f < 5; ++f) {
        auto key = std::to_string(f);
        store.insert(1, Tuple{{key}, 0});
        auto got = store.join_neighbors(*store.find(1, key), 0, Direction::toward_referencing);
        CHECK(std::set<Slot>(got.begin(), got.end()) == by_fk[key]);
    }
}
