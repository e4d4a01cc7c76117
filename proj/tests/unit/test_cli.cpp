#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "kws/cli.hpp"

using namespace kws;

namespace {

SchemaGraph publication_schema()
{
    return load_schema_file(KWS_FIXTURES "/publication/schema.txt");
}

class TempDir {
  public:
    TempDir()
        : m_path(std::filesystem::temp_directory_path()
                 / ("kws_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++)))
    {
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() { std::filesystem::remove_all(m_path); }
    TempDir(TempDir const&) = delete;
    TempDir& operator=(TempDir const&) = delete;

    [[nodiscard]] std::filesystem::path const& path() const { return m_path; }
    [[nodiscard]] std::filesystem::path write(std::string const& name, std::string const& text) const
    {
        std::ofstream(m_path / name, std::ios::binary) << text;
        return m_path / name;
    }

  private:
    static int& counter()
    {
        static int n = 0;
        return n;
    }
    std::filesystem::path m_path;
};

std::string slurp(std::filesystem::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

RunConfig example_run()
{
    RunConfig c;
    c.schema = KWS_FIXTURES "/publication/schema.txt";
    c.data = KWS_FIXTURES "/publication";
    c.query = "james p2p";
    c.k = 3;
    c.delta_k = 0;
    c.cn_max = 5;
    c.kmean = 0.0;
    c.timing = false;
    return c;
}

std::vector<std::string> lines(std::string const& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        out.push_back(line);
    }
    return out;
}

}  // namespace

TEST_CASE("percent encoding")
{
    CHECK(percent_encode("a\tb%c\nd") == "a%09b%25c%0Ad");
    CHECK(percent_decode("a%09b%25c%0Ad") == "a\tb%c\nd");
    CHECK(percent_decode("50%2f50") == "50/50");
    CHECK_THROWS_AS(percent_decode("x%4"), std::invalid_argument);
    CHECK_THROWS_AS(percent_decode("x%zz"), std::invalid_argument);
}

TEST_CASE("update log lines")
{
    auto schema = publication_schema();
    auto ins = parse_op(schema, "I\tPapers\tp9\ttitle=P2P%09tabs", 1);
    CHECK(ins.kind == UpdateOp::Kind::insertion);
    CHECK(ins.key == "p9");
    CHECK(ins.tuple.values == std::vector<std::string>{"p9", "P2P\ttabs"});
    CHECK(format_op(schema, ins) == "I\tPapers\tp9\ttitle=P2P%09tabs");

    auto del = parse_op(schema, "D\tWrites\tw1\r", 2);
    CHECK(del.kind == UpdateOp::Kind::deletion);
    CHECK(format_op(schema, del) == "D\tWrites\tw1");

    auto w = parse_op(schema, "I\tWrites\tw9\tpid=p1", 3);
    CHECK(w.tuple.values == std::vector<std::string>{"w9", "", "p1"});

    auto line_of = [&](std::string const& text) {
        try {
            parse_op(schema, text, 7);
        } catch (LogError const& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("X\tPapers\tp1") == 7);
    CHECK(line_of("I\tNope\tp1") == 7);
    CHECK(line_of("I\tPapers\tp1\tcolour=red") == 7);
    CHECK(line_of("I\tPapers\tp1\ttitle") == 7);
    CHECK(line_of("D\tPapers\tp1\ttitle=x") == 7);
    CHECK(line_of("D\tPapers") == 7);

    std::istringstream log("# comment\n\nI\tAuthors\ta9\tname=x\nD\tAuthors\n");
    try {
        read_update_log(schema, log);
        FAIL("expected a log error");
    } catch (LogError const& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("workload generation")
{
    WorkloadSpec spec;
    spec.papers = 10000;
    spec.authors = 50;
    spec.writes = 100;
    spec.keywords = {{"p2p", 0.013, "Papers"}, {"james", 0.2, ""}};
    spec.ops = 300;
    spec.seed = 11;

    SUBCASE("hits the document frequencies")
    {
        auto store = generate_workload(spec).make_store();
        auto df = store.stats(0).document_frequency("p2p");
        CHECK(df >= 117);
        CHECK(df <= 143);
        CHECK(store.stats(1).document_frequency("p2p") == 0);
        CHECK(store.stats(1).document_frequency("james") == 10);
        CHECK(store.live_count(0) == 10000);
    }
    SUBCASE("deterministic files")
    {
        TempDir a;
        TempDir b;
        write_workload(generate_workload(spec), a.path());
        write_workload(generate_workload(spec), b.path());
        for (auto name: {"schema.txt", "Papers.tsv", "Authors.tsv", "Writes.tsv", "updates.log"}) {
            CHECK(slurp(a.path() / name) == slurp(b.path() / name));
        }
        Store store(load_schema_file(a.path() / "schema.txt"));
        load_tsv_directory(store, a.path());
        CHECK(store.live_count(0) == 10000);
        CHECK(read_update_log_file(store.schema(), a.path() / "updates.log").size() == 300);
        spec.seed = 12;
        TempDir c;
        write_workload(generate_workload(spec), c.path());
        CHECK(slurp(a.path() / "updates.log") != slurp(c.path() / "updates.log"));
    }
    SUBCASE("deletions only shrink the corpus")
    {
        spec.insert_share = 0.0;
        auto w = generate_workload(spec);
        auto store = w.make_store();
        std::size_t live = 10150;
        for (auto const& op: w.ops) {
            REQUIRE(op.kind == UpdateOp::Kind::deletion);
            store.erase(*store.schema().find(op.relation), op.key);
            std::size_t now = store.live_count(0) + store.live_count(1) + store.live_count(2);
            CHECK(now == live - 1);
            live = now;
        }
    }
    SUBCASE("infeasible targets")
    {
        spec.keywords = {{"p2p", 1.0, ""}};
        CHECK_THROWS_AS(generate_workload(spec), WorkloadError);
        spec.keywords = {{"p2p", 0.0, ""}};
        CHECK_THROWS_AS(generate_workload(spec), WorkloadError);
        spec.keywords = {{"two words", 0.1, ""}};
        CHECK_THROWS_AS(generate_workload(spec), WorkloadError);
        spec.keywords = {{"p2p", 0.1, "Writes"}};
        CHECK_THROWS_AS(generate_workload(spec), WorkloadError);
    }
}

TEST_CASE("continual run over the sample database")
{
    TempDir dir;
    auto c = example_run();
    c.snapshots = dir.path() / "snap.tsv";
    c.metrics = dir.path() / "metrics.tsv";
    std::ostringstream out;
    std::ostringstream err;

    SUBCASE("empty log gives one snapshot")
    {
        c.oracle_check = true;
        CHECK(run_continual(c, out, err) == run_ok);
        CHECK(lines(slurp(c.snapshots))
              == std::vector<std::string>{
                  "0\t1\t7.036547\t1\tPapers:p2",
                  "0\t2\t4.001664\t2\tAuthors:a1",
                  "0\t3\t3.679404\t3\tAuthors:a1(<aidWrites:w1(pid>Papers:p2))",
              });
        auto m = lines(slurp(c.metrics));
        REQUIRE(m.size() == 2);
        CHECK(m[0] == "op_seq\tkind\tstore_accesses\tinserts_recursed\tdeletes_recursed\ttopk_ge_theta\ttheta\tdelta_k\tmicros");
        CHECK(m[1].rfind("0\tE\t", 0) == 0);
        CHECK(m[1].substr(m[1].size() - 2) == "\t0");
    }
    SUBCASE("deleting a top result emits a change at that op")
    {
        c.log = dir.write("log", "I\tWrites\tw50\taid=a9\tpid=p9\nD\tPapers\tp2\n");
        c.oracle_check = true;
        CHECK(run_continual(c, out, err) == run_ok);
        auto snap = lines(slurp(c.snapshots));
        REQUIRE(snap.size() == 6);
        CHECK(snap[3].rfind("2\t1\t", 0) == 0);
        CHECK(snap[3].find("Papers:p2") == std::string::npos);
        CHECK(lines(slurp(c.metrics)).size() == 4);
    }
    SUBCASE("cadence snapshots")
    {
        c.log = dir.write("log", "I\tWrites\tw50\taid=a9\tpid=p9\nI\tWrites\tw51\taid=a9\tpid=p9\n");
        c.cadence = 2;
        CHECK(run_continual(c, out, err) == run_ok);
        auto snap = lines(slurp(c.snapshots));
        REQUIRE(snap.size() == 6);
        CHECK(snap[3].rfind("2\t1\t", 0) == 0);
    }
    SUBCASE("byte-identical across runs")
    {
        c.log = dir.write("log", "D\tAuthors\ta3\nI\tPapers\tp0\ttitle=James on P2P\nD\tPapers\tp2\n");
        REQUIRE(run_continual(c, out, err) == run_ok);
        auto first = slurp(c.snapshots) + slurp(c.metrics);
        REQUIRE(run_continual(c, out, err) == run_ok);
        CHECK(first == slurp(c.snapshots) + slurp(c.metrics));
    }
    SUBCASE("malformed log names the line")
    {
        c.log = dir.write("log", "D\tPapers\tp1\nQ\tPapers\tp2\n");
        try {
            run_continual(c, out, err);
            FAIL("expected a log error");
        } catch (LogError const& e) {
            CHECK(e.line() == 2);
        }
    }
    SUBCASE("unknown relation and empty query")
    {
        c.log = dir.write("log", "D\tNope\tp1\n");
        CHECK_THROWS_AS(run_continual(c, out, err), LogError);
        c.log.clear();
        c.query = "?!";
        CHECK_THROWS(run_continual(c, out, err));
    }
    SUBCASE("no candidate networks is reported, ops still consumed")
    {
        c.query = "zzzz";
        c.log = dir.write("log", "D\tPapers\tp1\nI\tPapers\tp0\ttitle=zzzz\n");
        CHECK(run_continual(c, out, err) == run_ok);
        CHECK(err.str().find("no candidate networks") != std::string::npos);
        auto snap = lines(slurp(c.snapshots));
        REQUIRE(snap.size() == 2);
        CHECK(snap[0] == "0\t0\t-\t-\t-");
        CHECK(snap[1].rfind("2\t1\t", 0) == 0);
    }
}

TEST_CASE("ablation modes agree")
{
    WorkloadSpec spec;
    spec.papers = 400;
    spec.authors = 100;
    spec.writes = 800;
    spec.keywords = {{"james", 0.05, "Authors"}, {"p2p", 0.05, "Papers"}};
    spec.ops = 300;
    auto w = generate_workload(spec);
    AblationPlan plan;
    plan.workload = &w;
    plan.query = KeywordQuery::parse("james p2p", 10, 1);
    plan.modes = default_ablation_modes();
    plan.modes.push_back({"norollback", true, 0.6, false});
    auto report = bench_ablation(plan);
    CHECK(report.consistent);
    CHECK(report.runs.size() == 5);
    CHECK(report.reevaluation_samples == plan.reevaluation_samples);
    CHECK(report.run("nocache+unclustered").store_accesses >= report.run("cache+unclustered").store_accesses);
    CHECK(report.table().find("identical") != std::string::npos);
    CHECK_THROWS_AS(static_cast<void>(report.run("missing")), std::out_of_range);
}
