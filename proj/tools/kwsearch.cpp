#include <iostream>

#include <CLI11.hpp>

#include "kws/cli.hpp"

namespace {

std::vector<kws::KeywordTarget> parse_targets(std::vector<std::string> const& specs)
{
    std::vector<kws::KeywordTarget> out;
    for (auto const& s: specs) {
        auto first = s.find(':');
        if (first == std::string::npos) {
            throw CLI::ValidationError("--keyword", "expected word:idf[:relation], got '" + s + "'");
        }
        auto second = s.find(':', first + 1);
        kws::KeywordTarget t{s.substr(0, first), std::stod(s.substr(first + 1, second - first - 1)), ""};
        if (second != std::string::npos) {
            t.relation = s.substr(second + 1);
        }
        out.push_back(std::move(t));
    }
    return out;
}

void add_engine_options(CLI::App& app, kws::RunConfig& c)
{
    app.add_option("-k,--k", c.k, "number of results")->capture_default_str();
    app.add_option("--delta-k", c.delta_k, "initial result margin")->capture_default_str();
    app.add_option("--cn-max", c.cn_max, "largest candidate network size")->capture_default_str();
    app.add_option("--kmean", c.kmean, "cluster count ratio, 0 for one cluster")->capture_default_str();
    app.add_option("--delta-df", c.envelope.delta_df, "initial df slack")->capture_default_str();
    app.add_option("--delta-avdl", c.envelope.delta_avdl, "initial avdl slack")->capture_default_str();
    app.add_option("--df-step", c.envelope.df_step, "df slack growth")->capture_default_str();
    app.add_option("--avdl-step", c.envelope.avdl_step, "avdl slack growth")->capture_default_str();
    app.add_option("--df-max", c.envelope.df_max, "df slack cap")->capture_default_str();
    app.add_option("--avdl-max", c.envelope.avdl_max, "avdl slack cap")->capture_default_str();
    app.add_option("--dk-step", c.dk_step, "result margin growth")->capture_default_str();
    app.add_option("--dk-max", c.dk_max, "result margin cap")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Continual top-k keyword search over relational data"};
    app.require_subcommand(1);

    kws::RunConfig run;
    bool no_cache = false;
    bool no_rollback = false;
    bool no_timing = false;
    auto* run_cmd = app.add_subcommand("run", "evaluate a query and replay an update log");
    run_cmd->add_option("--schema", run.schema, "schema descriptor")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--data", run.data, "directory of <relation>.tsv files")->check(CLI::ExistingDirectory);
    run_cmd->add_option("-q,--query", run.query, "keywords")->required();
    run_cmd->add_option("--log", run.log, "update log")->check(CLI::ExistingFile);
    run_cmd->add_option("--cadence", run.cadence, "also snapshot every N ops")->capture_default_str();
    run_cmd->add_option("--snapshots", run.snapshots, "snapshot output (default stdout)");
    run_cmd->add_option("--metrics", run.metrics, "per-op metrics TSV");
    run_cmd->add_flag("--oracle-check", run.oracle_check, "compare every snapshot with brute force");
    run_cmd->add_flag("--no-cache", no_cache, "disable the join cache");
    run_cmd->add_flag("--no-rollback", no_rollback, "never roll the evaluation back");
    run_cmd->add_flag("--no-timing", no_timing, "write 0 for wall times");
    add_engine_options(*run_cmd, run);

    kws::WorkloadSpec spec;
    std::vector<std::string> keywords;
    std::string out_dir;
    auto* gen_cmd = app.add_subcommand("generate", "write a synthetic publication workload");
    gen_cmd->add_option("--out", out_dir, "output directory")->required();
    gen_cmd->add_option("--papers", spec.papers)->capture_default_str();
    gen_cmd->add_option("--authors", spec.authors)->capture_default_str();
    gen_cmd->add_option("--writes", spec.writes)->capture_default_str();
    gen_cmd->add_option("--keyword", keywords, "word:idf[:relation], repeatable")->required();
    gen_cmd->add_option("--insert-share", spec.insert_share, "fraction of inserts")->capture_default_str();
    gen_cmd->add_option("--ops", spec.ops)->capture_default_str();
    gen_cmd->add_option("--seed", spec.seed)->capture_default_str();

    kws::RunConfig bench;
    bench.k = 10;
    kws::WorkloadSpec bench_spec;
    std::vector<std::string> bench_keywords;
    bool bench_rollback = false;
    auto* bench_cmd = app.add_subcommand("bench", "ablation of cache, clustering and rollback");
    bench_cmd->add_option("--papers", bench_spec.papers)->capture_default_str();
    bench_cmd->add_option("--authors", bench_spec.authors)->capture_default_str();
    bench_cmd->add_option("--writes", bench_spec.writes)->capture_default_str();
    bench_cmd->add_option("--keyword", bench_keywords, "word:idf[:relation], repeatable")->required();
    bench_cmd->add_option("--insert-share", bench_spec.insert_share)->capture_default_str();
    bench_cmd->add_option("--ops", bench_spec.ops)->capture_default_str();
    bench_cmd->add_option("--seed", bench_spec.seed)->capture_default_str();
    bench_cmd->add_flag("--rollback-modes", bench_rollback, "also run with rollback disabled");
    add_engine_options(*bench_cmd, bench);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        return app.exit(e);
    }

    try {
        if (*run_cmd) {
            run.join_cache = !no_cache;
            run.rollback = !no_rollback;
            run.timing = !no_timing;
            return kws::run_continual(run, std::cout, std::cerr);
        }
        if (*gen_cmd) {
            spec.keywords = parse_targets(keywords);
            kws::write_workload(kws::generate_workload(spec), out_dir);
            return 0;
        }
        bench_spec.keywords = parse_targets(bench_keywords);
        auto workload = kws::generate_workload(bench_spec);
        std::string words;
        for (auto const& k: bench_spec.keywords) {
            words += k.word + " ";
        }
        kws::AblationPlan plan;
        plan.workload = &workload;
        plan.query = kws::KeywordQuery::parse(words, bench.k, bench.delta_k);
        plan.base = bench.engine();
        plan.modes = kws::default_ablation_modes();
        if (bench_rollback) {
            plan.modes.push_back({"cache+clustered+norollback", true, 0.6, false});
        }
        auto report = kws::bench_ablation(plan);
        std::cout << report.table();
        return report.consistent ? 0 : 1;
    } catch (kws::LogError const& e) {
        std::cerr << "update log: " << e.what() << '\n';
    } catch (kws::SchemaError const& e) {
        std::cerr << e.what() << '\n';
        for (auto const& v: e.violations()) {
            std::cerr << "  " << v << '\n';
        }
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
    }
    return 2;
}
