#include "kws/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "kws/oracle.hpp"

namespace kws {

namespace {

std::string fixed(double value)
{
    if (std::isinf(value)) {
        return value < 0 ? "-inf" : "inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

std::string snapshot_line(std::size_t op, std::size_t rank, Jtt const& j)
{
    return std::to_string(op) + "\t" + std::to_string(rank) + "\t" + fixed(j.score) + "\t" + std::to_string(j.cn)
           + "\t" + j.identity + "\n";
}

using Ranking = std::vector<std::pair<std::string, double>>;

Ranking ranking(std::vector<Jtt const*> const& topk)
{
    Ranking out;
    for (auto j: topk) {
        out.emplace_back(j->identity, j->score);
    }
    return out;
}

std::ofstream open_output(std::filesystem::path const& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

}  // namespace

EngineConfig RunConfig::engine() const
{
    EngineConfig c;
    c.cn_max = cn_max;
    c.kmean = kmean;
    c.envelope = envelope;
    c.dk_step = dk_step;
    c.dk_max = dk_max;
    c.join_cache = join_cache;
    c.rollback = rollback;
    return c;
}

std::string format_snapshot(std::size_t op, std::vector<Jtt const*> const& topk)
{
    if (topk.empty()) {
        return std::to_string(op) + "\t0\t-\t-\t-\n";
    }
    std::string out;
    for (std::size_t r = 0; r < topk.size(); ++r) {
        out += snapshot_line(op, r + 1, *topk[r]);
    }
    return out;
}

std::string format_snapshot(std::size_t op, std::vector<Jtt> const& topk)
{
    std::vector<Jtt const*> ptrs;
    for (auto const& j: topk) {
        ptrs.push_back(&j);
    }
    return format_snapshot(op, ptrs);
}

std::string metrics_header()
{
    return "op_seq\tkind\tstore_accesses\tinserts_recursed\tdeletes_recursed\ttopk_ge_theta\ttheta\tdelta_k\tmicros\n";
}

std::string format_metrics(std::size_t op, char const* kind, Metrics const& m, Engine const& engine, bool timing)
{
    std::ostringstream out;
    out << op << '\t' << kind << '\t' << m.store_accesses << '\t' << m.inserts_recursed << '\t'
        << m.deletes_recursed << '\t' << engine.results().count_score_at_least(engine.theta()) << '\t'
        << fixed(engine.theta()) << '\t' << engine.delta_k() << '\t' << (timing ? m.micros : 0) << '\n';
    return out.str();
}

int run_continual(RunConfig const& config, std::ostream& out, std::ostream& err)
{
    Store store(load_schema_file(config.schema), StoreOptions{});
    if (!config.data.empty()) {
        load_tsv_directory(store, config.data);
    }
    std::vector<UpdateOp> ops;
    if (!config.log.empty()) {
        ops = read_update_log_file(store.schema(), config.log);
    }
    auto query = KeywordQuery::parse(config.query, config.k, config.delta_k);
    if (query.size() == 0) {
        throw std::invalid_argument("query '" + config.query + "' has no keywords");
    }

    std::ofstream snapshot_file;
    std::ostream* snapshots = &out;
    if (!config.snapshots.empty()) {
        snapshot_file = open_output(config.snapshots);
        snapshots = &snapshot_file;
    }
    std::ofstream metrics;
    if (!config.metrics.empty()) {
        metrics = open_output(config.metrics);
        metrics << metrics_header();
    }

    Engine engine(store, query, config.engine());
    if (engine.cns().empty()) {
        err << "no candidate networks: no relation matches the query yet\n";
    }
    auto evaluation = engine.evaluate();
    if (metrics.is_open()) {
        metrics << format_metrics(0, "E", evaluation, engine, config.timing);
    }

    Ranking previous;
    auto emit = [&](std::size_t op, bool forced) {
        auto topk = engine.current_topk();
        auto now = ranking(topk);
        bool cadence = config.cadence > 0 && op % config.cadence == 0;
        if (!forced && !cadence && now == previous) {
            return true;
        }
        previous = std::move(now);
        *snapshots << format_snapshot(op, topk);
        if (!config.oracle_check) {
            return true;
        }
        auto want = brute_force_topk(store, query, query.k, config.cn_max);
        bool same = want.size() == topk.size();
        for (std::size_t r = 0; same && r < want.size(); ++r) {
            same = want[r].identity == topk[r]->identity && want[r].score == topk[r]->score;
        }
        if (!same) {
            err << "oracle mismatch after op " << op << "\nengine:\n"
                << format_snapshot(op, topk) << "oracle:\n"
                << format_snapshot(op, want);
        }
        return same;
    };

    if (!emit(0, true)) {
        return run_mismatch;
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
        auto m = engine.maintain(ops[i]);
        if (metrics.is_open()) {
            auto kind = ops[i].kind == UpdateOp::Kind::insertion ? "I" : "D";
            metrics << format_metrics(i + 1, kind, m, engine, config.timing);
        }
        if (!emit(i + 1, false)) {
            return run_mismatch;
        }
    }
    return run_ok;
}

AblationRun const& AblationReport::run(std::string const& name) const
{
    for (auto const& r: runs) {
        if (r.mode.name == name) {
            return r;
        }
    }
    throw std::out_of_range("no ablation mode '" + name + "'");
}

std::string AblationReport::table() const
{
    std::ostringstream out;
    out << "mode\teval_cost\tstore_accesses\tcost\tcost_per_op\tmicros\n";
    for (auto const& r: runs) {
        auto per_op = r.ops == 0 ? 0.0 : static_cast<double>(r.cost) / static_cast<double>(r.ops);
        out << r.mode.name << '\t' << r.evaluation.cost() << '\t' << r.store_accesses << '\t' << r.cost << '\t'
            << fixed(per_op) << '\t' << r.micros << '\n';
    }
    out << "reevaluation_cost\t" << fixed(reevaluation_cost) << "\t(" << reevaluation_samples << " samples)\n";
    out << "snapshots\t" << (consistent ? "identical" : "DIFFERENT") << '\n';
    return out.str();
}

std::vector<AblationMode> default_ablation_modes()
{
    return {
        {"cache+clustered", true, 0.6, true},
        {"nocache+clustered", false, 0.6, true},
        {"cache+unclustered", true, 0.0, true},
        {"nocache+unclustered", false, 0.0, true},
    };
}

AblationReport bench_ablation(AblationPlan const& plan)
{
    if (plan.workload == nullptr) {
        throw std::invalid_argument("ablation needs a workload");
    }
    auto const& ops = plan.workload->ops;
    AblationReport report;
    for (std::size_t m = 0; m < plan.modes.size(); ++m) {
        auto const& mode = plan.modes[m];
        auto store = plan.workload->make_store();
        auto config = plan.base;
        config.join_cache = mode.join_cache;
        config.kmean = mode.kmean;
        config.rollback = mode.rollback;
        Engine engine(store, plan.query, config);
        AblationRun run;
        run.mode = mode;
        run.evaluation = engine.evaluate();
        auto topk = engine.current_topk();
        auto previous = ranking(topk);
        run.snapshots = format_snapshot(0, topk);
        std::vector<std::size_t> samples;
        if (m == 0) {
            for (std::size_t s = 1; s <= plan.reevaluation_samples; ++s) {
                samples.push_back(ops.size() * s / plan.reevaluation_samples);
            }
        }
        std::uint64_t reevaluation = 0;
        auto sample = [&](std::size_t op) {
            for (auto at: samples) {
                if (at == op) {
                    Engine fresh(store, plan.query, plan.base);
                    reevaluation += fresh.evaluate().cost();
                    ++report.reevaluation_samples;
                }
            }
        };
        sample(0);
        for (std::size_t i = 0; i < ops.size(); ++i) {
            auto metrics = engine.maintain(ops[i]);
            run.store_accesses += metrics.store_accesses;
            run.cost += metrics.cost();
            run.micros += metrics.micros;
            ++run.ops;
            topk = engine.current_topk();
            auto now = ranking(topk);
            if (now != previous) {
                previous = std::move(now);
                run.snapshots += format_snapshot(i + 1, topk);
            }
            sample(i + 1);
        }
        if (m == 0 && report.reevaluation_samples > 0) {
            report.reevaluation_cost = static_cast<double>(reevaluation)
                                       / static_cast<double>(report.reevaluation_samples);
        }
        if (!report.runs.empty() && run.snapshots != report.runs.front().snapshots) {
            report.consistent = false;
        }
        report.runs.push_back(std::move(run));
    }
    return report;
}

}  // namespace kws
