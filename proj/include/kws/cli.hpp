#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kws/engine.hpp"
#include "kws/update_log.hpp"
#include "kws/workload.hpp"

namespace kws {

struct RunConfig {
    std::filesystem::path schema;
    std::filesystem::path data;
    std::string query;
    std::size_t k = 100;
    std::size_t delta_k = 1;
    std::size_t cn_max = 6;
    double kmean = 0.6;
    EnvelopePolicy envelope;
    std::size_t dk_step = 2;
    std::size_t dk_max = 20;
    std::filesystem::path log;
    std::size_t cadence = 0;  // snapshot every N ops besides changes; 0 = changes only
    bool oracle_check = false;
    bool join_cache = true;
    bool rollback = true;
    bool timing = true;
    std::filesystem::path snapshots;  // empty: the snapshot stream
    std::filesystem::path metrics;    // empty: none

    [[nodiscard]] EngineConfig engine() const;
};

/// Exit statuses of run_continual.
enum RunStatus : int { run_ok = 0, run_mismatch = 3 };

/// `op_seq<TAB>rank<TAB>score<TAB>cn_id<TAB>tree` per result; an empty
/// top-k is written as a single rank-0 line.
std::string format_snapshot(std::size_t op, std::vector<Jtt const*> const& topk);
std::string format_snapshot(std::size_t op, std::vector<Jtt> const& topk);

std::string metrics_header();
std::string format_metrics(std::size_t op, char const* kind, Metrics const& m, Engine const& engine, bool timing);

/// Loads the data, evaluates the query and replays the log. Snapshots go to
/// `config.snapshots` or `out`; notes and errors to `err`. Input errors
/// throw; an oracle mismatch returns run_mismatch.
int run_continual(RunConfig const& config, std::ostream& out, std::ostream& err);

/// Replays `ops` against a fresh engine and store per mode.
struct AblationMode {
    std::string name;
    bool join_cache = true;
    double kmean = 0.6;
    bool rollback = true;
};

struct AblationRun {
    AblationMode mode;
    Metrics evaluation;
    std::uint64_t store_accesses = 0;  // maintenance only
    std::uint64_t cost = 0;            // maintenance only
    std::uint64_t micros = 0;
    std::size_t ops = 0;
    std::string snapshots;             // top-k after evaluation and after each change
};

struct AblationReport {
    std::vector<AblationRun> runs;
    bool consistent = true;            // every run produced the same snapshots
    double reevaluation_cost = 0;      // mean cost of a from-scratch evaluation
    std::size_t reevaluation_samples = 0;

    [[nodiscard]] AblationRun const& run(std::string const& name) const;
    [[nodiscard]] std::string table() const;
};

struct AblationPlan {
    Workload const* workload = nullptr;
    KeywordQuery query;
    EngineConfig base;
    std::vector<AblationMode> modes;
    std::size_t reevaluation_samples = 4;  // taken along the first mode's stream
};

std::vector<AblationMode> default_ablation_modes();
AblationReport bench_ablation(AblationPlan const& plan);

}  // namespace kws
