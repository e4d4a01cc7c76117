#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kws/store.hpp"

namespace kws {

inline constexpr double score_slope = 0.2;

struct KeywordQuery {
    std::vector<std::string> keywords;  // lowercase, deduplicated, input order
    std::size_t k = 1;
    std::size_t delta_k = 0;

    /// Tokenizes `text`; throws std::invalid_argument if no keyword remains
    /// or k is zero.
    static KeywordQuery parse(std::string_view text, std::size_t k, std::size_t delta_k = 0);
    [[nodiscard]] std::size_t size() const noexcept { return keywords.size(); }
};

/// Normalization factor of a tuple: [1 + ln(1 + ln tf)] / [(1 - s) + s * dl / avdl].
/// An avdl of zero is only legal for bounds and then yields the dl-free maximum.
double tf_factor(std::uint32_t tf, std::size_t dl, double avdl);

double idf(std::size_t n, std::uint32_t df);

/// Per-tuple relevance from live statistics. Throws StoreError when a keyword
/// matches but the relation's avdl is zero.
double tscore(std::vector<std::uint32_t> const& tf, std::size_t dl, RelationStats const& stats,
              std::vector<std::string> const& keywords);
double tscore(Store const& store, TupleRef ref, KeywordQuery const& query);

/// Sum of `values` taken in ascending order, divided by `size`. Summing in a
/// fixed order makes componentwise dominance survive rounding.
double normalized_sum(std::vector<double> values, std::size_t size);

/// Relevance of a tree given the tscores of its members (zeros for free tuples).
inline double jtt_score(std::vector<double> tscores)
{
    auto n = tscores.size();
    return normalized_sum(std::move(tscores), n);
}

/// Bound for every tree of a CN that places a tuple with bound `t_upper` at one
/// query slot: the other query slots contribute their top bounds, free slots 0.
double cn_tuple_upper(double t_upper, std::vector<double> const& other_tops, std::size_t size);

struct EnvelopeViolation {
    std::vector<std::size_t> keywords;  // indexes into the query keywords
    bool avdl = false;

    [[nodiscard]] bool empty() const noexcept { return keywords.empty() && !avdl; }
};

struct EnvelopePolicy {
    double delta_df = 0.01;
    double delta_avdl = 0.01;
    double df_step = 0.02;
    double avdl_step = 0.02;
    double df_max = 0.15;
    double avdl_max = 0.15;
};

/// Future-score envelopes: per relation and keyword a slack Δdf on the
/// document frequency, per relation a slack Δavdl on the mean length. The
/// recorded bounds are frozen between refreshes, so upper scores stay constant.
class ScoreEnvelope {
  public:
    ScoreEnvelope() = default;
    ScoreEnvelope(Store const& store, KeywordQuery const& query, EnvelopePolicy policy);

    [[nodiscard]] double idf_upper(RelationId rel, std::size_t keyword) const
    {
        return m_relations.at(rel).idf_upper.at(keyword);
    }
    [[nodiscard]] double avdl_upper(RelationId rel) const { return m_relations.at(rel).avdl_upper; }
    [[nodiscard]] double delta_df(RelationId rel, std::size_t keyword) const
    {
        return m_relations.at(rel).delta_df.at(keyword);
    }
    [[nodiscard]] double delta_avdl(RelationId rel) const { return m_relations.at(rel).delta_avdl; }
    [[nodiscard]] EnvelopePolicy const& policy() const noexcept { return m_policy; }

    /// Live statistics that escaped the recorded bounds. Keywords absent from
    /// the relation cannot affect any tuple and are not reported; neither is
    /// avdl when the relation has no matched tuple.
    [[nodiscard]] EnvelopeViolation check(RelationId rel, RelationStats const& stats) const;

    /// Grows the violated slacks by one step (capped) and recomputes all bounds
    /// of the relation from the current statistics.
    void enlarge(RelationId rel, EnvelopeViolation const& violation, RelationStats const& stats);

    /// Recomputes the relation's bounds from `stats` at the current slacks.
    void refresh(RelationId rel, RelationStats const& stats);

    [[nodiscard]] double tscore_upper(RelationId rel, std::vector<std::uint32_t> const& tf, std::size_t dl) const;
    [[nodiscard]] double tscore_upper(Store const& store, TupleRef ref) const;

  private:
    struct Bounds {
        std::vector<double> delta_df;
        std::vector<double> idf_upper;
        double delta_avdl = 0;
        double avdl_upper = 0;
    };

    std::vector<std::string> m_keywords;
    EnvelopePolicy m_policy;
    std::vector<Bounds> m_relations;
};

}  // namespace kws
