#include "kws/score.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kws {

KeywordQuery KeywordQuery::parse(std::string_view text, std::size_t k, std::size_t delta_k)
{
    if (k == 0) {
        throw std::invalid_argument("k must be at least 1");
    }
    KeywordQuery q;
    q.k = k;
    q.delta_k = delta_k;
    for (auto& token: tokenize(text)) {
        if (std::find(q.keywords.begin(), q.keywords.end(), token) == q.keywords.end()) {
            q.keywords.push_back(std::move(token));
        }
    }
    if (q.keywords.empty()) {
        throw std::invalid_argument("query has no keywords: '" + std::string(text) + "'");
    }
    return q;
}

double tf_factor(std::uint32_t tf, std::size_t dl, double avdl)
{
    double num = 1.0 + std::log(1.0 + std::log(static_cast<double>(tf)));
    if (avdl <= 0.0) {
        return num / (1.0 - score_slope);
    }
    return num / ((1.0 - score_slope) + score_slope * static_cast<double>(dl) / avdl);
}

double idf(std::size_t n, std::uint32_t df)
{
    return std::log(static_cast<double>(n) / (static_cast<double>(df) + 1.0));
}

double tscore(std::vector<std::uint32_t> const& tf, std::size_t dl, RelationStats const& stats,
              std::vector<std::string> const& keywords)
{
    double total = 0.0;
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (tf[i] == 0) {
            continue;
        }
        double avdl = stats.avdl();
        if (avdl <= 0.0) {
            throw StoreError("matched tuple in a relation with zero average length");
        }
        total += tf_factor(tf[i], dl, avdl) * idf(stats.n, stats.document_frequency(keywords[i]));
    }
    return total;
}

double tscore(Store const& store, TupleRef ref, KeywordQuery const& query)
{
    auto const& t = store.tuple(ref);
    std::vector<std::uint32_t> tf;
    tf.reserve(query.size());
    for (auto const& w: query.keywords) {
        tf.push_back(store.tf(ref, w));
    }
    return tscore(tf, t.dl, store.stats(ref.relation), query.keywords);
}

double normalized_sum(std::vector<double> values, std::size_t size)
{
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v: values) {
        total += v;
    }
    return total / static_cast<double>(size);
}

double cn_tuple_upper(double t_upper, std::vector<double> const& other_tops, std::size_t size)
{
    std::vector<double> values(size, 0.0);
    values[0] = t_upper;
    std::copy(other_tops.begin(), other_tops.end(), values.begin() + 1);
    return normalized_sum(std::move(values), size);
}

ScoreEnvelope::ScoreEnvelope(Store const& store, KeywordQuery const& query, EnvelopePolicy policy)
    : m_keywords(query.keywords), m_policy(policy), m_relations(store.schema().size())
{
    for (RelationId rel = 0; rel < m_relations.size(); ++rel) {
        auto& b = m_relations[rel];
        b.delta_df.assign(m_keywords.size(), policy.delta_df);
        b.idf_upper.assign(m_keywords.size(), 0.0);
        b.delta_avdl = policy.delta_avdl;
        refresh(rel, store.stats(rel));
    }
}

void ScoreEnvelope::refresh(RelationId rel, RelationStats const& stats)
{
    auto& b = m_relations.at(rel);
    for (std::size_t i = 0; i < m_keywords.size(); ++i) {
        double df = stats.document_frequency(m_keywords[i]);
        b.idf_upper[i] = std::log(static_cast<double>(stats.n) / (df * (1.0 - b.delta_df[i]) + 1.0));
    }
    b.avdl_upper = stats.avdl() * (1.0 + b.delta_avdl);
}

EnvelopeViolation ScoreEnvelope::check(RelationId rel, RelationStats const& stats) const
{
    EnvelopeViolation v;
    auto const& b = m_relations.at(rel);
    bool any_match = false;
    for (std::size_t i = 0; i < m_keywords.size(); ++i) {
        auto df = stats.document_frequency(m_keywords[i]);
        if (df == 0) {
            continue;
        }
        any_match = true;
        if (idf(stats.n, df) > b.idf_upper[i]) {
            v.keywords.push_back(i);
        }
    }
    v.avdl = any_match && stats.avdl() > b.avdl_upper;
    return v;
}

void ScoreEnvelope::enlarge(RelationId rel, EnvelopeViolation const& violation, RelationStats const& stats)
{
    auto& b = m_relations.at(rel);
    for (auto i: violation.keywords) {
        b.delta_df[i] = std::min(b.delta_df[i] + m_policy.df_step, m_policy.df_max);
    }
    if (violation.avdl) {
        b.delta_avdl = std::min(b.delta_avdl + m_policy.avdl_step, m_policy.avdl_max);
    }
    refresh(rel, stats);
}

double ScoreEnvelope::tscore_upper(RelationId rel, std::vector<std::uint32_t> const& tf, std::size_t dl) const
{
    auto const& b = m_relations.at(rel);
    double total = 0.0;
    for (std::size_t i = 0; i < m_keywords.size(); ++i) {
        if (tf[i] == 0) {
            continue;
        }
        // a negative idf bound would reward larger factors; clamping keeps the
        // term an upper bound for every admissible factor
        total += tf_factor(tf[i], dl, b.avdl_upper) * std::max(b.idf_upper[i], 0.0);
    }
    return total;
}

double ScoreEnvelope::tscore_upper(Store const& store, TupleRef ref) const
{
    std::vector<std::uint32_t> tf;
    tf.reserve(m_keywords.size());
    for (auto const& w: m_keywords) {
        tf.push_back(store.tf(ref, w));
    }
    return tscore_upper(ref.relation, tf, store.tuple(ref).dl);
}

}  // namespace kws
