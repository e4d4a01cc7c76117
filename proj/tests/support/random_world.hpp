#pragma once

#include <random>
#include <string>
#include <vector>

#include "kws/engine.hpp"
#include "kws/store.hpp"

namespace kws::testing {

/// Random schema, data and update stream. Relation i may reference any
/// earlier relation, possibly over two attributes; texts draw from a small
/// vocabulary that contains the query words.
class RandomWorld {
  public:
    struct Shape {
        std::size_t relations_min = 2;
        std::size_t relations_max = 4;
        std::size_t tuples_min = 150;
        std::size_t tuples_max = 400;
        double keyword_rate = 0.15;
        double insert_share = 0.5;
        std::size_t tuples_cap = 500;
    };

    explicit RandomWorld(std::uint64_t seed, Shape shape) : m_rng(seed), m_shape(shape)
    {
        auto n = pick(shape.relations_min, shape.relations_max);
        std::string text;
        for (std::size_t i = 0; i < n; ++i) {
            Relation r;
            r.name = "R" + std::to_string(i);
            r.text = i == 0 || coin(0.6);
            if (i > 0) {
                auto fks = coin(0.3) ? 2U : 1U;
                for (std::size_t f = 0; f < fks; ++f) {
                    r.targets.push_back(pick(0, i - 1));
                }
            }
            text += "relation " + r.name + " key=id";
            if (r.text) {
                text += " text=t";
            }
            if (!r.targets.empty()) {
                text += " plain=";
                for (std::size_t f = 0; f < r.targets.size(); ++f) {
                    text += (f ? ",f" : "f") + std::to_string(f);
                }
            }
            text += "\n";
            m_relations.push_back(r);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < m_relations[i].targets.size(); ++f) {
                text += "fk " + m_relations[i].name + ".f" + std::to_string(f) + " -> " +
                        m_relations[m_relations[i].targets[f]].name + "\n";
            }
        }
        m_descriptor = text;
    }

    [[nodiscard]] std::string const& descriptor() const { return m_descriptor; }
    [[nodiscard]] static std::string query_text() { return "alpha beta"; }

    /// Fills `store` with the initial tuples.
    void populate(Store& store)
    {
        auto total = pick(m_shape.tuples_min, m_shape.tuples_max);
        for (std::size_t i = 0; i < total; ++i) {
            auto rel = pick(0, m_relations.size() - 1);
            store.insert(static_cast<RelationId>(rel), make(store, rel));
        }
    }

    UpdateOp next(Store const& store)
    {
        std::size_t live = 0;
        for (RelationId r = 0; r < m_relations.size(); ++r) {
            live += store.live_count(r);
        }
        if (live > 0 && (live >= m_shape.tuples_cap || !coin(m_shape.insert_share))) {
            while (true) {
                auto rel = static_cast<RelationId>(pick(0, m_relations.size() - 1));
                auto slots = store.live_slots(rel);
                if (slots.empty()) {
                    continue;
                }
                auto s = slots[pick(0, slots.size() - 1)];
                return UpdateOp::erase(m_relations[rel].name, store.key_of({rel, s}));
            }
        }
        auto rel = pick(0, m_relations.size() - 1);
        return UpdateOp::insert(m_relations[rel].name, make(store, rel));
    }

    std::size_t pick(std::size_t lo, std::size_t hi)
    {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(m_rng);
    }
    bool coin(double p) { return std::bernoulli_distribution(p)(m_rng); }

  private:
    struct Relation {
        std::string name;
        bool text = false;
        std::vector<std::size_t> targets;
    };

    Tuple make(Store const& store, std::size_t rel)
    {
        auto const& r = m_relations[rel];
        Tuple t;
        t.values.push_back(r.name + "_" + std::to_string(m_next_key++));
        if (r.text) {
            static char const* const filler[] = {"gamma", "delta", "omega", "sigma", "kappa", "theta"};
            std::string text;
            auto words = pick(1, 5);
            for (std::size_t w = 0; w < words; ++w) {
                std::string word;
                if (coin(m_shape.keyword_rate)) {
                    word = coin(0.5) ? "alpha" : "beta";
                } else {
                    word = filler[pick(0, 5)];
                }
                text += (w ? " " : "") + word;
            }
            t.values.push_back(text);
        }
        for (auto target: r.targets) {
            auto slots = store.live_slots(static_cast<RelationId>(target));
            if (slots.empty() || coin(0.03)) {
                t.values.push_back("dangling");
            } else {
                t.values.push_back(store.key_of({static_cast<RelationId>(target), slots[pick(0, slots.size() - 1)]}));
            }
        }
        return t;
    }

    std::mt19937_64 m_rng;
    Shape m_shape;
    std::vector<Relation> m_relations;
    std::string m_descriptor;
    std::size_t m_next_key = 0;
};

}  // namespace kws::testing
