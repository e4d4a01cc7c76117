#include "kws/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "kws/update_log.hpp"

namespace kws {

namespace {

constexpr char const* publication_schema =
    "relation Papers key=pid text=title\n"
    "relation Authors key=aid text=name\n"
    "relation Writes key=wid plain=aid,pid\n"
    "fk Writes.aid -> Authors\n"
    "fk Writes.pid -> Papers\n";

constexpr std::size_t vocabulary = 5000;

class Generator {
  public:
    explicit Generator(WorkloadSpec const& spec) : m_spec(spec), m_rng(spec.seed)
    {
        for (auto const& k: spec.keywords) {
            m_keywords.insert(k.word);
        }
    }

    Workload run()
    {
        Workload out;
        out.schema = publication_schema;
        auto papers = texts("Papers", m_spec.papers, "t", m_spec.title_words);
        auto authors = texts("Authors", m_spec.authors, "n", m_spec.name_words);
        for (auto& text: papers) {
            out.tuples.emplace_back("Papers", tuple(paper_key(), {std::move(text)}));
            m_live[0].push_back(out.tuples.back().second.key());
        }
        for (auto& text: authors) {
            out.tuples.emplace_back("Authors", tuple(author_key(), {std::move(text)}));
            m_live[1].push_back(out.tuples.back().second.key());
        }
        for (std::size_t i = 0; i < m_spec.writes; ++i) {
            out.tuples.emplace_back("Writes", write());
            m_live[2].push_back(out.tuples.back().second.key());
        }
        for (std::size_t i = 0; i < m_spec.ops; ++i) {
            out.ops.push_back(next());
        }
        return out;
    }

  private:
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : m_rng() % n; }
    bool coin(double p) { return static_cast<double>(m_rng() >> 11U) * 0x1.0p-53 < p; }

    std::string filler(char const* prefix)
    {
        while (true) {
            auto word = prefix + std::to_string(below(vocabulary));
            if (!m_keywords.contains(word)) {
                return word;
            }
        }
    }

    std::vector<std::string> words(char const* prefix, std::size_t count)
    {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(filler(prefix));
        }
        return out;
    }

    std::string join(std::vector<std::string> const& parts)
    {
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) {
            out += (i ? " " : "") + parts[i];
        }
        return out;
    }

    void place(std::vector<std::string>& parts, std::string const& word)
    {
        auto at = below(parts.size() + 1);
        parts.insert(parts.begin() + static_cast<long>(at), word);
    }

    /// Texts for an initial relation of `n` tuples with exact keyword counts.
    std::vector<std::string> texts(std::string const& rel, std::size_t n, char const* prefix, std::size_t length)
    {
        std::vector<std::vector<std::string>> parts;
        for (std::size_t i = 0; i < n; ++i) {
            parts.push_back(words(prefix, length));
        }
        std::vector<std::size_t> order(n);
        for (auto const& k: m_spec.keywords) {
            if (!k.relation.empty() && k.relation != rel) {
                continue;
            }
            auto df = static_cast<std::size_t>(std::llround(k.idf * static_cast<double>(n)));
            for (std::size_t i = 0; i < n; ++i) {
                order[i] = i;
            }
            for (std::size_t i = 0; i < df; ++i) {
                std::swap(order[i], order[i + below(n - i)]);
                place(parts[order[i]], k.word);
            }
        }
        std::vector<std::string> out;
        for (auto const& p: parts) {
            out.push_back(join(p));
        }
        return out;
    }

    std::string streamed_text(std::string const& rel, char const* prefix, std::size_t length)
    {
        auto parts = words(prefix, length);
        for (auto const& k: m_spec.keywords) {
            if ((k.relation.empty() || k.relation == rel) && coin(k.idf)) {
                place(parts, k.word);
            }
        }
        return join(parts);
    }

    std::string paper_key() { return "p" + std::to_string(m_next[0]++); }
    std::string author_key() { return "a" + std::to_string(m_next[1]++); }

    static Tuple tuple(std::string key, std::vector<std::string> rest)
    {
        Tuple t;
        t.values.push_back(std::move(key));
        for (auto& v: rest) {
            t.values.push_back(std::move(v));
        }
        return t;
    }

    std::string live_key(std::size_t rel)
    {
        auto const& keys = m_live[rel];
        return keys.empty() ? std::string("none") : keys[below(keys.size())];
    }

    Tuple write()
    {
        auto key = "w" + std::to_string(m_next[2]++);
        auto aid = live_key(1);
        auto pid = live_key(0);
        return tuple(std::move(key), {std::move(aid), std::move(pid)});
    }

    UpdateOp next()
    {
        std::size_t live = m_live[0].size() + m_live[1].size() + m_live[2].size();
        if (live > 0 && !coin(m_spec.insert_share)) {
            auto at = below(live);
            std::size_t rel = 0;
            while (at >= m_live[rel].size()) {
                at -= m_live[rel].size();
                ++rel;
            }
            auto& keys = m_live[rel];
            auto key = keys[at];
            keys[at] = keys.back();
            keys.pop_back();
            return UpdateOp::erase(names[rel], key);
        }
        std::size_t total = m_spec.papers + m_spec.authors + m_spec.writes;
        auto at = below(std::max<std::size_t>(total, 1));
        Tuple t;
        std::size_t rel;
        if (total == 0 || at < m_spec.papers) {
            rel = 0;
            t = tuple(paper_key(), {streamed_text("Papers", "t", m_spec.title_words)});
        } else if (at < m_spec.papers + m_spec.authors) {
            rel = 1;
            t = tuple(author_key(), {streamed_text("Authors", "n", m_spec.name_words)});
        } else {
            rel = 2;
            t = write();
        }
        m_live[rel].push_back(t.key());
        return UpdateOp::insert(names[rel], std::move(t));
    }

    static constexpr char const* names[] = {"Papers", "Authors", "Writes"};

    WorkloadSpec const& m_spec;
    std::mt19937_64 m_rng;
    std::set<std::string> m_keywords;
    std::vector<std::string> m_live[3];
    std::size_t m_next[3] = {0, 0, 0};
};

}  // namespace

Store Workload::make_store() const
{
    Store store(load_schema(schema));
    for (auto const& [rel, t]: tuples) {
        store.insert(rel, t);
    }
    return store;
}

Workload generate_workload(WorkloadSpec const& spec)
{
    for (auto const& k: spec.keywords) {
        if (!(k.idf > 0.0 && k.idf < 1.0)) {
            throw WorkloadError("idf of '" + k.word + "' must lie in (0, 1)");
        }
        auto tokens = tokenize(k.word);
        if (tokens.size() != 1 || tokens.front() != k.word) {
            throw WorkloadError("keyword '" + k.word + "' is not a single lowercase token");
        }
        if (!k.relation.empty() && k.relation != "Papers" && k.relation != "Authors") {
            throw WorkloadError("keyword '" + k.word + "' targets unknown text relation '" + k.relation + "'");
        }
    }
    if (spec.insert_share < 0.0 || spec.insert_share > 1.0) {
        throw WorkloadError("insert share must lie in [0, 1]");
    }
    return Generator(spec).run();
}

void write_workload(Workload const& workload, std::filesystem::path const& dir)
{
    std::filesystem::create_directories(dir);
    auto schema = load_schema(workload.schema);
    auto open = [&](std::string const& name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) {
            throw WorkloadError("cannot write " + (dir / name).string());
        }
        return out;
    };
    open("schema.txt") << workload.schema;
    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        auto const& rs = schema.relation(rel);
        auto out = open(rs.name + ".tsv");
        auto attrs = rs.attributes();
        for (std::size_t i = 0; i < attrs.size(); ++i) {
            out << (i ? "\t" : "") << attrs[i];
        }
        out << '\n';
        for (auto const& [name, t]: workload.tuples) {
            if (name != rs.name) {
                continue;
            }
            for (std::size_t i = 0; i < t.values.size(); ++i) {
                out << (i ? "\t" : "") << t.values[i];
            }
            out << '\n';
        }
    }
    auto log = open("updates.log");
    for (auto const& op: workload.ops) {
        log << format_op(schema, op) << '\n';
    }
}

}  // namespace kws
