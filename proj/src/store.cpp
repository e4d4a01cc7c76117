#include "kws/store.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace kws {

namespace {

std::string join_lines(std::vector<std::string> const& lines)
{
    std::string out = "invalid schema:";
    for (auto const& line: lines) {
        out += "\n  " + line;
    }
    return out;
}

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

std::vector<std::string> split_ws(std::string_view text)
{
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string word;
    while (in >> word) {
        out.push_back(word);
    }
    return out;
}

std::vector<std::string> attr_list(std::string const& value)
{
    std::vector<std::string> out;
    if (value.empty()) {
        return out;
    }
    for (auto& part: split(value, ',')) {
        if (!part.empty()) {
            out.push_back(std::move(part));
        }
    }
    return out;
}

}  // namespace

SchemaError::SchemaError(std::vector<std::string> violations)
    : std::runtime_error(join_lines(violations)), m_violations(std::move(violations))
{}

std::vector<std::string> RelationSchema::attributes() const
{
    std::vector<std::string> out;
    out.reserve(1 + text.size() + plain.size());
    out.push_back(key);
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), plain.begin(), plain.end());
    return out;
}

std::optional<std::size_t> RelationSchema::attribute_index(std::string_view attr) const
{
    if (attr == key) {
        return 0;
    }
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == attr) {
            return 1 + i;
        }
    }
    for (std::size_t i = 0; i < plain.size(); ++i) {
        if (plain[i] == attr) {
            return 1 + text.size() + i;
        }
    }
    return std::nullopt;
}

RelationId SchemaGraph::add_relation(RelationSchema schema)
{
    if (find(schema.name)) {
        throw SchemaError({"duplicate relation name '" + schema.name + "'"});
    }
    m_relations.push_back(std::move(schema));
    return static_cast<RelationId>(m_relations.size() - 1);
}

EdgeId SchemaGraph::add_foreign_key(RelationId from, std::string const& attribute, RelationId to)
{
    auto const& rel = m_relations.at(from);
    auto index = rel.attribute_index(attribute);
    if (!index || *index == 0) {
        throw SchemaError({"foreign key attribute '" + attribute + "' missing from relation '" + rel.name + "'"});
    }
    (void)m_relations.at(to);
    ForeignKey fk;
    fk.id = static_cast<EdgeId>(m_edges.size());
    fk.from = from;
    fk.to = to;
    fk.attribute = attribute;
    fk.attribute_index = *index;
    m_edges.push_back(std::move(fk));
    return m_edges.back().id;
}

std::optional<RelationId> SchemaGraph::find(std::string_view name) const
{
    for (std::size_t i = 0; i < m_relations.size(); ++i) {
        if (m_relations[i].name == name) {
            return static_cast<RelationId>(i);
        }
    }
    return std::nullopt;
}

std::vector<EdgeId> SchemaGraph::incident(RelationId rel) const
{
    std::vector<EdgeId> out;
    for (auto const& e: m_edges) {
        if (e.from == rel || e.to == rel) {
            out.push_back(e.id);
        }
    }
    return out;
}

SchemaGraph load_schema(std::string_view descriptor)
{
    std::vector<std::string> errors;
    std::vector<RelationSchema> relations;
    struct PendingFk {
        std::string from;
        std::string attr;
        std::string to;
        std::size_t line;
    };
    std::vector<PendingFk> fks;

    std::size_t lineno = 0;
    for (auto const& raw: split(descriptor, '\n')) {
        ++lineno;
        auto hash = raw.find('#');
        auto words = split_ws(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (words.empty()) {
            continue;
        }
        auto where = "line " + std::to_string(lineno) + ": ";
        if (words[0] == "relation") {
            if (words.size() < 2) {
                errors.push_back(where + "relation without a name");
                continue;
            }
            RelationSchema rel;
            rel.name = words[1];
            for (std::size_t i = 2; i < words.size(); ++i) {
                auto eq = words[i].find('=');
                if (eq == std::string::npos) {
                    errors.push_back(where + "expected attr=value, got '" + words[i] + "'");
                    continue;
                }
                auto name = words[i].substr(0, eq);
                auto value = words[i].substr(eq + 1);
                if (name == "key") {
                    rel.key = value;
                } else if (name == "text") {
                    rel.text = attr_list(value);
                } else if (name == "plain") {
                    rel.plain = attr_list(value);
                } else {
                    errors.push_back(where + "unknown field '" + name + "'");
                }
            }
            if (rel.key.empty()) {
                errors.push_back(where + "relation '" + rel.name + "' has no key attribute");
            }
            if (std::find(rel.text.begin(), rel.text.end(), rel.key) != rel.text.end()) {
                errors.push_back(where + "key attribute of '" + rel.name + "' is also a text attribute");
            }
            bool duplicate = std::any_of(relations.begin(), relations.end(), [&](auto const& r) {
                return r.name == rel.name;
            });
            if (duplicate) {
                errors.push_back(where + "duplicate relation name '" + rel.name + "'");
                continue;
            }
            relations.push_back(std::move(rel));
        } else if (words[0] == "fk") {
            // fk <from>.<attr> -> <to>
            if (words.size() != 4 || words[2] != "->") {
                errors.push_back(where + "expected 'fk <from>.<attr> -> <to>'");
                continue;
            }
            auto dot = words[1].find('.');
            if (dot == std::string::npos) {
                errors.push_back(where + "foreign key source must be <relation>.<attr>");
                continue;
            }
            fks.push_back({words[1].substr(0, dot), words[1].substr(dot + 1), words[3], lineno});
        } else {
            errors.push_back(where + "unknown directive '" + words[0] + "'");
        }
    }

    SchemaGraph graph;
    for (auto& rel: relations) {
        graph.add_relation(std::move(rel));
    }
    for (auto const& fk: fks) {
        auto where = "line " + std::to_string(fk.line) + ": ";
        auto from = graph.find(fk.from);
        auto to = graph.find(fk.to);
        if (!from) {
            errors.push_back(where + "unknown relation '" + fk.from + "' in foreign key");
        }
        if (!to) {
            errors.push_back(where + "unknown relation '" + fk.to + "' in foreign key");
        }
        if (!from || !to) {
            continue;
        }
        auto index = graph.relation(*from).attribute_index(fk.attr);
        if (!index || *index == 0) {
            errors.push_back(where + "foreign key attribute '" + fk.attr + "' missing from relation '" + fk.from
                             + "'");
            continue;
        }
        graph.add_foreign_key(*from, fk.attr, *to);
    }
    if (!errors.empty()) {
        throw SchemaError(std::move(errors));
    }
    return graph;
}

SchemaGraph load_schema_file(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw SchemaError({"cannot read schema file " + path.string()});
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_schema(buffer.str());
}

std::vector<std::string> tokenize(std::string_view text)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c: text) {
        auto u = static_cast<unsigned char>(c);
        if (u >= 0x80 || std::isalnum(u)) {
            current.push_back(static_cast<char>(std::tolower(u)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::size_t char_count(std::string_view text)
{
    return static_cast<std::size_t>(std::count_if(text.begin(), text.end(), [](char c) {
        return (static_cast<unsigned char>(c) & 0xC0U) != 0x80U;
    }));
}

Tuple build_tuple(RelationSchema const& schema, std::map<std::string, std::string> const& attrs)
{
    Tuple tuple;
    tuple.values.resize(1 + schema.text.size() + schema.plain.size());
    for (auto const& [name, value]: attrs) {
        auto index = schema.attribute_index(name);
        if (!index) {
            throw StoreError("relation '" + schema.name + "' has no attribute '" + name + "'");
        }
        tuple.values[*index] = value;
    }
    for (std::size_t i = schema.text_begin(); i < schema.text_end(); ++i) {
        tuple.dl += char_count(tuple.values[i]);
    }
    return tuple;
}

std::vector<std::uint32_t> term_frequencies(RelationSchema const& schema,
                                            Tuple const& tuple,
                                            std::vector<std::string> const& keywords)
{
    std::vector<std::uint32_t> tf(keywords.size(), 0);
    for (std::size_t i = schema.text_begin(); i < schema.text_end(); ++i) {
        for (auto const& token: tokenize(tuple.values[i])) {
            for (std::size_t k = 0; k < keywords.size(); ++k) {
                if (token == keywords[k]) {
                    ++tf[k];
                }
            }
        }
    }
    return tf;
}

Store::Store(SchemaGraph schema, StoreOptions options)
    : m_schema(std::move(schema)),
      m_options(options),
      m_relations(m_schema.size()),
      m_reverse(m_schema.edges().size())
{}

Slot Store::intern(RelationData& data, std::string const& key)
{
    auto [it, inserted] = data.key_to_slot.try_emplace(key, static_cast<Slot>(data.slots.size()));
    if (inserted) {
        data.slots.emplace_back();
        data.slot_keys.push_back(key);
    }
    return it->second;
}

void Store::index_text(RelationId rel, Slot slot, Tuple const& tuple, bool add)
{
    auto const& schema = m_schema.relation(rel);
    auto& data = m_relations[rel];
    std::map<std::string, std::uint32_t> counts;
    for (std::size_t i = schema.text_begin(); i < schema.text_end(); ++i) {
        for (auto& token: tokenize(tuple.values[i])) {
            ++counts[token];
        }
    }
    for (auto const& [word, count]: counts) {
        if (add) {
            data.inverted[word][slot] = count;
            ++data.stats.df[word];
        } else {
            auto it = data.inverted.find(word);
            it->second.erase(slot);
            if (it->second.empty()) {
                data.inverted.erase(it);
            }
            if (--data.stats.df[word] == 0) {
                data.stats.df.erase(word);
            }
        }
    }
}

TupleRef Store::insert(RelationId rel, Tuple tuple)
{
    if (rel >= m_relations.size()) {
        throw StoreError("unknown relation id " + std::to_string(rel));
    }
    auto const& schema = m_schema.relation(rel);
    if (tuple.values.size() != 1 + schema.text.size() + schema.plain.size()) {
        throw StoreError("tuple arity does not match relation '" + schema.name + "'");
    }
    auto& data = m_relations[rel];
    if (auto it = data.key_to_slot.find(tuple.key()); it != data.key_to_slot.end() && data.slots[it->second]) {
        throw StoreError("duplicate key '" + tuple.key() + "' in relation '" + schema.name + "'");
    }
    if (m_options.referential_checking) {
        for (auto const& e: m_schema.edges()) {
            if (e.from != rel) {
                continue;
            }
            auto const& value = tuple.values[e.attribute_index];
            if (!value.empty() && !find(e.to, value)) {
                throw StoreError("dangling foreign key " + schema.name + "." + e.attribute + "=" + value);
            }
        }
    }
    std::size_t dl = 0;
    for (std::size_t i = schema.text_begin(); i < schema.text_end(); ++i) {
        dl += char_count(tuple.values[i]);
    }
    tuple.dl = dl;

    Slot slot = intern(data, tuple.key());
    for (auto const& e: m_schema.edges()) {
        if (e.from == rel) {
            m_reverse[e.id][tuple.values[e.attribute_index]].insert(slot);
        }
    }
    index_text(rel, slot, tuple, true);
    data.stats.n += 1;
    data.stats.total_dl += tuple.dl;
    data.slots[slot] = std::move(tuple);
    return {rel, slot};
}

TupleRef Store::insert(std::string_view relation, Tuple tuple)
{
    auto rel = m_schema.find(relation);
    if (!rel) {
        throw StoreError("unknown relation '" + std::string(relation) + "'");
    }
    return insert(*rel, std::move(tuple));
}

Tuple Store::erase(RelationId rel, std::string const& key)
{
    auto ref = find(rel, key);
    if (!ref) {
        throw StoreError("no tuple '" + key + "' in relation '" + m_schema.relation(rel).name + "'");
    }
    auto& data = m_relations[rel];
    Tuple tuple = std::move(*data.slots[ref->slot]);
    data.slots[ref->slot].reset();
    for (auto const& e: m_schema.edges()) {
        if (e.from != rel) {
            continue;
        }
        auto it = m_reverse[e.id].find(tuple.values[e.attribute_index]);
        it->second.erase(ref->slot);
        if (it->second.empty()) {
            m_reverse[e.id].erase(it);
        }
    }
    index_text(rel, ref->slot, tuple, false);
    data.stats.n -= 1;
    data.stats.total_dl -= tuple.dl;
    return tuple;
}

std::optional<TupleRef> Store::find(RelationId rel, std::string const& key) const
{
    auto const& data = m_relations.at(rel);
    auto it = data.key_to_slot.find(key);
    if (it == data.key_to_slot.end() || !data.slots[it->second]) {
        return std::nullopt;
    }
    return TupleRef{rel, it->second};
}

bool Store::live(TupleRef ref) const
{
    auto const& data = m_relations.at(ref.relation);
    return ref.slot < data.slots.size() && data.slots[ref.slot].has_value();
}

Tuple const& Store::tuple(TupleRef ref) const
{
    auto const& slot = m_relations.at(ref.relation).slots.at(ref.slot);
    if (!slot) {
        throw StoreError("tuple is not live");
    }
    return *slot;
}

std::string const& Store::key_of(TupleRef ref) const
{
    return m_relations.at(ref.relation).slot_keys.at(ref.slot);
}

std::map<Slot, std::uint32_t> const* Store::postings(RelationId rel, std::string const& word) const
{
    auto const& inv = m_relations.at(rel).inverted;
    auto it = inv.find(word);
    return it == inv.end() ? nullptr : &it->second;
}

std::uint32_t Store::tf(TupleRef ref, std::string const& word) const
{
    auto const* list = postings(ref.relation, word);
    if (list == nullptr) {
        return 0;
    }
    auto it = list->find(ref.slot);
    return it == list->end() ? 0U : it->second;
}

std::vector<MatchedTuple> Store::matched_tuples(RelationId rel, std::vector<std::string> const& keywords) const
{
    std::map<Slot, std::vector<std::uint32_t>> merged;
    for (std::size_t k = 0; k < keywords.size(); ++k) {
        ++m_accesses;
        auto const* list = postings(rel, keywords[k]);
        if (list == nullptr) {
            continue;
        }
        for (auto const& [slot, count]: *list) {
            auto& tf = merged[slot];
            tf.resize(keywords.size(), 0);
            tf[k] = count;
        }
    }
    std::vector<MatchedTuple> out;
    out.reserve(merged.size());
    for (auto& [slot, tf]: merged) {
        out.push_back({slot, std::move(tf)});
    }
    return out;
}

std::vector<Slot> Store::join_neighbors(TupleRef ref, Tuple const& tuple, EdgeId edge, Direction direction) const
{
    ++m_accesses;
    auto const& e = m_schema.edge(edge);
    std::vector<Slot> out;
    if (direction == Direction::toward_referenced) {
        if (ref.relation != e.from) {
            return out;
        }
        if (auto target = find(e.to, tuple.values[e.attribute_index])) {
            out.push_back(target->slot);
        }
    } else {
        if (ref.relation != e.to) {
            return out;
        }
        auto it = m_reverse[edge].find(tuple.key());
        if (it != m_reverse[edge].end()) {
            out.assign(it->second.begin(), it->second.end());
        }
    }
    return out;
}

std::vector<Slot> Store::live_slots(RelationId rel) const
{
    std::vector<Slot> out;
    auto const& data = m_relations.at(rel);
    for (Slot s = 0; s < data.slots.size(); ++s) {
        if (data.slots[s]) {
            out.push_back(s);
        }
    }
    return out;
}

void load_tsv_directory(Store& store, std::filesystem::path const& dir)
{
    auto const& schema = store.schema();
    for (RelationId rel = 0; rel < schema.size(); ++rel) {
        auto const& rs = schema.relation(rel);
        auto path = dir / (rs.name + ".tsv");
        std::ifstream in(path);
        if (!in) {
            continue;
        }
        std::string line;
        if (!std::getline(in, line)) {
            continue;
        }
        auto header = split(line, '\t');
        if (header.empty() || header[0] != rs.key) {
            throw StoreError(path.string() + ": first column must be the key '" + rs.key + "'");
        }
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            auto fields = split(line, '\t');
            if (fields.size() != header.size()) {
                throw StoreError(path.string() + ":" + std::to_string(lineno) + ": expected "
                                 + std::to_string(header.size()) + " fields");
            }
            std::map<std::string, std::string> attrs;
            for (std::size_t i = 0; i < header.size(); ++i) {
                attrs[header[i]] = fields[i];
            }
            store.insert(rel, build_tuple(rs, attrs));
        }
    }
}

}  // namespace kws
