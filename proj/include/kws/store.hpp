#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kws {

using RelationId = std::uint32_t;
using Slot = std::uint32_t;
using EdgeId = std::uint32_t;

/// A tuple handle: relation plus the slot its key is interned to. Slots are
/// stable for a key, so a deleted and re-inserted key gets the same handle.
struct TupleRef {
    RelationId relation = 0;
    Slot slot = 0;

    [[nodiscard]] std::uint64_t packed() const noexcept
    {
        return (std::uint64_t(relation) << 32U) | slot;
    }
    friend auto operator<=>(TupleRef const&, TupleRef const&) = default;
};

struct TupleRefHash {
    std::size_t operator()(TupleRef ref) const noexcept
    {
        return std::hash<std::uint64_t>{}(ref.packed());
    }
};

class SchemaError : public std::runtime_error {
  public:
    explicit SchemaError(std::vector<std::string> violations);
    [[nodiscard]] std::vector<std::string> const& violations() const noexcept { return m_violations; }

  private:
    std::vector<std::string> m_violations;
};

class StoreError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RelationSchema {
    std::string name;
    std::string key;
    std::vector<std::string> text;
    std::vector<std::string> plain;

    /// key first, then text attributes, then plain attributes
    [[nodiscard]] std::vector<std::string> attributes() const;
    [[nodiscard]] std::optional<std::size_t> attribute_index(std::string_view attr) const;
    [[nodiscard]] std::size_t text_begin() const noexcept { return 1; }
    [[nodiscard]] std::size_t text_end() const noexcept { return 1 + text.size(); }
    [[nodiscard]] bool has_text() const noexcept { return !text.empty(); }
};

/// A foreign-key reference `from.attribute -> to`; the attribute references the
/// key of `to`.
struct ForeignKey {
    EdgeId id = 0;
    RelationId from = 0;
    RelationId to = 0;
    std::string attribute;
    std::size_t attribute_index = 0;
};

/// Which end of a foreign key we walk to.
enum class Direction : std::uint8_t {
    toward_referenced,   // from the FK holder to the referenced tuple
    toward_referencing,  // from the referenced tuple to every FK holder
};

class SchemaGraph {
  public:
    SchemaGraph() = default;

    RelationId add_relation(RelationSchema schema);
    EdgeId add_foreign_key(RelationId from, std::string const& attribute, RelationId to);

    [[nodiscard]] std::vector<RelationSchema> const& relations() const noexcept { return m_relations; }
    [[nodiscard]] std::vector<ForeignKey> const& edges() const noexcept { return m_edges; }
    [[nodiscard]] RelationSchema const& relation(RelationId id) const { return m_relations.at(id); }
    [[nodiscard]] ForeignKey const& edge(EdgeId id) const { return m_edges.at(id); }
    [[nodiscard]] std::optional<RelationId> find(std::string_view name) const;
    [[nodiscard]] std::size_t size() const noexcept { return m_relations.size(); }

    /// Edges with `rel` on either end.
    [[nodiscard]] std::vector<EdgeId> incident(RelationId rel) const;

  private:
    std::vector<RelationSchema> m_relations;
    std::vector<ForeignKey> m_edges;
};

/// Parses the line-oriented schema descriptor:
///
///     relation <name> key=<attr> text=<a,b> plain=<c,d>
///     fk <from>.<attr> -> <to>
///
/// Blank lines and `#` comments are ignored. Throws SchemaError listing every
/// problem found.
SchemaGraph load_schema(std::string_view descriptor);
SchemaGraph load_schema_file(std::filesystem::path const& path);

/// Lowercased alphanumeric runs. Bytes >= 0x80 are kept inside tokens so
/// UTF-8 words are not split.
std::vector<std::string> tokenize(std::string_view text);

/// Number of characters (UTF-8 code points) in `text`.
std::size_t char_count(std::string_view text);

struct Tuple {
    /// Values aligned with RelationSchema::attributes(); values[0] is the key.
    std::vector<std::string> values;
    std::size_t dl = 0;

    [[nodiscard]] std::string const& key() const { return values.front(); }
};

/// Builds a tuple from attribute/value pairs; missing attributes are empty.
/// Unknown attributes throw StoreError.
Tuple build_tuple(RelationSchema const& schema, std::map<std::string, std::string> const& attrs);

struct RelationStats {
    std::size_t n = 0;
    std::uint64_t total_dl = 0;
    std::unordered_map<std::string, std::uint32_t> df;

    [[nodiscard]] double avdl() const noexcept
    {
        return n == 0 ? 0.0 : static_cast<double>(total_dl) / static_cast<double>(n);
    }
    [[nodiscard]] std::uint32_t document_frequency(std::string const& word) const
    {
        auto it = df.find(word);
        return it == df.end() ? 0U : it->second;
    }
};

struct MatchedTuple {
    Slot slot = 0;
    std::vector<std::uint32_t> tf;  // aligned with the query keywords
};

struct StoreOptions {
    bool referential_checking = false;
};

/// In-memory relational store: tuples, key and foreign-key indexes, an
/// inverted index over text attributes and live statistics.
///
/// Single writer; reads between mutations only.
class Store {
  public:
    explicit Store(SchemaGraph schema, StoreOptions options = {});

    [[nodiscard]] SchemaGraph const& schema() const noexcept { return m_schema; }

    TupleRef insert(RelationId rel, Tuple tuple);
    TupleRef insert(std::string_view relation, Tuple tuple);
    /// Removes the tuple and returns it. Throws StoreError on an unknown key.
    Tuple erase(RelationId rel, std::string const& key);

    [[nodiscard]] std::optional<TupleRef> find(RelationId rel, std::string const& key) const;
    [[nodiscard]] bool live(TupleRef ref) const;
    [[nodiscard]] Tuple const& tuple(TupleRef ref) const;
    /// Key for any slot ever assigned, live or not.
    [[nodiscard]] std::string const& key_of(TupleRef ref) const;
    [[nodiscard]] RelationStats const& stats(RelationId rel) const { return m_relations.at(rel).stats; }

    /// Posting list (slot -> tf) for `word`, or nullptr.
    [[nodiscard]] std::map<Slot, std::uint32_t> const* postings(RelationId rel, std::string const& word) const;
    [[nodiscard]] std::uint32_t tf(TupleRef ref, std::string const& word) const;
    [[nodiscard]] std::vector<MatchedTuple> matched_tuples(RelationId rel,
                                                           std::vector<std::string> const& keywords) const;

    /// Tuples joined to `tuple` (stored at `ref`, which need not be live) over
    /// `edge`, sorted by slot. Each call counts as one store access.
    [[nodiscard]] std::vector<Slot> join_neighbors(TupleRef ref,
                                                   Tuple const& tuple,
                                                   EdgeId edge,
                                                   Direction direction) const;
    [[nodiscard]] std::vector<Slot> join_neighbors(TupleRef ref, EdgeId edge, Direction direction) const
    {
        return join_neighbors(ref, tuple(ref), edge, direction);
    }

    [[nodiscard]] std::vector<Slot> live_slots(RelationId rel) const;
    [[nodiscard]] std::size_t live_count(RelationId rel) const { return m_relations.at(rel).stats.n; }

    [[nodiscard]] std::uint64_t access_count() const noexcept { return m_accesses; }
    void reset_access_count() noexcept { m_accesses = 0; }

  private:
    struct RelationData {
        std::vector<std::optional<Tuple>> slots;
        std::vector<std::string> slot_keys;
        std::unordered_map<std::string, Slot> key_to_slot;
        RelationStats stats;
        std::unordered_map<std::string, std::map<Slot, std::uint32_t>> inverted;
    };

    Slot intern(RelationData& data, std::string const& key);
    void index_text(RelationId rel, Slot slot, Tuple const& tuple, bool add);

    SchemaGraph m_schema;
    StoreOptions m_options;
    std::vector<RelationData> m_relations;
    // per edge: referencing value -> FK holders
    std::vector<std::unordered_map<std::string, std::set<Slot>>> m_reverse;
    mutable std::uint64_t m_accesses = 0;
};

/// Loads `<relation>.tsv` for every relation present in `dir`. The header row
/// names the attributes; the first column is the key.
void load_tsv_directory(Store& store, std::filesystem::path const& dir);

/// Term frequencies of `keywords` in the text attributes of `tuple`.
std::vector<std::uint32_t> term_frequencies(RelationSchema const& schema,
                                            Tuple const& tuple,
                                            std::vector<std::string> const& keywords);

}  // namespace kws
