#pragma once
// Immutable store of ordered n-ary facts. Every relation has a fixed arity
// and each position in an edge carries its own meaning, so edges are kept
// as ordered entity tuples and indexed both by participating entity and by
// (relation, position, entity).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "common/error.hpp"

namespace hypercqa::khg {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Hyperedge {
    RelationId relation;
    std::vector<EntityId> entities;  // length == arity(relation)

    bool operator==(const Hyperedge& other) const = default;
};

// (edge index, position occupied by the queried entity)
struct EdgeSlot {
    std::uint32_t edge;
    std::uint32_t position;

    bool operator==(const EdgeSlot& other) const = default;
};

class KnowledgeHypergraph {
public:
    // Parses a line-oriented fact listing: relation name, then entity names,
    // tab-separated; '#' lines are comments; duplicate facts collapse to one
    // edge. Ids are assigned in first-appearance order.
    static KnowledgeHypergraph parse_facts(std::string_view text);

    // Same format, but entity/relation names resolve against an existing
    // vocabulary instead of extending it (used to load split subsets).
    static KnowledgeHypergraph parse_facts_with_vocab(std::string_view text,
                                                      const KnowledgeHypergraph& vocab_source);

    // Builds a graph over the given vocabulary from an explicit edge list.
    static KnowledgeHypergraph from_edges(const KnowledgeHypergraph& vocab_source,
                                          const std::vector<Hyperedge>& edges);

    std::size_t num_entities() const { return entity_names_.size(); }
    std::size_t num_relations() const { return relation_names_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Hyperedge>& edges() const { return edges_; }

    const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
    const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
    std::uint32_t arity(RelationId id) const { return arities_.at(id); }

    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;

    bool has_edge(const Hyperedge& edge) const;

    // Every (edge, position) pair in which the entity occurs; one pair per
    // occupied position, so a self-loop reports each slot separately.
    const std::vector<EdgeSlot>& edges_containing(EntityId entity) const;

    // All entities at `target` over edges of `relation` that agree with the
    // bound positions. Exact index-backed equivalent of a linear scan.
    std::vector<EntityId> match_pattern(RelationId relation,
                                        const std::vector<std::pair<std::uint32_t, EntityId>>& bindings,
                                        std::uint32_t target) const;

    // Inverse of parse_facts on deduplicated edge sets: one fact per line,
    // edges in first-appearance order.
    std::string serialize() const;

    // Entity/relation/edge counts plus an arity histogram, tab-separated.
    std::string stats_tsv() const;

    // Fingerprint of the vocabulary (names in id order), for manifests.
    std::uint64_t vocab_hash() const;

private:
    KnowledgeHypergraph() = default;

    EntityId intern_entity(std::string_view name);
    RelationId intern_relation(std::string_view name, std::uint32_t arity);
    void add_edge_indexed(Hyperedge edge);
    static std::uint64_t pattern_key(RelationId relation, std::uint32_t position, EntityId entity);

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::vector<std::uint32_t> arities_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;

    std::vector<Hyperedge> edges_;
    std::vector<std::vector<EdgeSlot>> by_entity_;
    std::vector<std::vector<std::uint32_t>> by_relation_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> by_pattern_;
};

}  // namespace hypercqa::khg
