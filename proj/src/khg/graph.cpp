#include "khg/graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "common/hash.hpp"

namespace hypercqa::khg {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t end = line.find('\t', start);
        if (end == std::string_view::npos) end = line.size();
        if (end > start) fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

struct LineScanner {
    std::string_view text;
    std::size_t offset = 0;

    bool next(std::string_view& line) {
        if (offset >= text.size()) return false;
        std::size_t end = text.find('\n', offset);
        if (end == std::string_view::npos) end = text.size();
        line = text.substr(offset, end - offset);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        offset = end + 1;
        return true;
    }
};

}  // namespace

EntityId KnowledgeHypergraph::intern_entity(std::string_view name) {
    auto it = entity_ids_.find(std::string(name));
    if (it != entity_ids_.end()) return it->second;
    EntityId id = static_cast<EntityId>(entity_names_.size());
    entity_names_.emplace_back(name);
    entity_ids_.emplace(entity_names_.back(), id);
    by_entity_.emplace_back();
    return id;
}

RelationId KnowledgeHypergraph::intern_relation(std::string_view name, std::uint32_t arity) {
    auto it = relation_ids_.find(std::string(name));
    if (it != relation_ids_.end()) {
        RelationId id = it->second;
        if (arities_[id] != arity) {
            throw Error(ErrorKind::ArityMismatch,
                        "relation '" + std::string(name) + "' seen with arity " +
                            std::to_string(arities_[id]) + " and " + std::to_string(arity));
        }
        return id;
    }
    RelationId id = static_cast<RelationId>(relation_names_.size());
    relation_names_.emplace_back(name);
    relation_ids_.emplace(relation_names_.back(), id);
    arities_.push_back(arity);
    by_relation_.emplace_back();
    return id;
}

std::uint64_t KnowledgeHypergraph::pattern_key(RelationId relation, std::uint32_t position,
                                               EntityId entity) {
    // relation and position share the top 32 bits; arity stays far below 2^8
    return (static_cast<std::uint64_t>(relation) << 40) |
           (static_cast<std::uint64_t>(position) << 32) | entity;
}

bool KnowledgeHypergraph::has_edge(const Hyperedge& edge) const {
    if (edge.relation >= relation_names_.size() || edge.entities.empty()) return false;
    auto it = by_pattern_.find(pattern_key(edge.relation, 0, edge.entities[0]));
    if (it == by_pattern_.end()) return false;
    for (std::uint32_t idx : it->second) {
        if (edges_[idx] == edge) return true;
    }
    return false;
}

void KnowledgeHypergraph::add_edge_indexed(Hyperedge edge) {
    if (has_edge(edge)) return;  // duplicates collapse silently
    const std::uint32_t idx = static_cast<std::uint32_t>(edges_.size());
    for (std::uint32_t pos = 0; pos < edge.entities.size(); ++pos) {
        const EntityId entity = edge.entities[pos];
        by_entity_[entity].push_back({idx, pos});
        by_pattern_[pattern_key(edge.relation, pos, entity)].push_back(idx);
    }
    by_relation_[edge.relation].push_back(idx);
    edges_.push_back(std::move(edge));
}

KnowledgeHypergraph KnowledgeHypergraph::parse_facts(std::string_view text) {
    KnowledgeHypergraph graph;
    LineScanner scanner{text};
    std::string_view line;
    while (scanner.next(line)) {
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_tabs(line);
        if (fields.empty()) continue;
        if (fields.size() < 2) {
            throw Error(ErrorKind::ParseError,
                        "fact line needs a relation and at least one entity: '" + std::string(line) + "'");
        }
        RelationId relation =
            graph.intern_relation(fields[0], static_cast<std::uint32_t>(fields.size() - 1));
        Hyperedge edge{relation, {}};
        edge.entities.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            edge.entities.push_back(graph.intern_entity(fields[i]));
        }
        graph.add_edge_indexed(std::move(edge));
    }
    if (graph.edges_.empty()) throw Error(ErrorKind::EmptyInput, "no facts in input");
    return graph;
}

KnowledgeHypergraph KnowledgeHypergraph::parse_facts_with_vocab(
    std::string_view text, const KnowledgeHypergraph& vocab_source) {
    KnowledgeHypergraph graph;
    graph.entity_names_ = vocab_source.entity_names_;
    graph.relation_names_ = vocab_source.relation_names_;
    graph.arities_ = vocab_source.arities_;
    graph.entity_ids_ = vocab_source.entity_ids_;
    graph.relation_ids_ = vocab_source.relation_ids_;
    graph.by_entity_.resize(graph.entity_names_.size());
    graph.by_relation_.resize(graph.relation_names_.size());

    LineScanner scanner{text};
    std::string_view line;
    while (scanner.next(line)) {
        if (line.empty() || line.front() == '#') continue;
        auto fields = split_tabs(line);
        if (fields.empty()) continue;
        auto relation = graph.find_relation(fields[0]);
        if (!relation) throw Error(ErrorKind::UnknownRelation, std::string(fields[0]));
        if (fields.size() - 1 != graph.arities_[*relation]) {
            throw Error(ErrorKind::ArityMismatch, "relation '" + std::string(fields[0]) + "'");
        }
        Hyperedge edge{*relation, {}};
        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto entity = graph.find_entity(fields[i]);
            if (!entity) throw Error(ErrorKind::UnknownEntity, std::string(fields[i]));
            edge.entities.push_back(*entity);
        }
        graph.add_edge_indexed(std::move(edge));
    }
    if (graph.edges_.empty()) throw Error(ErrorKind::EmptyInput, "no facts in input");
    return graph;
}

KnowledgeHypergraph KnowledgeHypergraph::from_edges(const KnowledgeHypergraph& vocab_source,
                                                    const std::vector<Hyperedge>& edges) {
    KnowledgeHypergraph graph;
    graph.entity_names_ = vocab_source.entity_names_;
    graph.relation_names_ = vocab_source.relation_names_;
    graph.arities_ = vocab_source.arities_;
    graph.entity_ids_ = vocab_source.entity_ids_;
    graph.relation_ids_ = vocab_source.relation_ids_;
    graph.by_entity_.resize(graph.entity_names_.size());
    graph.by_relation_.resize(graph.relation_names_.size());
    for (const Hyperedge& edge : edges) {
        if (edge.relation >= graph.relation_names_.size()) {
            throw Error(ErrorKind::UnknownRelation, std::to_string(edge.relation));
        }
        if (edge.entities.size() != graph.arities_[edge.relation]) {
            throw Error(ErrorKind::ArityMismatch, graph.relation_name(edge.relation));
        }
        graph.add_edge_indexed(edge);
    }
    if (graph.edges_.empty()) throw Error(ErrorKind::EmptyInput, "no edges");
    return graph;
}

std::optional<EntityId> KnowledgeHypergraph::find_entity(std::string_view name) const {
    auto it = entity_ids_.find(std::string(name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> KnowledgeHypergraph::find_relation(std::string_view name) const {
    auto it = relation_ids_.find(std::string(name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

const std::vector<EdgeSlot>& KnowledgeHypergraph::edges_containing(EntityId entity) const {
    if (entity >= entity_names_.size()) {
        throw Error(ErrorKind::UnknownEntity, std::to_string(entity));
    }
    return by_entity_[entity];
}

std::vector<EntityId> KnowledgeHypergraph::match_pattern(
    RelationId relation, const std::vector<std::pair<std::uint32_t, EntityId>>& bindings,
    std::uint32_t target) const {
    if (relation >= relation_names_.size()) {
        throw Error(ErrorKind::UnknownRelation, std::to_string(relation));
    }
    const std::uint32_t k = arities_[relation];
    if (target >= k) {
        throw Error(ErrorKind::PositionOutOfRange, "target " + std::to_string(target));
    }
    for (const auto& [pos, entity] : bindings) {
        if (pos >= k) throw Error(ErrorKind::PositionOutOfRange, "binding " + std::to_string(pos));
    }

    // Candidate edges: smallest posting list among the bindings, or all edges
    // of the relation when nothing is bound.
    const std::vector<std::uint32_t>* candidates = &by_relation_[relation];
    for (const auto& [pos, entity] : bindings) {
        if (pos == target) throw Error(ErrorKind::PositionOutOfRange, "target position is bound");
        auto it = by_pattern_.find(pattern_key(relation, pos, entity));
        if (it == by_pattern_.end()) return {};
        if (it->second.size() < candidates->size()) candidates = &it->second;
    }

    std::vector<EntityId> out;
    std::vector<bool> seen(entity_names_.size(), false);
    for (std::uint32_t idx : *candidates) {
        const Hyperedge& edge = edges_[idx];
        bool ok = true;
        for (const auto& [pos, entity] : bindings) {
            if (edge.entities[pos] != entity) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        EntityId value = edge.entities[target];
        if (!seen[value]) {
            seen[value] = true;
            out.push_back(value);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string KnowledgeHypergraph::serialize() const {
    std::ostringstream out;
    for (const Hyperedge& edge : edges_) {
        out << relation_names_[edge.relation];
        for (EntityId entity : edge.entities) out << '\t' << entity_names_[entity];
        out << '\n';
    }
    return out.str();
}

std::string KnowledgeHypergraph::stats_tsv() const {
    std::map<std::uint32_t, std::size_t> histogram;
    for (const Hyperedge& edge : edges_) histogram[static_cast<std::uint32_t>(edge.entities.size())]++;
    std::ostringstream out;
    out << "entities\t" << num_entities() << '\n';
    out << "relations\t" << num_relations() << '\n';
    out << "edges\t" << num_edges() << '\n';
    for (const auto& [arity, count] : histogram) {
        out << "arity_" << arity << "\t" << count << '\n';
    }
    return out.str();
}

std::uint64_t KnowledgeHypergraph::vocab_hash() const {
    std::string blob;
    for (const std::string& name : entity_names_) {
        blob += name;
        blob += '\x1f';
    }
    blob += '\x1e';
    for (std::size_t i = 0; i < relation_names_.size(); ++i) {
        blob += relation_names_[i];
        blob += ':';
        blob += std::to_string(arities_[i]);
        blob += '\x1f';
    }
    return fnv1a64(blob);
}

}  // namespace hypercqa::khg
