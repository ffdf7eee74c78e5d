#pragma once
// Operator-tree representation of EFO-1 queries: projection nodes answer one
// atomic n-ary formula, intersection/union combine child answer sets, and
// negation is a flag on projections (it never stands alone). Exactly one
// free variable exists; a Sub argument denotes the existential variable
// carrying its child's answers and Target marks a node's output slot.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "khg/graph.hpp"

namespace hypercqa::query {

using khg::EntityId;
using khg::KnowledgeHypergraph;
using khg::RelationId;

struct QueryNode;

struct Arg {
    enum class Kind { Const, Sub, Target };

    Kind kind = Kind::Const;
    EntityId entity = 0;     // Const only
    std::size_t child = 0;   // Sub only: index into the owning node's children

    static Arg constant(EntityId entity) { return {Kind::Const, entity, 0}; }
    static Arg sub(std::size_t child) { return {Kind::Sub, 0, child}; }
    static Arg target() { return {Kind::Target, 0, 0}; }

    bool operator==(const Arg& other) const = default;
};

struct QueryNode {
    enum class Kind { Projection, Intersection, Union };

    Kind kind = Kind::Projection;

    // Projection fields; args has length arity(relation) and holds exactly
    // one Target.
    RelationId relation = 0;
    bool negated = false;
    std::vector<Arg> args;

    // For projections: subtrees referenced by Sub args. For intersection and
    // union: the combined operands (>= 2).
    std::vector<QueryNode> children;

    bool operator==(const QueryNode& other) const = default;
};

// Count of projection + intersection + union nodes (negation counts inside
// its projection).
std::size_t node_count(const QueryNode& tree);

// Structural checks: exactly one Target per projection, Sub indices valid,
// intersections keep at least one positive child, negated projections appear
// only directly under an intersection, >= 2 children per logical node. With
// a graph, also checks arg counts against relation arities. Returns
// human-readable violations; empty means ok.
std::vector<std::string> validate(const QueryNode& tree, const KnowledgeHypergraph* graph = nullptr);

// -------------------------------------------------------------------------
// Abstract query shapes (ungrounded).

struct QueryStructure {
    enum class Op { Projection, Intersection, Union };

    Op op = Op::Projection;
    bool negated = false;               // projections only
    std::vector<QueryStructure> children;  // projection: 0 or 1 feeding subtree

    bool operator==(const QueryStructure& other) const = default;
};

// The 14 benchmark type names, lowercase, in report column order.
const std::vector<std::string>& query_type_names();

bool is_negation_type(const std::string& name);

// Shape for one of the 14 names (case-insensitive). Throws UnknownQueryType.
QueryStructure query_template(const std::string& name);

std::size_t structure_node_count(const QueryStructure& structure);

// -------------------------------------------------------------------------
// Grounded instances and their JSON-lines serialization.

struct QueryInstance {
    std::string type;  // one of the 14 names
    QueryNode tree;
    std::set<EntityId> easy_answers;
    std::set<EntityId> hard_answers;

    bool operator==(const QueryInstance& other) const = default;
};

// One canonical JSON object per instance, no trailing newline:
// {"type":...,"tree":...,"easy":[...],"hard":[...]}
std::string serialize(const QueryInstance& instance);
std::string serialize(const QueryNode& tree);

QueryInstance deserialize(const std::string& line);
QueryNode deserialize_tree(const std::string& text);

// Reads a .jsonl query file; `line` in errors is 1-based.
std::vector<QueryInstance> read_query_file(const std::string& path);
void write_query_file(const std::string& path, const std::vector<QueryInstance>& instances);

}  // namespace hypercqa::query
