#pragma once
// Exact bottom-up evaluation of operator trees: the ground truth used for
// labeling sampled queries and for regression-testing model outputs.

#include <set>

#include "query/algebra.hpp"

namespace hypercqa::query {

using AnswerSet = std::set<EntityId>;

// Projection: union of index matches over every binding of Sub slots drawn
// from child answer sets; union: set union; intersection: positive children
// intersected, then each negated child's (positively evaluated) set removed.
AnswerSet answers(const QueryNode& tree, const KnowledgeHypergraph& graph);

// DNF: union over the conjuncts.
AnswerSet answers_dnf(const std::vector<QueryNode>& trees, const KnowledgeHypergraph& graph);

}  // namespace hypercqa::query
