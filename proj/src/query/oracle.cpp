#include "query/oracle.hpp"

#include <algorithm>
#include <unordered_map>

namespace hypercqa::query {

namespace {

struct Evaluator {
    const KnowledgeHypergraph& graph;
    // Repeated subtrees evaluate once per call; keyed structurally.
    std::unordered_map<std::string, AnswerSet> memo;

    AnswerSet eval(const QueryNode& node) {
        std::string key;
        if (!node.children.empty()) {
            key = serialize(node);
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
        }
        AnswerSet result;
        switch (node.kind) {
            case QueryNode::Kind::Projection: result = eval_projection(node); break;
            case QueryNode::Kind::Intersection: result = eval_intersection(node); break;
            case QueryNode::Kind::Union: result = eval_union(node); break;
        }
        if (!key.empty()) memo.emplace(std::move(key), result);
        return result;
    }

    AnswerSet eval_projection(const QueryNode& node) {
        std::uint32_t target = 0;
        std::vector<std::pair<std::uint32_t, std::size_t>> sub_slots;  // (position, child)
        std::vector<std::pair<std::uint32_t, EntityId>> bindings;
        for (std::uint32_t pos = 0; pos < node.args.size(); ++pos) {
            const Arg& arg = node.args[pos];
            switch (arg.kind) {
                case Arg::Kind::Target: target = pos; break;
                case Arg::Kind::Const: bindings.emplace_back(pos, arg.entity); break;
                case Arg::Kind::Sub: sub_slots.emplace_back(pos, arg.child); break;
            }
        }

        std::vector<AnswerSet> sub_answers;
        sub_answers.reserve(sub_slots.size());
        for (const auto& [pos, child] : sub_slots) sub_answers.push_back(eval(node.children[child]));

        AnswerSet result;
        // Enumerate the cross product of child answer sets (tree queries keep
        // these independent existentials).
        std::vector<AnswerSet::const_iterator> cursor;
        for (const AnswerSet& s : sub_answers) {
            if (s.empty()) return {};
            cursor.push_back(s.begin());
        }
        while (true) {
            auto full = bindings;
            for (std::size_t i = 0; i < sub_slots.size(); ++i) {
                full.emplace_back(sub_slots[i].first, *cursor[i]);
            }
            for (EntityId e : graph.match_pattern(node.relation, full, target)) result.insert(e);

            std::size_t level = sub_slots.size();
            while (level > 0) {
                --level;
                if (++cursor[level] != sub_answers[level].end()) break;
                cursor[level] = sub_answers[level].begin();
                if (level == 0) return result;
            }
            if (sub_slots.empty()) break;
        }
        return result;
    }

    AnswerSet eval_intersection(const QueryNode& node) {
        AnswerSet result;
        bool first = true;
        std::vector<const QueryNode*> negated;
        for (const QueryNode& child : node.children) {
            if (child.kind == QueryNode::Kind::Projection && child.negated) {
                negated.push_back(&child);
                continue;
            }
            AnswerSet child_set = eval(child);
            if (first) {
                result = std::move(child_set);
                first = false;
            } else {
                AnswerSet merged;
                std::set_intersection(result.begin(), result.end(), child_set.begin(),
                                      child_set.end(), std::inserter(merged, merged.begin()));
                result = std::move(merged);
            }
            if (result.empty()) return result;
        }
        for (const QueryNode* child : negated) {
            AnswerSet excluded = eval(*child);
            AnswerSet kept;
            std::set_difference(result.begin(), result.end(), excluded.begin(), excluded.end(),
                                std::inserter(kept, kept.begin()));
            result = std::move(kept);
            if (result.empty()) return result;
        }
        return result;
    }

    AnswerSet eval_union(const QueryNode& node) {
        AnswerSet result;
        for (const QueryNode& child : node.children) {
            AnswerSet child_set = eval(child);
            result.insert(child_set.begin(), child_set.end());
        }
        return result;
    }
};

}  // namespace

AnswerSet answers(const QueryNode& tree, const KnowledgeHypergraph& graph) {
    Evaluator evaluator{graph, {}};
    return evaluator.eval(tree);
}

AnswerSet answers_dnf(const std::vector<QueryNode>& trees, const KnowledgeHypergraph& graph) {
    AnswerSet result;
    for (const QueryNode& tree : trees) {
        AnswerSet part = answers(tree, graph);
        result.insert(part.begin(), part.end());
    }
    return result;
}

}  // namespace hypercqa::query
