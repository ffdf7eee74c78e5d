#pragma once
// Shared fixtures: small hand-written graphs and a deterministic random
// hypergraph generator (arities 2-4 by default).

#include <sstream>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "khg/graph.hpp"

namespace testutil {

inline hypercqa::khg::KnowledgeHypergraph graph_of(const std::string& facts) {
    return hypercqa::khg::KnowledgeHypergraph::parse_facts(facts);
}

struct RandomGraphSpec {
    std::size_t num_entities = 30;
    std::size_t num_relations = 5;
    std::size_t num_edges = 60;
    std::uint32_t min_arity = 2;
    std::uint32_t max_arity = 4;
};

// Relation arities are fixed per relation id; edge slots draw uniformly, so
// duplicate lines (collapsed by the parser) are possible by design.
inline std::string random_facts(const RandomGraphSpec& spec, std::uint64_t seed) {
    hypercqa::Rng rng(hypercqa::derive_seed({seed, 0x67656eULL}));
    std::vector<std::uint32_t> arity(spec.num_relations);
    for (auto& a : arity) {
        a = spec.min_arity +
            static_cast<std::uint32_t>(rng.uniform_below(spec.max_arity - spec.min_arity + 1));
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < spec.num_edges; ++i) {
        const std::size_t r = static_cast<std::size_t>(rng.uniform_below(spec.num_relations));
        out << 'r' << r;
        for (std::uint32_t k = 0; k < arity[r]; ++k) {
            out << "\te" << rng.uniform_below(spec.num_entities);
        }
        out << '\n';
    }
    return out.str();
}

inline hypercqa::khg::KnowledgeHypergraph random_graph(const RandomGraphSpec& spec,
                                                       std::uint64_t seed) {
    return graph_of(random_facts(spec, seed));
}

}  // namespace testutil
