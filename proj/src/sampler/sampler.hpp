#pragma once
// Grounds abstract query shapes against a hypergraph and labels the results
// with easy/hard answer sets. Grounding walks the shape from the root
// answer: projections sample an incident edge (the answer's slot becomes the
// target), one remaining slot feeds the child subtree when there is one, and
// everything else freezes to constants. Negated branches are grounded
// positively from a decoy entity and kept only if the enclosing intersection
// still contains the root.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "khg/splits.hpp"
#include "query/algebra.hpp"

namespace hypercqa::sampler {

struct SampleSpec {
    std::uint64_t seed = 0;
    std::uint32_t retry_budget = 100;
    // split name ("train"/"valid"/"test") -> type name -> target count
    std::map<std::string, std::map<std::string, std::uint64_t>> counts;

    // Benchmark-scale sizes: train 60k for 1p and 20k otherwise, 10k per
    // type for valid and test.
    static SampleSpec benchmark_defaults(std::uint64_t seed);

    // Same count for every type within a split.
    static SampleSpec uniform(std::uint64_t train, std::uint64_t valid, std::uint64_t test,
                              std::uint64_t seed);
};

struct GroundedQuery {
    query::QueryNode tree;
    khg::EntityId root;
};

// Per-projection record of the edge a grounding came from.
struct GroundStep {
    std::uint32_t edge;
    std::uint32_t target_position;
    khg::EntityId answer;
};
using GroundTrace = std::vector<GroundStep>;

// Grounds one shape; the returned root is an answer of the returned tree on
// `graph`. Retries internally and throws SamplingFailed when the budget is
// exhausted (isolated root, too few distinct edges for an intersection, ...).
GroundedQuery ground(const query::QueryStructure& structure, const khg::KnowledgeHypergraph& graph,
                     Rng& rng, std::uint32_t retry_budget = 100, GroundTrace* trace = nullptr);

// easy = oracle answers on `small`, hard = answers on `big` minus easy. When
// small and big are the same graph (the train split has no smaller one),
// easy stays empty and every answer lands in hard.
query::QueryInstance label(const std::string& type, query::QueryNode tree,
                           const khg::KnowledgeHypergraph& small,
                           const khg::KnowledgeHypergraph& big);

// Samples `count` labeled instances deterministically; instance i draws from
// an RNG stream derived from (seed, split, type, i), so ordering never
// depends on scheduling. valid/test instances are re-drawn until hard
// answers are non-empty; throws SamplingExhausted when an instance cannot be
// produced within the budget.
std::vector<query::QueryInstance> sample_split(const std::string& split, const std::string& type,
                                               std::uint64_t count, const khg::GraphSplits& splits,
                                               const SampleSpec& spec);

// Writes <split>_<type>.jsonl files plus stats.tsv into out_dir; types with
// count zero emit no file. Returns the paths written.
std::vector<std::string> sample_dataset(const SampleSpec& spec, const khg::GraphSplits& splits,
                                        const std::string& out_dir);

}  // namespace hypercqa::sampler
