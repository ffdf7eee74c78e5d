#pragma once

#include <cstdint>
#include <string>

#include "khg/graph.hpp"

namespace hypercqa::khg {

// Train/valid/test graphs over one shared vocabulary, with edge sets
// train ⊆ valid ⊆ test. The test graph carries every edge.
struct GraphSplits {
    KnowledgeHypergraph train;
    KnowledgeHypergraph valid;
    KnowledgeHypergraph test;

    // Shuffles the deduplicated edge list of `full` with `seed` and cuts it
    // at the given fractions; valid extends train, test extends valid.
    static GraphSplits make(const KnowledgeHypergraph& full, double train_frac, double valid_frac,
                            std::uint64_t seed);

    // Loads three fact files; the test file defines the vocabulary and must
    // contain every edge of the other two.
    static GraphSplits load(const std::string& train_path, const std::string& valid_path,
                            const std::string& test_path);

    // Verifies the subset chain; throws on violation.
    void check() const;
};

}  // namespace hypercqa::khg
