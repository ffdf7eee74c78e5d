#pragma once
// Filtered mean-reciprocal-rank evaluation. Entities are ranked with the
// easy answers excluded; the hard answers' positions in that ranking give
// each query's MRR, averaged per type and then over the EPFO types (AP) and
// the negation types (AN).

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "model/lkhgt.hpp"
#include "query/algebra.hpp"

namespace hypercqa::evalh {

// Mean reciprocal rank of the hard answers within an already-filtered
// ranking. Throws EmptyHardSet.
double mrr_query(const std::vector<khg::EntityId>& ranked, const std::set<khg::EntityId>& hard);

// Produces the full entity ordering for a query, best first, skipping
// `exclude`.
using Ranker = std::function<std::vector<khg::EntityId>(const query::QueryNode& tree,
                                                        const std::set<khg::EntityId>& exclude)>;

struct EvalConfig {
    // Also discount other hard answers when ranking each hard answer (the
    // stricter filtering convention); default keeps only easy answers
    // excluded.
    bool filter_hard = false;
};

struct TypeResult {
    std::string type;
    double mrr = 0.0;
    std::size_t count = 0;
};

struct EvalReport {
    std::vector<TypeResult> per_type;  // present types, report column order
    double ap = 0.0;                   // mean over present EPFO types
    double an = 0.0;                   // mean over present negation types
    std::size_t total_instances = 0;
    std::map<std::string, std::string> config_echo;

    double mrr_of(const std::string& type) const;  // nan when absent
    std::string to_tsv() const;
    std::string to_json() const;
};

EvalReport evaluate(const Ranker& ranker,
                    const std::map<std::string, std::vector<query::QueryInstance>>& by_type,
                    const EvalConfig& config = {},
                    std::map<std::string, std::string> config_echo = {});

// ---------------------------------------------------------------------------
// Ablation runner: trains and evaluates the model variants on identical data
// and seeds, one row per (variant, seed).

struct AblationRow {
    std::string variant;
    std::uint64_t seed;
    EvalReport report;
};

struct AblationReport {
    std::vector<AblationRow> rows;
    std::string dataset_hash;

    std::string to_tsv() const;
    // Mean MRR of `variant` over the given types across all its seeds.
    double mean_over(const std::string& variant, const std::vector<std::string>& types) const;
};

const std::vector<std::string>& ablation_variants();  // full, fuzzy, no-abs-pe, var-cardinality

AblationReport ablate(const model::ModelConfig& base, std::size_t num_entities,
                      std::size_t num_relations,
                      const std::vector<query::QueryInstance>& train_set,
                      const std::map<std::string, std::vector<query::QueryInstance>>& eval_sets,
                      const std::vector<std::uint64_t>& seeds);

}  // namespace hypercqa::evalh
