#pragma once
// Closed-form single-pass message baseline over pretrained hypergraph
// embeddings. A projection node's answer estimate is the elementwise product
// of its known argument vectors and the relation vector (the n-ary
// generalization of the binary head-to-tail product message); intersections
// and unions combine the children's entity-score vectors with min/max.
// Negation has no closed form here and is rejected.

#include <cstdint>
#include <string>
#include <vector>

#include "khg/graph.hpp"
#include "query/algebra.hpp"
#include "tensor/tensor.hpp"

namespace hypercqa::baseline {

enum class EmbeddingFamily { MDistMult, MCp, HypE, HSimplE };

EmbeddingFamily family_from_name(const std::string& name);
std::string family_name(EmbeddingFamily family);

struct BaselineConfig {
    EmbeddingFamily family = EmbeddingFamily::MDistMult;
    std::size_t dim = 64;
    std::size_t epochs = 100;
    std::size_t batch_size = 256;
    double lr = 1e-2;
    std::uint64_t seed = 0;
    std::size_t shift_divisor = 2;  // HSimplE alpha
};

class KhgEmbedding {
public:
    KhgEmbedding(std::size_t num_entities, std::size_t num_relations, BaselineConfig config);

    const BaselineConfig& config() const { return config_; }
    std::size_t num_entities() const { return num_entities_; }

    // Left circular rotation; bijective, and identity when amount is a
    // multiple of the length.
    static std::vector<double> circular_shift(const std::vector<double>& v, std::size_t amount);

    // Right fold of the elementwise product; the singleton folds to itself.
    static std::vector<double> g_fold(const std::vector<std::vector<double>>& vectors);

    // Message toward `target`: product of the neighbor vectors and the
    // relation. Positions must be distinct and exclude the target. HSimplE
    // rotates each neighbor by position * dim / alpha before folding.
    std::vector<double> rho(const std::vector<std::pair<std::vector<double>, std::uint32_t>>& neighbors,
                            const std::vector<double>& relation, std::uint32_t target,
                            bool negated) const;

    std::vector<double> entity_vector(khg::EntityId id) const;
    std::vector<double> relation_vector(khg::RelationId id) const;

    // 1P objective over every edge and every target position: cross-entropy
    // of message/entity inner products against the true filler. Returns the
    // per-epoch loss curve.
    std::vector<double> pretrain(const khg::KnowledgeHypergraph& graph);

    // Leaf-to-root closed-form scores over all entities. Negation-free trees
    // only (NegationUnsupported otherwise).
    std::vector<double> score_query(const query::QueryNode& tree) const;

    void save(const std::string& path) const;
    static KhgEmbedding load(const std::string& path);

private:
    std::vector<double> estimate(const query::QueryNode& node) const;  // projection -> dim vector
    std::vector<double> scores_of(const query::QueryNode& node) const;  // any node -> |E| scores
    std::vector<double> scores_from_estimate(const std::vector<double>& est) const;
    std::vector<double> pooled_entity(const std::vector<double>& scores) const;

    std::size_t num_entities_;
    std::size_t num_relations_;
    BaselineConfig config_;
    mutable tensor::ParamStore params_;  // entity_table, relation_table
};

}  // namespace hypercqa::baseline
