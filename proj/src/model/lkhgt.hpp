#pragma once
// Two-stage transformer for operator-tree query execution. A Projection
// Encoder answers one atomic hyperedge at a time ([negation] relation,
// arguments in hyperedge order) and reads out the hidden state at the
// target-variable token; a Logical Encoder combines child answer embeddings
// under an intersection/union token. Both stacks add a learned Type Aware
// Bias vector, indexed by (attending type, attended type), to the attention
// keys. Trees execute bottom-up, so one encoder run happens per operator
// node and gradients flow through child embeddings into every hop.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "query/algebra.hpp"
#include "tensor/tensor.hpp"

namespace hypercqa::model {

// The eight token roles: negation, relation, existential variable, entity,
// free variable, projection output, intersection, union.
enum class TokenType : std::uint8_t {
    Negation = 0,
    Relation = 1,
    Existential = 2,
    Entity = 3,
    Free = 4,
    ProjectionOut = 5,
    Intersection = 6,
    Union = 7,
};
inline constexpr std::size_t kNumTokenTypes = 8;
char token_type_letter(TokenType type);  // n r x e y p i u

enum class LogicalMode { TabEncoder, Fuzzy };
enum class CardinalityMode { Pairwise, Variadic };
enum class PositionalMode { Sinusoidal, None };
enum class ScoreMode { Cosine, DecoderLogits };

struct ModelConfig {
    std::size_t dim = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t ffn_multiplier = 4;
    double dropout = 0.0;
    LogicalMode logical_mode = LogicalMode::TabEncoder;
    CardinalityMode cardinality = CardinalityMode::Pairwise;
    PositionalMode positional = PositionalMode::Sinusoidal;
    ScoreMode score = ScoreMode::Cosine;
    bool tied_decoder = false;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::vector<std::string> exclude_types;  // query types withheld from training

    // Settings used at benchmark scale (not exercised by the test suite).
    static ModelConfig benchmark_scale();

    void check() const;  // dim % heads == 0, layers >= 1, ...
    std::map<std::string, std::string> describe() const;
};

// Query types withheld in the out-of-distribution split.
const std::vector<std::string>& ood_excluded_types();

struct ExecutionStats {
    std::size_t projection_invocations = 0;
    std::size_t logical_invocations = 0;
    std::size_t total() const { return projection_invocations + logical_invocations; }
};

struct EpochStats {
    std::size_t epoch;
    double loss;
    double sample_mrr;
};

// A token sequence ready for the projection encoder.
struct TokenSequence {
    tensor::Tensor matrix;  // tokens x dim, already type-projected (+ positions)
    std::vector<TokenType> types;
    std::vector<int> positions;  // hyperedge slot per token, -1 for none
    std::size_t target_index = 0;
};

class LkhgtModel {
public:
    LkhgtModel(std::size_t num_entities, std::size_t num_relations, ModelConfig config);

    const ModelConfig& config() const { return config_; }
    void set_score_mode(ScoreMode mode) { config_.score = mode; }
    std::size_t num_entities() const { return num_entities_; }
    std::size_t num_relations() const { return num_relations_; }
    tensor::ParamStore& params() { return params_; }
    const tensor::ParamStore& params() const { return params_; }

    // Token builder for one atom. child_embeddings maps argument slots to
    // the child answer embeddings (1 x dim, on the same tape); the target
    // token uses the free-variable placeholder when target_is_free.
    TokenSequence build_projection_tokens(tensor::Tape& tape, const query::QueryNode& atom,
                                          const std::map<std::size_t, tensor::Tensor>& child_embeddings,
                                          bool target_is_free) const;

    // One multi-head attention sublayer (type-projected Q/K/V, bias on keys,
    // output projection) applied to X directly, without norms or residuals.
    tensor::Tensor attention_sublayer(tensor::Tape& tape, const tensor::Tensor& x,
                                      const std::vector<TokenType>& types,
                                      const std::string& encoder, std::size_t layer) const;

    // Pre-norm residual stack (attention then feed-forward) plus final norm.
    tensor::Tensor encoder_stack(tensor::Tape& tape, tensor::Tensor x,
                                 const std::vector<TokenType>& types, const std::string& encoder,
                                 Rng* dropout_rng = nullptr) const;

    tensor::Tensor encode_projection(tensor::Tape& tape, const query::QueryNode& atom,
                                     const std::map<std::size_t, tensor::Tensor>& child_embeddings,
                                     bool target_is_free, Rng* dropout_rng = nullptr) const;

    // op is Intersection or Union; >= 2 children. Pairwise mode folds left
    // two at a time, variadic consumes all children in one run.
    tensor::Tensor encode_logical(tensor::Tape& tape, query::QueryNode::Kind op,
                                  const std::vector<tensor::Tensor>& children,
                                  Rng* dropout_rng = nullptr) const;

    // Product t-norm / t-conorm in a logistic squash space.
    tensor::Tensor fuzzy_logical(tensor::Tape& tape, query::QueryNode::Kind op,
                                 const std::vector<tensor::Tensor>& children) const;

    // Post-order execution; returns the root answer embedding (1 x dim) and
    // counts one encoder invocation per operator node.
    tensor::Tensor execute(tensor::Tape& tape, const query::QueryNode& tree,
                           ExecutionStats* stats = nullptr, Rng* dropout_rng = nullptr) const;

    // Two-layer MLP to entity logits (or entity-table inner products when
    // the decoder is tied).
    tensor::Tensor decode(tensor::Tape& tape, const tensor::Tensor& embedding) const;

    // All entities not in `exclude`, best first; ties break toward the
    // smaller id. Scores per config (cosine against the entity table, or
    // decoder logits).
    std::vector<khg::EntityId> rank(const query::QueryNode& tree,
                                    const std::set<khg::EntityId>& exclude) const;

    // Adam on softmax cross-entropy; one answer per instance per epoch is
    // drawn uniformly from its answer set. Honors config.exclude_types.
    std::vector<EpochStats> train(const std::vector<query::QueryInstance>& dataset);

    void save(const std::string& path, const std::map<std::string, std::string>& extra = {}) const;
    static LkhgtModel load(const std::string& path);

private:
    void init_params();
    tensor::Tensor input_block_weights(tensor::Tape& tape, const std::string& encoder) const;
    tensor::Tensor layer_norm_affine(tensor::Tape& tape, const tensor::Tensor& x,
                                     const std::string& name) const;
    tensor::Tensor positional_encoding(const std::vector<int>& positions) const;
    tensor::Tensor exec_node(tensor::Tape& tape, const query::QueryNode& node, bool outputs_free_var,
                             ExecutionStats* stats, Rng* dropout_rng) const;

    std::size_t num_entities_ = 0;
    std::size_t num_relations_ = 0;
    ModelConfig config_;
    mutable tensor::ParamStore params_;
};

}  // namespace hypercqa::model
