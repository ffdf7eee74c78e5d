#include "baseline/hlmpnn.hpp"

#include <algorithm>
#include <cmath>

#include "tensor/checkpoint.hpp"

namespace hypercqa::baseline {

using query::Arg;
using query::QueryNode;
using tensor::Tensor;

EmbeddingFamily family_from_name(const std::string& name) {
    if (name == "m-distmult") return EmbeddingFamily::MDistMult;
    if (name == "m-cp") return EmbeddingFamily::MCp;
    if (name == "hype") return EmbeddingFamily::HypE;
    if (name == "hsimple") return EmbeddingFamily::HSimplE;
    throw Error(ErrorKind::ConfigError, "unknown embedding family '" + name + "'");
}

std::string family_name(EmbeddingFamily family) {
    switch (family) {
        case EmbeddingFamily::MDistMult: return "m-distmult";
        case EmbeddingFamily::MCp: return "m-cp";
        case EmbeddingFamily::HypE: return "hype";
        case EmbeddingFamily::HSimplE: return "hsimple";
    }
    return "m-distmult";
}

KhgEmbedding::KhgEmbedding(std::size_t num_entities, std::size_t num_relations,
                           BaselineConfig config)
    : num_entities_(num_entities), num_relations_(num_relations), config_(config) {
    if (num_entities_ == 0 || num_relations_ == 0) {
        throw Error(ErrorKind::ConfigError, "embedding needs a non-empty vocabulary");
    }
    if (config_.shift_divisor == 0) throw Error(ErrorKind::ConfigError, "shift divisor");
    Rng rng(derive_seed({config_.seed, 0x626173656cULL}));
    params_.create("entity_table", {num_entities_, config_.dim}, 0.3, rng);
    params_.create("relation_table", {num_relations_, config_.dim}, 0.3, rng);
}

std::vector<double> KhgEmbedding::circular_shift(const std::vector<double>& v,
                                                 std::size_t amount) {
    if (v.empty()) throw Error(ErrorKind::EmptySequence, "shift of empty vector");
    const std::size_t n = v.size();
    const std::size_t s = amount % n;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = v[(i + s) % n];
    return out;
}

std::vector<double> KhgEmbedding::g_fold(const std::vector<std::vector<double>>& vectors) {
    if (vectors.empty()) throw Error(ErrorKind::EmptySequence, "fold of empty sequence");
    std::vector<double> acc = vectors.back();
    for (std::size_t i = vectors.size() - 1; i-- > 0;) {
        if (vectors[i].size() != acc.size()) throw Error(ErrorKind::ShapeMismatch, "fold widths");
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] = vectors[i][j] * acc[j];
    }
    return acc;
}

std::vector<double> KhgEmbedding::rho(
    const std::vector<std::pair<std::vector<double>, std::uint32_t>>& neighbors,
    const std::vector<double>& relation, std::uint32_t target, bool negated) const {
    if (negated) {
        throw Error(ErrorKind::NegationUnsupported, "no closed-form negated message");
    }
    std::vector<bool> seen;
    auto mark = [&](std::uint32_t pos) {
        if (pos >= seen.size()) seen.resize(pos + 1, false);
        if (seen[pos]) throw Error(ErrorKind::PositionClash, "position " + std::to_string(pos));
        seen[pos] = true;
    };
    mark(target);
    std::vector<std::vector<double>> folded;
    folded.reserve(neighbors.size());
    for (const auto& [vec, pos] : neighbors) {
        mark(pos);
        if (config_.family == EmbeddingFamily::HSimplE) {
            folded.push_back(circular_shift(vec, pos * (config_.dim / config_.shift_divisor)));
        } else {
            folded.push_back(vec);
        }
    }
    std::vector<double> message =
        folded.empty() ? std::vector<double>(relation.size(), 1.0) : g_fold(folded);
    if (message.size() != relation.size()) throw Error(ErrorKind::ShapeMismatch, "relation width");
    for (std::size_t j = 0; j < message.size(); ++j) message[j] *= relation[j];
    return message;
}

std::vector<double> KhgEmbedding::entity_vector(khg::EntityId id) const {
    if (id >= num_entities_) throw Error(ErrorKind::UnknownEntity, std::to_string(id));
    const Tensor& table = params_.get("entity_table");
    std::vector<double> out(config_.dim);
    for (std::size_t j = 0; j < config_.dim; ++j) out[j] = table.at(id, j);
    return out;
}

std::vector<double> KhgEmbedding::relation_vector(khg::RelationId id) const {
    if (id >= num_relations_) throw Error(ErrorKind::UnknownRelation, std::to_string(id));
    const Tensor& table = params_.get("relation_table");
    std::vector<double> out(config_.dim);
    for (std::size_t j = 0; j < config_.dim; ++j) out[j] = table.at(id, j);
    return out;
}

std::vector<double> KhgEmbedding::pretrain(const khg::KnowledgeHypergraph& graph) {
    if (graph.num_entities() != num_entities_ || graph.num_relations() != num_relations_) {
        throw Error(ErrorKind::ConfigError, "graph vocabulary does not match the embedding");
    }
    // one sample per (edge, target position)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> samples;
    for (std::uint32_t e = 0; e < graph.num_edges(); ++e) {
        for (std::uint32_t pos = 0; pos < graph.edges()[e].entities.size(); ++pos) {
            samples.emplace_back(e, pos);
        }
    }
    Rng rng(derive_seed({config_.seed, 0x70726574ULL}));
    tensor::AdamState adam;
    adam.lr = config_.lr;

    std::vector<double> curve;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
        rng.shuffle(samples);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < samples.size(); start += config_.batch_size) {
            const std::size_t stop = std::min(samples.size(), start + config_.batch_size);
            tensor::Tape tape(&params_);
            Tensor entities = tape.param("entity_table");
            Tensor relations = tape.param("relation_table");
            std::vector<Tensor> losses;
            for (std::size_t s = start; s < stop; ++s) {
                const auto [edge_idx, target] = samples[s];
                const khg::Hyperedge& edge = graph.edges()[edge_idx];
                Tensor message = tape.gather_rows(relations, {edge.relation});
                for (std::uint32_t pos = 0; pos < edge.entities.size(); ++pos) {
                    if (pos == target) continue;
                    Tensor row = tape.gather_rows(entities, {edge.entities[pos]});
                    if (config_.family == EmbeddingFamily::HSimplE) {
                        row = tape.roll_cols(row, pos * (config_.dim / config_.shift_divisor));
                    }
                    message = tape.mul(message, row);
                }
                Tensor logits = tape.matmul_nt(message, entities);
                losses.push_back(tape.cross_entropy_logits(logits, edge.entities[target]));
            }
            Tensor loss = tape.mean(tape.concat_rows(losses));
            tensor::GradMap grads = tape.backward(loss);
            tensor::adam_step(params_, grads, adam);
            loss_sum += loss.value() * static_cast<double>(stop - start);
        }
        curve.push_back(loss_sum / static_cast<double>(samples.size()));
    }
    return curve;
}

std::vector<double> KhgEmbedding::scores_from_estimate(const std::vector<double>& est) const {
    const Tensor& table = params_.get("entity_table");
    std::vector<double> scores(num_entities_, 0.0);
    for (std::size_t e = 0; e < num_entities_; ++e) {
        double acc = 0.0;
        for (std::size_t j = 0; j < config_.dim; ++j) acc += est[j] * table.at(e, j);
        scores[e] = acc;
    }
    return scores;
}

std::vector<double> KhgEmbedding::pooled_entity(const std::vector<double>& scores) const {
    // softmax-weighted blend of entity vectors; stands in for a single
    // entity embedding when a logical node feeds a projection slot
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    std::vector<double> weights(scores.size());
    double denom = 0.0;
    for (std::size_t e = 0; e < scores.size(); ++e) {
        weights[e] = std::exp(scores[e] - mx);
        denom += weights[e];
    }
    const Tensor& table = params_.get("entity_table");
    std::vector<double> pooled(config_.dim, 0.0);
    for (std::size_t e = 0; e < scores.size(); ++e) {
        const double w = weights[e] / denom;
        for (std::size_t j = 0; j < config_.dim; ++j) pooled[j] += w * table.at(e, j);
    }
    return pooled;
}

std::vector<double> KhgEmbedding::estimate(const QueryNode& node) const {
    if (node.negated) throw Error(ErrorKind::NegationUnsupported, "negated projection");
    std::vector<std::pair<std::vector<double>, std::uint32_t>> neighbors;
    std::uint32_t target = 0;
    for (std::uint32_t pos = 0; pos < node.args.size(); ++pos) {
        const Arg& arg = node.args[pos];
        switch (arg.kind) {
            case Arg::Kind::Target: target = pos; break;
            case Arg::Kind::Const: neighbors.emplace_back(entity_vector(arg.entity), pos); break;
            case Arg::Kind::Sub: {
                const QueryNode& child = node.children[arg.child];
                if (child.kind == QueryNode::Kind::Projection) {
                    neighbors.emplace_back(estimate(child), pos);
                } else {
                    neighbors.emplace_back(pooled_entity(scores_of(child)), pos);
                }
                break;
            }
        }
    }
    return rho(neighbors, relation_vector(node.relation), target, node.negated);
}

std::vector<double> KhgEmbedding::scores_of(const QueryNode& node) const {
    switch (node.kind) {
        case QueryNode::Kind::Projection: return scores_from_estimate(estimate(node));
        case QueryNode::Kind::Intersection:
        case QueryNode::Kind::Union: {
            std::vector<double> combined;
            for (const QueryNode& child : node.children) {
                std::vector<double> child_scores = scores_of(child);
                if (combined.empty()) {
                    combined = std::move(child_scores);
                    continue;
                }
                for (std::size_t e = 0; e < combined.size(); ++e) {
                    combined[e] = node.kind == QueryNode::Kind::Intersection
                                      ? std::min(combined[e], child_scores[e])
                                      : std::max(combined[e], child_scores[e]);
                }
            }
            return combined;
        }
    }
    throw Error(ErrorKind::InvalidQuery, "unreachable node kind");
}

std::vector<double> KhgEmbedding::score_query(const QueryNode& tree) const {
    return scores_of(tree);
}

void KhgEmbedding::save(const std::string& path) const {
    std::map<std::string, std::string> meta;
    meta["family"] = family_name(config_.family);
    meta["dim"] = std::to_string(config_.dim);
    meta["epochs"] = std::to_string(config_.epochs);
    meta["batch_size"] = std::to_string(config_.batch_size);
    meta["lr"] = std::to_string(config_.lr);
    meta["seed"] = std::to_string(config_.seed);
    meta["shift_divisor"] = std::to_string(config_.shift_divisor);
    meta["num_entities"] = std::to_string(num_entities_);
    meta["num_relations"] = std::to_string(num_relations_);
    tensor::save_checkpoint(params_, path, meta);
}

KhgEmbedding KhgEmbedding::load(const std::string& path) {
    tensor::ParamStore loaded = tensor::load_checkpoint(path);
    auto meta = tensor::load_manifest_extra(path);
    if (meta.empty()) throw Error(ErrorKind::ParseError, "missing manifest for " + path);
    BaselineConfig config;
    config.family = family_from_name(meta.at("family"));
    config.dim = std::stoul(meta.at("dim"));
    config.epochs = std::stoul(meta.at("epochs"));
    config.batch_size = std::stoul(meta.at("batch_size"));
    config.lr = std::stod(meta.at("lr"));
    config.seed = std::stoull(meta.at("seed"));
    config.shift_divisor = std::stoul(meta.at("shift_divisor"));
    KhgEmbedding embedding(std::stoul(meta.at("num_entities")), std::stoul(meta.at("num_relations")),
                           config);
    for (const char* name : {"entity_table", "relation_table"}) {
        Tensor& dst = embedding.params_.get(name);
        const Tensor& src = loaded.get(name);
        if (!dst.same_shape(src)) throw Error(ErrorKind::ParseError, "checkpoint shape mismatch");
        *dst.data = *src.data;
    }
    return embedding;
}

}  // namespace hypercqa::baseline
