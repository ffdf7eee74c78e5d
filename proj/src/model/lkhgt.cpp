#include "model/lkhgt.hpp"

#include <algorithm>
#include <cmath>

#include "common/hash.hpp"
#include "tensor/checkpoint.hpp"

namespace hypercqa::model {

using query::Arg;
using query::QueryNode;
using tensor::Tensor;

char token_type_letter(TokenType type) {
    static constexpr char letters[kNumTokenTypes] = {'n', 'r', 'x', 'e', 'y', 'p', 'i', 'u'};
    return letters[static_cast<std::size_t>(type)];
}

namespace {

// Token roles each encoder accepts, in block order.
const std::vector<TokenType>& projection_types() {
    static const std::vector<TokenType> types = {TokenType::Negation, TokenType::Relation,
                                                 TokenType::Existential, TokenType::Entity,
                                                 TokenType::Free};
    return types;
}

const std::vector<TokenType>& logical_types() {
    static const std::vector<TokenType> types = {TokenType::Intersection, TokenType::Union,
                                                 TokenType::ProjectionOut};
    return types;
}

const std::vector<TokenType>& encoder_types(const std::string& encoder) {
    return encoder == "pe" ? projection_types() : logical_types();
}

std::vector<std::size_t> type_blocks(const std::vector<TokenType>& types,
                                     const std::vector<TokenType>& type_list) {
    std::vector<std::size_t> blocks;
    blocks.reserve(types.size());
    for (TokenType t : types) {
        auto it = std::find(type_list.begin(), type_list.end(), t);
        if (it == type_list.end()) {
            throw Error(ErrorKind::ShapeMismatch,
                        std::string("token type '") + token_type_letter(t) + "' not handled here");
        }
        blocks.push_back(static_cast<std::size_t>(it - type_list.begin()));
    }
    return blocks;
}

std::string layer_prefix(const std::string& encoder, std::size_t layer) {
    return encoder + ".l" + std::to_string(layer) + ".";
}

}  // namespace

ModelConfig ModelConfig::benchmark_scale() {
    ModelConfig config;
    config.dim = 400;
    config.heads = 8;
    config.epochs = 400;
    return config;
}

void ModelConfig::check() const {
    if (dim == 0 || heads == 0 || dim % heads != 0) {
        throw Error(ErrorKind::ConfigError, "dim must be a positive multiple of heads");
    }
    if (layers < 1) throw Error(ErrorKind::ConfigError, "layers must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw Error(ErrorKind::ConfigError, "dropout in [0,1)");
    if (batch_size == 0) throw Error(ErrorKind::ConfigError, "batch_size must be positive");
}

std::map<std::string, std::string> ModelConfig::describe() const {
    std::map<std::string, std::string> out;
    out["dim"] = std::to_string(dim);
    out["layers"] = std::to_string(layers);
    out["heads"] = std::to_string(heads);
    out["ffn_multiplier"] = std::to_string(ffn_multiplier);
    out["dropout"] = std::to_string(dropout);
    out["logical_mode"] = logical_mode == LogicalMode::TabEncoder ? "tab-encoder" : "fuzzy";
    out["cardinality"] = cardinality == CardinalityMode::Pairwise ? "pairwise" : "variadic";
    out["positional"] = positional == PositionalMode::Sinusoidal ? "sinusoidal" : "none";
    out["score"] = score == ScoreMode::Cosine ? "cosine" : "decoder-logits";
    out["tied_decoder"] = tied_decoder ? "1" : "0";
    out["epochs"] = std::to_string(epochs);
    out["batch_size"] = std::to_string(batch_size);
    out["lr"] = std::to_string(lr);
    out["seed"] = std::to_string(seed);
    std::string excluded;
    for (const std::string& t : exclude_types) {
        if (!excluded.empty()) excluded += ',';
        excluded += t;
    }
    out["exclude_types"] = excluded;
    return out;
}

const std::vector<std::string>& ood_excluded_types() {
    static const std::vector<std::string> types = {"3p", "3in", "3i", "inp"};
    return types;
}

LkhgtModel::LkhgtModel(std::size_t num_entities, std::size_t num_relations, ModelConfig config)
    : num_entities_(num_entities), num_relations_(num_relations), config_(std::move(config)) {
    config_.check();
    if (num_entities_ == 0 || num_relations_ == 0) {
        throw Error(ErrorKind::ConfigError, "model needs a non-empty vocabulary");
    }
    init_params();
}

void LkhgtModel::init_params() {
    const std::size_t d = config_.dim;
    Rng rng(derive_seed({config_.seed, 0x696e6974ULL}));
    const double std0 = 0.02;

    params_.create("entity_table", {num_entities_, d}, std0, rng);
    params_.create("relation_table", {num_relations_, d}, std0, rng);
    for (TokenType t : projection_types()) {
        params_.create(std::string("in.") + token_type_letter(t), {d, d}, std0, rng);
    }
    for (TokenType t : logical_types()) {
        params_.create(std::string("in.") + token_type_letter(t), {d, d}, std0, rng);
    }
    params_.create("tok.neg", {1, d}, std0, rng);
    params_.create("tok.tx", {1, d}, std0, rng);
    params_.create("tok.ty", {1, d}, std0, rng);
    params_.create("tok.i", {1, d}, std0, rng);
    params_.create("tok.u", {1, d}, std0, rng);

    for (const std::string encoder : {"pe", "le"}) {
        for (std::size_t layer = 0; layer < config_.layers; ++layer) {
            const std::string p = layer_prefix(encoder, layer);
            for (TokenType t : encoder_types(encoder)) {
                const char letter = token_type_letter(t);
                params_.create(p + "wq." + letter, {d, d}, std0, rng);
                params_.create(p + "wk." + letter, {d, d}, std0, rng);
                params_.create(p + "wv." + letter, {d, d}, std0, rng);
            }
            params_.create_zeros(p + "bias", {kNumTokenTypes * kNumTokenTypes, d});
            params_.create(p + "wo", {d, d}, std0, rng);
            params_.create_full(p + "ln1.g", {1, d}, 1.0);
            params_.create_zeros(p + "ln1.b", {1, d});
            params_.create_full(p + "ln2.g", {1, d}, 1.0);
            params_.create_zeros(p + "ln2.b", {1, d});
            const std::size_t f = d * config_.ffn_multiplier;
            params_.create(p + "ffn.w1", {d, f}, std0, rng);
            params_.create_zeros(p + "ffn.b1", {1, f});
            params_.create(p + "ffn.w2", {f, d}, std0, rng);
            params_.create_zeros(p + "ffn.b2", {1, d});
        }
        params_.create_full(std::string(encoder) + ".final.g", {1, d}, 1.0);
        params_.create_zeros(std::string(encoder) + ".final.b", {1, d});
    }

    if (!config_.tied_decoder) {
        params_.create("dec.w1", {d, d}, std0, rng);
        params_.create_zeros("dec.b1", {1, d});
        params_.create("dec.w2", {d, num_entities_}, std0, rng);
        params_.create_zeros("dec.b2", {1, num_entities_});
    }
}

Tensor LkhgtModel::input_block_weights(tensor::Tape& tape, const std::string& encoder) const {
    std::vector<Tensor> parts;
    for (TokenType t : encoder_types(encoder)) {
        parts.push_back(tape.param(std::string("in.") + token_type_letter(t)));
    }
    return tape.concat_rows(parts);
}

Tensor LkhgtModel::layer_norm_affine(tensor::Tape& tape, const Tensor& x,
                                     const std::string& name) const {
    Tensor normed = tape.layer_norm(x);
    return tape.add_rowvec(tape.mul_rowvec(normed, tape.param(name + ".g")), tape.param(name + ".b"));
}

Tensor LkhgtModel::positional_encoding(const std::vector<int>& positions) const {
    const std::size_t d = config_.dim;
    Tensor pe = Tensor::zeros({positions.size(), d});
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] < 0) continue;  // n and r tokens carry no position
        const double pos = static_cast<double>(positions[i]);
        for (std::size_t j = 0; j + 1 < d; j += 2) {
            const double rate = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(d));
            pe.at(i, j) = std::sin(pos * rate);
            pe.at(i, j + 1) = std::cos(pos * rate);
        }
    }
    return pe;
}

TokenSequence LkhgtModel::build_projection_tokens(
    tensor::Tape& tape, const QueryNode& atom,
    const std::map<std::size_t, Tensor>& child_embeddings, bool target_is_free) const {
    if (atom.kind != QueryNode::Kind::Projection) {
        throw Error(ErrorKind::InvalidQuery, "projection tokens need a projection node");
    }
    TokenSequence seq;
    std::vector<Tensor> raw;

    if (atom.negated) {
        raw.push_back(tape.param("tok.neg"));
        seq.types.push_back(TokenType::Negation);
        seq.positions.push_back(-1);
    }
    raw.push_back(tape.gather_rows(tape.param("relation_table"), {atom.relation}));
    seq.types.push_back(TokenType::Relation);
    seq.positions.push_back(-1);

    for (std::size_t pos = 0; pos < atom.args.size(); ++pos) {
        const Arg& arg = atom.args[pos];
        switch (arg.kind) {
            case Arg::Kind::Const:
                raw.push_back(tape.gather_rows(tape.param("entity_table"), {arg.entity}));
                seq.types.push_back(TokenType::Entity);
                break;
            case Arg::Kind::Sub: {
                auto it = child_embeddings.find(pos);
                if (it == child_embeddings.end()) {
                    throw Error(ErrorKind::MissingChildEmbedding,
                                "argument slot " + std::to_string(pos));
                }
                raw.push_back(it->second);
                seq.types.push_back(TokenType::Existential);
                break;
            }
            case Arg::Kind::Target:
                seq.target_index = raw.size();
                raw.push_back(tape.param(target_is_free ? "tok.ty" : "tok.tx"));
                seq.types.push_back(target_is_free ? TokenType::Free : TokenType::Existential);
                break;
        }
        seq.positions.push_back(static_cast<int>(pos));
    }

    Tensor x = tape.concat_rows(raw);
    x = tape.block_matmul(x, type_blocks(seq.types, projection_types()),
                          input_block_weights(tape, "pe"));
    if (config_.positional == PositionalMode::Sinusoidal) {
        x = tape.add(x, positional_encoding(seq.positions));
    }
    seq.matrix = x;
    return seq;
}

Tensor LkhgtModel::attention_sublayer(tensor::Tape& tape, const Tensor& x,
                                      const std::vector<TokenType>& types,
                                      const std::string& encoder, std::size_t layer) const {
    const std::size_t n = types.size();
    const std::size_t d = config_.dim;
    const std::size_t dh = d / config_.heads;
    if (x.rows() != n || x.cols() != d) throw Error(ErrorKind::ShapeMismatch, "attention input");

    const std::string p = layer_prefix(encoder, layer);
    const auto& type_list = encoder_types(encoder);
    const std::vector<std::size_t> blocks = type_blocks(types, type_list);

    auto stacked = [&](const char* which) {
        std::vector<Tensor> parts;
        for (TokenType t : type_list) {
            parts.push_back(tape.param(p + which + "." + token_type_letter(t)));
        }
        return tape.concat_rows(parts);
    };
    Tensor q = tape.block_matmul(x, blocks, stacked("wq"));
    Tensor k = tape.block_matmul(x, blocks, stacked("wk"));
    Tensor v = tape.block_matmul(x, blocks, stacked("wv"));

    // bias rows for every ordered (attending, attended) token pair
    std::vector<std::size_t> pair_rows;
    pair_rows.reserve(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            pair_rows.push_back(static_cast<std::size_t>(types[i]) * kNumTokenTypes +
                                static_cast<std::size_t>(types[j]));
        }
    Tensor bias = tape.gather_rows(tape.param(p + "bias"), pair_rows);

    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Tensor> heads;
    heads.reserve(config_.heads);
    for (std::size_t h = 0; h < config_.heads; ++h) {
        Tensor qh = tape.slice_cols(q, h * dh, dh);
        Tensor kh = tape.slice_cols(k, h * dh, dh);
        Tensor vh = tape.slice_cols(v, h * dh, dh);
        Tensor bh = tape.slice_cols(bias, h * dh, dh);
        Tensor scores = tape.add(tape.matmul_nt(qh, kh), tape.pair_dot_rows(qh, bh));
        Tensor attn = tape.softmax_rows(tape.affine(scores, scale, 0.0));
        heads.push_back(tape.matmul(attn, vh));
    }
    return tape.matmul(tape.concat_cols(heads), tape.param(p + "wo"));
}

Tensor LkhgtModel::encoder_stack(tensor::Tape& tape, Tensor x, const std::vector<TokenType>& types,
                                 const std::string& encoder, Rng* dropout_rng) const {
    for (std::size_t layer = 0; layer < config_.layers; ++layer) {
        const std::string p = layer_prefix(encoder, layer);
        Tensor attended = attention_sublayer(tape, layer_norm_affine(tape, x, p + "ln1"), types,
                                             encoder, layer);
        if (dropout_rng != nullptr && config_.dropout > 0.0) {
            attended = tape.dropout(attended, config_.dropout, *dropout_rng);
        }
        x = tape.add(x, attended);

        Tensor h = layer_norm_affine(tape, x, p + "ln2");
        h = tape.add_rowvec(tape.matmul(h, tape.param(p + "ffn.w1")), tape.param(p + "ffn.b1"));
        h = tape.gelu(h);
        h = tape.add_rowvec(tape.matmul(h, tape.param(p + "ffn.w2")), tape.param(p + "ffn.b2"));
        if (dropout_rng != nullptr && config_.dropout > 0.0) {
            h = tape.dropout(h, config_.dropout, *dropout_rng);
        }
        x = tape.add(x, h);
    }
    return layer_norm_affine(tape, x, encoder + ".final");
}

Tensor LkhgtModel::encode_projection(tensor::Tape& tape, const QueryNode& atom,
                                     const std::map<std::size_t, Tensor>& child_embeddings,
                                     bool target_is_free, Rng* dropout_rng) const {
    TokenSequence seq = build_projection_tokens(tape, atom, child_embeddings, target_is_free);
    Tensor hidden = encoder_stack(tape, seq.matrix, seq.types, "pe", dropout_rng);
    return tape.gather_rows(hidden, {seq.target_index});
}

Tensor LkhgtModel::encode_logical(tensor::Tape& tape, QueryNode::Kind op,
                                  const std::vector<Tensor>& children, Rng* dropout_rng) const {
    if (op != QueryNode::Kind::Intersection && op != QueryNode::Kind::Union) {
        throw Error(ErrorKind::InvalidQuery, "logical encoder handles intersection/union");
    }
    if (children.size() < 2) {
        throw Error(ErrorKind::TooFewChildren, std::to_string(children.size()));
    }

    auto run = [&](const std::vector<Tensor>& group) {
        std::vector<Tensor> raw;
        std::vector<TokenType> types;
        raw.push_back(tape.param(op == QueryNode::Kind::Intersection ? "tok.i" : "tok.u"));
        types.push_back(op == QueryNode::Kind::Intersection ? TokenType::Intersection
                                                            : TokenType::Union);
        for (const Tensor& child : group) {
            raw.push_back(child);
            types.push_back(TokenType::ProjectionOut);
        }
        Tensor x = tape.concat_rows(raw);
        x = tape.block_matmul(x, type_blocks(types, logical_types()),
                              input_block_weights(tape, "le"));
        // no positional encoding: operands are an unordered set
        Tensor hidden = encoder_stack(tape, x, types, "le", dropout_rng);
        return tape.gather_rows(hidden, {0});
    };

    if (config_.cardinality == CardinalityMode::Variadic) return run(children);
    Tensor acc = run({children[0], children[1]});
    for (std::size_t i = 2; i < children.size(); ++i) acc = run({acc, children[i]});
    return acc;
}

Tensor LkhgtModel::fuzzy_logical(tensor::Tape& tape, QueryNode::Kind op,
                                 const std::vector<Tensor>& children) const {
    if (children.size() < 2) {
        throw Error(ErrorKind::TooFewChildren, std::to_string(children.size()));
    }
    std::vector<Tensor> squashed;
    squashed.reserve(children.size());
    for (const Tensor& child : children) squashed.push_back(tape.sigmoid(child));

    Tensor combined;
    if (op == QueryNode::Kind::Intersection) {
        combined = squashed[0];
        for (std::size_t i = 1; i < squashed.size(); ++i) combined = tape.mul(combined, squashed[i]);
    } else {
        // 1 - prod(1 - c)
        combined = tape.affine(squashed[0], -1.0, 1.0);
        for (std::size_t i = 1; i < squashed.size(); ++i) {
            combined = tape.mul(combined, tape.affine(squashed[i], -1.0, 1.0));
        }
        combined = tape.affine(combined, -1.0, 1.0);
    }
    return tape.logit(combined);
}

Tensor LkhgtModel::exec_node(tensor::Tape& tape, const QueryNode& node, bool outputs_free_var,
                             ExecutionStats* stats, Rng* dropout_rng) const {
    switch (node.kind) {
        case QueryNode::Kind::Projection: {
            std::map<std::size_t, Tensor> child_embeddings;
            for (std::size_t pos = 0; pos < node.args.size(); ++pos) {
                const Arg& arg = node.args[pos];
                if (arg.kind != Arg::Kind::Sub) continue;
                child_embeddings.emplace(
                    pos, exec_node(tape, node.children[arg.child], false, stats, dropout_rng));
            }
            if (stats != nullptr) ++stats->projection_invocations;
            return encode_projection(tape, node, child_embeddings, outputs_free_var, dropout_rng);
        }
        case QueryNode::Kind::Intersection:
        case QueryNode::Kind::Union: {
            // children answer the same variable this node outputs
            std::vector<Tensor> children;
            children.reserve(node.children.size());
            for (const QueryNode& child : node.children) {
                children.push_back(exec_node(tape, child, outputs_free_var, stats, dropout_rng));
            }
            if (stats != nullptr) ++stats->logical_invocations;
            if (config_.logical_mode == LogicalMode::Fuzzy) {
                return fuzzy_logical(tape, node.kind, children);
            }
            return encode_logical(tape, node.kind, children, dropout_rng);
        }
    }
    throw Error(ErrorKind::InvalidQuery, "unreachable node kind");
}

Tensor LkhgtModel::execute(tensor::Tape& tape, const QueryNode& tree, ExecutionStats* stats,
                           Rng* dropout_rng) const {
    return exec_node(tape, tree, true, stats, dropout_rng);
}

Tensor LkhgtModel::decode(tensor::Tape& tape, const Tensor& embedding) const {
    if (config_.tied_decoder) return tape.matmul_nt(embedding, tape.param("entity_table"));
    Tensor h = tape.add_rowvec(tape.matmul(embedding, tape.param("dec.w1")), tape.param("dec.b1"));
    h = tape.gelu(h);
    return tape.add_rowvec(tape.matmul(h, tape.param("dec.w2")), tape.param("dec.b2"));
}

std::vector<khg::EntityId> LkhgtModel::rank(const QueryNode& tree,
                                            const std::set<khg::EntityId>& exclude) const {
    tensor::Tape tape(&params_);
    Tensor embedding = execute(tape, tree);

    std::vector<double> scores(num_entities_, 0.0);
    if (config_.score == ScoreMode::Cosine) {
        const Tensor& table = params_.get("entity_table");
        const std::size_t d = config_.dim;
        double emb_norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) emb_norm += embedding[j] * embedding[j];
        emb_norm = std::sqrt(emb_norm) + 1e-300;
        for (std::size_t e = 0; e < num_entities_; ++e) {
            double dot = 0.0, row_norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double t = table.at(e, j);
                dot += t * embedding[j];
                row_norm += t * t;
            }
            scores[e] = dot / (emb_norm * (std::sqrt(row_norm) + 1e-300));
        }
    } else {
        Tensor logits = decode(tape, embedding);
        for (std::size_t e = 0; e < num_entities_; ++e) scores[e] = logits[e];
    }

    std::vector<khg::EntityId> order;
    order.reserve(num_entities_);
    for (std::size_t e = 0; e < num_entities_; ++e) {
        if (!exclude.contains(static_cast<khg::EntityId>(e))) {
            order.push_back(static_cast<khg::EntityId>(e));
        }
    }
    std::stable_sort(order.begin(), order.end(), [&](khg::EntityId a, khg::EntityId b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

std::vector<EpochStats> LkhgtModel::train(const std::vector<query::QueryInstance>& dataset) {
    std::vector<const query::QueryInstance*> pool;
    for (const auto& instance : dataset) {
        const bool excluded = std::find(config_.exclude_types.begin(), config_.exclude_types.end(),
                                        instance.type) != config_.exclude_types.end();
        if (!excluded && !instance.hard_answers.empty()) pool.push_back(&instance);
    }
    if (pool.empty()) throw Error(ErrorKind::EmptyDataset, "nothing to train on after filtering");

    Rng rng(derive_seed({config_.seed, 0x747261696eULL}));
    Rng* dropout_rng = config_.dropout > 0.0 ? &rng : nullptr;
    tensor::AdamState adam;
    adam.lr = config_.lr;

    // fixed subset for the per-epoch MRR probe
    const std::size_t probe_count = std::min<std::size_t>(pool.size(), 128);

    std::vector<EpochStats> curve;
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config_.batch_size);
            tensor::Tape tape(&params_);
            std::vector<Tensor> losses;
            losses.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                const query::QueryInstance& instance = *pool[order[i]];
                // one training answer per epoch, uniform over the answer set
                const auto& answers = instance.hard_answers;
                std::size_t pick = static_cast<std::size_t>(rng.uniform_below(answers.size()));
                auto it = answers.begin();
                std::advance(it, static_cast<long>(pick));
                Tensor embedding = execute(tape, instance.tree, nullptr, dropout_rng);
                Tensor logits = decode(tape, embedding);
                losses.push_back(tape.cross_entropy_logits(logits, *it));
            }
            Tensor loss = tape.mean(tape.concat_rows(losses));
            tensor::GradMap grads = tape.backward(loss);
            tensor::adam_step(params_, grads, adam);
            loss_sum += loss.value() * static_cast<double>(stop - start);
            seen += stop - start;
        }

        double mrr_sum = 0.0;
        for (std::size_t i = 0; i < probe_count; ++i) {
            const query::QueryInstance& instance = *pool[i];
            auto ranked = rank(instance.tree, instance.easy_answers);
            double inst = 0.0;
            for (std::size_t r = 0; r < ranked.size(); ++r) {
                if (instance.hard_answers.contains(ranked[r])) {
                    inst += 1.0 / static_cast<double>(r + 1);
                }
            }
            mrr_sum += inst / static_cast<double>(instance.hard_answers.size());
        }
        curve.push_back({epoch, loss_sum / static_cast<double>(seen),
                         probe_count > 0 ? mrr_sum / static_cast<double>(probe_count) : 0.0});
    }
    return curve;
}

void LkhgtModel::save(const std::string& path,
                      const std::map<std::string, std::string>& extra) const {
    std::map<std::string, std::string> meta = config_.describe();
    meta["num_entities"] = std::to_string(num_entities_);
    meta["num_relations"] = std::to_string(num_relations_);
    for (const auto& [key, value] : extra) meta[key] = value;
    tensor::save_checkpoint(params_, path, meta);
}

namespace {

ModelConfig config_from_meta(const std::map<std::string, std::string>& meta) {
    ModelConfig config;
    auto get = [&](const char* key) -> const std::string& {
        auto it = meta.find(key);
        if (it == meta.end()) throw Error(ErrorKind::ParseError, std::string("manifest misses ") + key);
        return it->second;
    };
    config.dim = std::stoul(get("dim"));
    config.layers = std::stoul(get("layers"));
    config.heads = std::stoul(get("heads"));
    config.ffn_multiplier = std::stoul(get("ffn_multiplier"));
    config.dropout = std::stod(get("dropout"));
    config.logical_mode = get("logical_mode") == "fuzzy" ? LogicalMode::Fuzzy : LogicalMode::TabEncoder;
    config.cardinality =
        get("cardinality") == "variadic" ? CardinalityMode::Variadic : CardinalityMode::Pairwise;
    config.positional =
        get("positional") == "none" ? PositionalMode::None : PositionalMode::Sinusoidal;
    config.score = get("score") == "decoder-logits" ? ScoreMode::DecoderLogits : ScoreMode::Cosine;
    config.tied_decoder = get("tied_decoder") == "1";
    config.epochs = std::stoul(get("epochs"));
    config.batch_size = std::stoul(get("batch_size"));
    config.lr = std::stod(get("lr"));
    config.seed = std::stoull(get("seed"));
    const std::string& excluded = get("exclude_types");
    std::size_t start = 0;
    while (start < excluded.size()) {
        std::size_t end = excluded.find(',', start);
        if (end == std::string::npos) end = excluded.size();
        if (end > start) config.exclude_types.push_back(excluded.substr(start, end - start));
        start = end + 1;
    }
    return config;
}

}  // namespace

LkhgtModel LkhgtModel::load(const std::string& path) {
    tensor::ParamStore loaded = tensor::load_checkpoint(path);
    auto meta = tensor::load_manifest_extra(path);
    if (meta.empty()) throw Error(ErrorKind::ParseError, "missing manifest for " + path);
    ModelConfig config = config_from_meta(meta);
    const std::size_t num_entities = std::stoul(meta.at("num_entities"));
    const std::size_t num_relations = std::stoul(meta.at("num_relations"));

    LkhgtModel model(num_entities, num_relations, config);
    for (const std::string& name : model.params_.names()) {
        const Tensor& src = loaded.get(name);
        Tensor& dst = model.params_.get(name);
        if (!dst.same_shape(src)) {
            throw Error(ErrorKind::ParseError, "checkpoint shape mismatch for " + name);
        }
        *dst.data = *src.data;
    }
    return model;
}

}  // namespace hypercqa::model
