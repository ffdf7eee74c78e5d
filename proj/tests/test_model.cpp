#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "model/lkhgt.hpp"
#include "sampler/sampler.hpp"

using namespace hypercqa;
using model::LkhgtModel;
using model::ModelConfig;
using model::TokenType;
using query::Arg;
using query::QueryNode;
using tensor::Tape;
using tensor::Tensor;

namespace {

ModelConfig tiny_config() {
    ModelConfig config;
    config.dim = 16;
    config.heads = 2;
    config.layers = 2;
    config.epochs = 2;
    config.batch_size = 16;
    config.seed = 7;
    return config;
}

QueryNode projection(khg::RelationId rel, std::vector<Arg> args, bool negated = false,
                     std::vector<QueryNode> children = {}) {
    QueryNode node;
    node.kind = QueryNode::Kind::Projection;
    node.relation = rel;
    node.negated = negated;
    node.args = std::move(args);
    node.children = std::move(children);
    return node;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.numel() == b.numel());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

// plain multi-head attention with shared weights, computed longhand
Tensor vanilla_attention(const Tensor& x, const Tensor& wq, const Tensor& wk, const Tensor& wv,
                         const Tensor& wo, std::size_t heads) {
    const std::size_t n = x.rows(), d = x.cols(), dh = d / heads;
    auto matmul = [](const Tensor& a, const Tensor& b) {
        Tensor out = Tensor::zeros({a.rows(), b.cols()});
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t p = 0; p < a.cols(); ++p)
                for (std::size_t j = 0; j < b.cols(); ++j)
                    out.at(i, j) += a.at(i, p) * b.at(p, j);
        return out;
    };
    Tensor q = matmul(x, wq), k = matmul(x, wk), v = matmul(x, wv);
    Tensor merged = Tensor::zeros({n, d});
    for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> scores(n, 0.0);
            double mx = -1e300;
            for (std::size_t j = 0; j < n; ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < dh; ++c) dot += q.at(i, h * dh + c) * k.at(j, h * dh + c);
                scores[j] = dot / std::sqrt(static_cast<double>(dh));
                mx = std::max(mx, scores[j]);
            }
            double denom = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                scores[j] = std::exp(scores[j] - mx);
                denom += scores[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
                const double a = scores[j] / denom;
                for (std::size_t c = 0; c < dh; ++c) merged.at(i, h * dh + c) += a * v.at(j, h * dh + c);
            }
        }
    }
    return matmul(merged, wo);
}

}  // namespace

TEST_CASE("projection tokens follow the atom layout") {
    LkhgtModel m(6, 3, tiny_config());
    Tape tape(&m.params());

    SUBCASE("negated binary atom") {
        auto atom = projection(1, {Arg::constant(4), Arg::target()}, true);
        auto seq = m.build_projection_tokens(tape, atom, {}, true);
        REQUIRE(seq.types.size() == 4);
        CHECK(seq.types[0] == TokenType::Negation);
        CHECK(seq.types[1] == TokenType::Relation);
        CHECK(seq.types[2] == TokenType::Entity);
        CHECK(seq.types[3] == TokenType::Free);
        CHECK(seq.positions == std::vector<int>{-1, -1, 0, 1});
        CHECK(seq.target_index == 3);
        CHECK(seq.matrix.rows() == 4);
    }

    SUBCASE("sub slots consume the child embedding") {
        auto chain = projection(0, {Arg::constant(1), Arg::sub(0), Arg::target()}, false,
                                {projection(1, {Arg::constant(2), Arg::target()})});
        Tensor child_a = tape.watch(Tensor::full({1, 16}, 0.25));
        Tensor child_b = tape.watch(Tensor::full({1, 16}, -0.75));
        auto seq_a = m.build_projection_tokens(tape, chain, {{1, child_a}}, false);
        auto seq_b = m.build_projection_tokens(tape, chain, {{1, child_b}}, false);
        CHECK(seq_a.types ==
              std::vector<TokenType>{TokenType::Relation, TokenType::Entity, TokenType::Existential,
                                     TokenType::Existential});
        CHECK(max_abs_diff(seq_a.matrix, seq_b.matrix) > 1e-6);
        CHECK_THROWS_AS(m.build_projection_tokens(tape, chain, {}, false), Error);
    }

    SUBCASE("intermediate targets use the existential placeholder") {
        auto atom = projection(0, {Arg::constant(1), Arg::constant(2), Arg::target()});
        auto root = m.build_projection_tokens(tape, atom, {}, true);
        auto inner = m.build_projection_tokens(tape, atom, {}, false);
        CHECK(root.types[3] == TokenType::Free);
        CHECK(inner.types[3] == TokenType::Existential);
        CHECK(max_abs_diff(root.matrix, inner.matrix) > 1e-9);
    }
}

TEST_CASE("attention reduces to vanilla attention with zero bias and tied weights") {
    ModelConfig config = tiny_config();
    config.layers = 1;
    LkhgtModel m(5, 2, config);

    Rng rng(99);
    Tensor shared_q = Tensor::gaussian({16, 16}, 0.3, rng);
    Tensor shared_k = Tensor::gaussian({16, 16}, 0.3, rng);
    Tensor shared_v = Tensor::gaussian({16, 16}, 0.3, rng);
    for (const char* letter : {"n", "r", "x", "e", "y"}) {
        *m.params().get(std::string("pe.l0.wq.") + letter).data = *shared_q.data;
        *m.params().get(std::string("pe.l0.wk.") + letter).data = *shared_k.data;
        *m.params().get(std::string("pe.l0.wv.") + letter).data = *shared_v.data;
    }
    Tensor& bias = m.params().get("pe.l0.bias");
    std::fill(bias.data->begin(), bias.data->end(), 0.0);

    const std::vector<TokenType> types = {TokenType::Relation, TokenType::Entity,
                                          TokenType::Entity, TokenType::Free};
    for (int trial = 0; trial < 20; ++trial) {
        Tensor x = Tensor::gaussian({4, 16}, 1.0, rng);
        Tape tape(&m.params());
        Tensor ours = m.attention_sublayer(tape, tape.watch(x), types, "pe", 0);
        Tensor reference =
            vanilla_attention(x, shared_q, shared_k, shared_v, m.params().get("pe.l0.wo"), 2);
        CHECK(max_abs_diff(ours, reference) < 1e-10);
    }

    SUBCASE("a single token attends only to itself") {
        Tape tape(&m.params());
        Tensor x = tape.watch(Tensor::gaussian({1, 16}, 1.0, rng));
        Tensor out = m.attention_sublayer(tape, x, {TokenType::Free}, "pe", 0);
        // weight 1.0 on the sole token: output is its value projection
        Tensor expected = tape.matmul(
            tape.block_matmul(x, {4}, tape.concat_rows({tape.param("pe.l0.wv.n"),
                                                        tape.param("pe.l0.wv.r"),
                                                        tape.param("pe.l0.wv.x"),
                                                        tape.param("pe.l0.wv.e"),
                                                        tape.param("pe.l0.wv.y")})),
            tape.param("pe.l0.wo"));
        CHECK(max_abs_diff(out, expected) < 1e-12);
    }
}

TEST_CASE("positional encoding controls argument-order sensitivity") {
    auto swapped_pair = [](LkhgtModel& m) {
        Tape tape(&m.params());
        auto ab = projection(0, {Arg::constant(1), Arg::constant(2), Arg::target()});
        auto ba = projection(0, {Arg::constant(2), Arg::constant(1), Arg::target()});
        Tensor out_ab = m.encode_projection(tape, ab, {}, true);
        Tensor out_ba = m.encode_projection(tape, ba, {}, true);
        return max_abs_diff(out_ab, out_ba);
    };

    ModelConfig with_pe = tiny_config();
    LkhgtModel m_pe(6, 2, with_pe);
    CHECK(swapped_pair(m_pe) > 1e-6);  // ordered hyperedges are order-sensitive

    ModelConfig no_pe = tiny_config();
    no_pe.positional = model::PositionalMode::None;
    LkhgtModel m_nope(6, 2, no_pe);
    CHECK(swapped_pair(m_nope) < 1e-6);  // identical token multiset, same readout
}

TEST_CASE("projection encoding is deterministic and negation-sensitive") {
    LkhgtModel m(6, 2, tiny_config());
    auto atom = projection(0, {Arg::constant(1), Arg::target()});
    auto negated = atom;
    negated.negated = true;

    Tape tape(&m.params());
    Tensor a = m.encode_projection(tape, atom, {}, true);
    Tensor b = m.encode_projection(tape, atom, {}, true);
    CHECK(max_abs_diff(a, b) == 0.0);

    Tensor c = m.encode_projection(tape, negated, {}, true);
    CHECK(max_abs_diff(a, c) > 1e-6);
}

TEST_CASE("logical encoder cardinality modes") {
    ModelConfig config = tiny_config();
    config.cardinality = model::CardinalityMode::Variadic;
    LkhgtModel m(6, 2, config);
    Rng rng(4);

    Tape tape(&m.params());
    std::vector<Tensor> kids;
    for (int i = 0; i < 3; ++i) kids.push_back(tape.watch(Tensor::gaussian({1, 16}, 1.0, rng)));

    SUBCASE("variadic mode is permutation-invariant") {
        Tensor abc = m.encode_logical(tape, QueryNode::Kind::Intersection, {kids[0], kids[1], kids[2]});
        Tensor cab = m.encode_logical(tape, QueryNode::Kind::Intersection, {kids[2], kids[0], kids[1]});
        CHECK(max_abs_diff(abc, cab) < 1e-6);
    }

    SUBCASE("pairwise mode folds left") {
        ModelConfig pairwise = tiny_config();
        LkhgtModel mp(6, 2, pairwise);
        Tape tp(&mp.params());
        std::vector<Tensor> ks;
        for (int i = 0; i < 3; ++i) ks.push_back(tp.watch(Tensor::gaussian({1, 16}, 1.0, rng)));
        Tensor folded = mp.encode_logical(tp, QueryNode::Kind::Union, {ks[0], ks[1], ks[2]});
        Tensor manual = mp.encode_logical(
            tp, QueryNode::Kind::Union,
            {mp.encode_logical(tp, QueryNode::Kind::Union, {ks[0], ks[1]}), ks[2]});
        CHECK(max_abs_diff(folded, manual) == 0.0);
    }

    SUBCASE("fewer than two children is an error") {
        CHECK_THROWS_AS(m.encode_logical(tape, QueryNode::Kind::Intersection, {kids[0]}), Error);
    }
}

TEST_CASE("fuzzy logical operations use the product t-norm in squash space") {
    LkhgtModel m(6, 2, tiny_config());
    Tape tape(&m.params());
    Rng rng(12);
    Tensor c = tape.watch(Tensor::gaussian({1, 16}, 1.0, rng));
    Tensor d = tape.watch(Tensor::gaussian({1, 16}, 1.0, rng));

    auto squash = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

    SUBCASE("intersection of identical children squares the membership") {
        Tensor out = m.fuzzy_logical(tape, QueryNode::Kind::Intersection, {c, c});
        for (std::size_t i = 0; i < 16; ++i) {
            const double s = squash(c[i]);
            CHECK(squash(out[i]) == doctest::Approx(s * s).epsilon(1e-9));
        }
    }
    SUBCASE("the t-norm never exceeds either operand") {
        Tensor out = m.fuzzy_logical(tape, QueryNode::Kind::Intersection, {c, d});
        for (std::size_t i = 0; i < 16; ++i) {
            CHECK(squash(out[i]) <= std::min(squash(c[i]), squash(d[i])) + 1e-12);
        }
    }
    SUBCASE("a saturated child annihilates the union") {
        Tensor big = tape.watch(Tensor::full({1, 16}, 40.0));  // squash value 1
        Tensor out = m.fuzzy_logical(tape, QueryNode::Kind::Union, {big, c});
        for (std::size_t i = 0; i < 16; ++i) CHECK(squash(out[i]) >= 1.0 - 1e-9);
    }
}

TEST_CASE("execution visits each operator node exactly once") {
    auto g = testutil::random_graph({25, 4, 100, 2, 4}, 17);
    LkhgtModel m(g.num_entities(), g.num_relations(), tiny_config());
    Rng rng(3);

    const std::vector<std::pair<std::string, std::size_t>> expected = {
        {"1p", 1}, {"2p", 2}, {"3p", 3}, {"2i", 3}, {"3i", 4}, {"pi", 4}, {"ip", 4},
        {"2u", 3}, {"up", 4}, {"2in", 3}, {"3in", 4}, {"inp", 4}, {"pin", 4}, {"pni", 4}};
    for (const auto& [type, count] : expected) {
        auto grounded = sampler::ground(query::query_template(type), g, rng);
        Tape tape(&m.params());
        model::ExecutionStats stats;
        m.execute(tape, grounded.tree, &stats);
        CAPTURE(type);
        CHECK(stats.total() == count);
        CHECK(stats.total() == query::node_count(grounded.tree));
        if (type == "1p") CHECK(stats.logical_invocations == 0);
    }
}

TEST_CASE("a 1p query leaves the logical encoder untouched") {
    LkhgtModel m(6, 2, tiny_config());
    auto atom = projection(0, {Arg::constant(1), Arg::target()});
    Tape tape(&m.params());
    Tensor emb = m.execute(tape, atom);
    Tensor loss = tape.mean(emb);
    auto grads = tape.backward(loss);
    for (const auto& [name, grad] : grads) {
        const bool logical_param = name.rfind("le.", 0) == 0 || name == "tok.i" || name == "tok.u" ||
                                   name == "in.i" || name == "in.u" || name == "in.p";
        if (!logical_param) continue;
        for (std::size_t i = 0; i < grad.numel(); ++i) CHECK(grad[i] == 0.0);
    }
}

TEST_CASE("multi-hop queries cost more encoder runs than one-hop queries") {
    auto g = testutil::random_graph({30, 4, 120, 2, 3}, 23);
    LkhgtModel m(g.num_entities(), g.num_relations(), tiny_config());
    Rng rng(8);
    auto q_1p = sampler::ground(query::query_template("1p"), g, rng).tree;
    auto q_ip = sampler::ground(query::query_template("ip"), g, rng).tree;

    auto time_of = [&](const QueryNode& tree) {
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < 40; ++i) {
            Tape tape(&m.params());
            m.execute(tape, tree);
        }
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    time_of(q_1p);  // warm up
    CHECK(time_of(q_ip) > time_of(q_1p));
}

TEST_CASE("decoder") {
    LkhgtModel m(9, 2, tiny_config());
    Tape tape(&m.params());
    Rng rng(5);
    Tensor emb = tape.watch(Tensor::gaussian({1, 16}, 1.0, rng));

    Tensor logits = m.decode(tape, emb);
    CHECK(logits.numel() == 9);
    Tensor again = m.decode(tape, emb);
    CHECK(max_abs_diff(logits, again) == 0.0);

    SUBCASE("tied decoder scores by entity-table inner products") {
        ModelConfig tied = tiny_config();
        tied.tied_decoder = true;
        LkhgtModel mt(9, 2, tied);
        Tape tt(&mt.params());
        Tensor e2 = tt.watch(Tensor::gaussian({1, 16}, 1.0, rng));
        Tensor out = mt.decode(tt, e2);
        const Tensor& table = mt.params().get("entity_table");
        for (std::size_t e = 0; e < 9; ++e) {
            double dot = 0.0;
            for (std::size_t j = 0; j < 16; ++j) dot += e2[j] * table.at(e, j);
            CHECK(out[e] == doctest::Approx(dot).epsilon(1e-12));
        }
    }
}

TEST_CASE("ranking") {
    auto g = testutil::random_graph({12, 3, 40, 2, 3}, 29);
    LkhgtModel m(g.num_entities(), g.num_relations(), tiny_config());
    Rng rng(2);
    auto tree = sampler::ground(query::query_template("1p"), g, rng).tree;

    SUBCASE("excluding all but one entity leaves it at rank 1") {
        std::set<khg::EntityId> exclude;
        for (khg::EntityId e = 0; e + 1 < g.num_entities(); ++e) exclude.insert(e);
        auto ranked = m.rank(tree, exclude);
        REQUIRE(ranked.size() == 1);
        CHECK(ranked[0] == g.num_entities() - 1);
    }

    SUBCASE("ranking is a permutation of the non-excluded entities") {
        auto ranked = m.rank(tree, {3});
        CHECK(ranked.size() == g.num_entities() - 1);
        std::set<khg::EntityId> seen(ranked.begin(), ranked.end());
        CHECK(seen.size() == ranked.size());
        CHECK_FALSE(seen.contains(3));
    }

    SUBCASE("cosine ordering ignores positive rescaling of the answer embedding") {
        Tape tape(&m.params());
        Tensor emb = m.execute(tape, tree);
        const Tensor& table = m.params().get("entity_table");
        auto cosine_order = [&](double scale) {
            std::vector<std::pair<double, khg::EntityId>> scored;
            for (khg::EntityId e = 0; e < g.num_entities(); ++e) {
                double dot = 0.0, nn = 0.0, en = 0.0;
                for (std::size_t j = 0; j < 16; ++j) {
                    dot += scale * emb[j] * table.at(e, j);
                    nn += table.at(e, j) * table.at(e, j);
                    en += scale * emb[j] * scale * emb[j];
                }
                scored.emplace_back(dot / (std::sqrt(en) * std::sqrt(nn)), e);
            }
            std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            std::vector<khg::EntityId> order;
            for (const auto& [s, e] : scored) order.push_back(e);
            return order;
        };
        CHECK(cosine_order(1.0) == cosine_order(7.25));
        CHECK(cosine_order(1.0) == m.rank(tree, {}));
    }
}

TEST_CASE("training") {
    auto g = testutil::random_graph({15, 3, 60, 2, 3}, 83);
    auto splits = khg::GraphSplits::make(g, 0.99, 0.0, 1);
    auto spec = sampler::SampleSpec::uniform(12, 0, 0, 3);

    std::vector<query::QueryInstance> dataset;
    for (const std::string& type : {"1p", "2i", "3i", "3p"}) {
        auto part = sampler::sample_split("train", type, 12, splits, spec);
        dataset.insert(dataset.end(), part.begin(), part.end());
    }

    SUBCASE("the first-epoch loss of an untrained model is about ln |E|") {
        ModelConfig config = tiny_config();
        config.epochs = 1;
        config.lr = 1e-4;
        LkhgtModel m(g.num_entities(), g.num_relations(), config);
        auto curve = m.train(dataset);
        REQUIRE(curve.size() == 1);
        const double uniform = std::log(static_cast<double>(g.num_entities()));
        CHECK(curve[0].loss == doctest::Approx(uniform).epsilon(0.10));
    }

    SUBCASE("the OOD filter drops exactly 3p, 3in, 3i, inp") {
        CHECK(model::ood_excluded_types() == std::vector<std::string>{"3p", "3in", "3i", "inp"});
        ModelConfig config = tiny_config();
        config.epochs = 1;
        config.exclude_types = model::ood_excluded_types();
        LkhgtModel m(g.num_entities(), g.num_relations(), config);
        CHECK_NOTHROW(m.train(dataset));  // 1p and 2i remain

        std::vector<query::QueryInstance> only_excluded;
        for (const auto& instance : dataset) {
            if (instance.type == "3p" || instance.type == "3i") only_excluded.push_back(instance);
        }
        REQUIRE_FALSE(only_excluded.empty());
        LkhgtModel m2(g.num_entities(), g.num_relations(), config);
        CHECK_THROWS_AS(m2.train(only_excluded), Error);
    }

    SUBCASE("training twice with one seed gives identical parameters") {
        ModelConfig config = tiny_config();
        config.epochs = 2;
        LkhgtModel a(g.num_entities(), g.num_relations(), config);
        LkhgtModel b(g.num_entities(), g.num_relations(), config);
        auto curve_a = a.train(dataset);
        auto curve_b = b.train(dataset);
        for (std::size_t i = 0; i < curve_a.size(); ++i) CHECK(curve_a[i].loss == curve_b[i].loss);
        for (const std::string& name : a.params().names()) {
            const Tensor& ta = a.params().get(name);
            const Tensor& tb = b.params().get(name);
            for (std::size_t i = 0; i < ta.numel(); ++i) CHECK(ta[i] == tb[i]);
        }
    }
}

TEST_CASE("checkpoints restore the model exactly") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "hypercqa_model_test.ckpt").string();

    auto g = testutil::random_graph({10, 2, 30, 2, 3}, 47);
    ModelConfig config = tiny_config();
    config.logical_mode = model::LogicalMode::Fuzzy;
    config.exclude_types = {"3p"};
    LkhgtModel m(g.num_entities(), g.num_relations(), config);
    m.save(path, {{"vocab_hash", "fixture"}});

    LkhgtModel loaded = LkhgtModel::load(path);
    CHECK(loaded.config().logical_mode == model::LogicalMode::Fuzzy);
    CHECK(loaded.config().exclude_types == std::vector<std::string>{"3p"});
    CHECK(loaded.num_entities() == g.num_entities());

    Rng rng(1);
    auto tree = sampler::ground(query::query_template("2i"), g, rng).tree;
    CHECK(m.rank(tree, {}) == loaded.rank(tree, {}));

    fs::remove(path);
    fs::remove(path + ".manifest.json");
}
