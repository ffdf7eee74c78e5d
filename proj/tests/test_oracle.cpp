#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "naive_oracle.hpp"
#include "query/oracle.hpp"
#include "sampler/sampler.hpp"

using namespace hypercqa;
using query::AnswerSet;
using query::Arg;
using query::QueryNode;

namespace {

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

QueryNode logical(QueryNode::Kind kind, std::vector<QueryNode> children) {
    QueryNode node;
    node.kind = kind;
    node.children = std::move(children);
    return node;
}

}  // namespace

TEST_CASE("one-hop answers") {
    auto g = testutil::graph_of("r\ta\tb\tc\n");
    auto tree = projection(0, {Arg::constant(0), Arg::constant(1), Arg::target()});
    CHECK(query::answers(tree, g) == AnswerSet{2});
}

TEST_CASE("intersection and negation at the set level") {
    // r1(a,c), r1(a,d), r2(b,d)
    auto g = testutil::graph_of("r1\ta\tc\nr1\ta\td\nr2\tb\td\n");
    const auto a = *g.find_entity("a");
    const auto b = *g.find_entity("b");
    const auto c = *g.find_entity("c");
    const auto d = *g.find_entity("d");
    auto branch1 = projection(0, {Arg::constant(a), Arg::target()});
    auto branch2 = projection(1, {Arg::constant(b), Arg::target()});

    auto tree_2i = logical(QueryNode::Kind::Intersection, {branch1, branch2});
    CHECK(query::answers(tree_2i, g) == AnswerSet{d});

    auto negated = branch2;
    negated.negated = true;
    auto tree_2in = logical(QueryNode::Kind::Intersection, {branch1, negated});
    CHECK(query::answers(tree_2in, g) == AnswerSet{c});
}

TEST_CASE("two-hop chains enumerate the intermediate variable") {
    // expected answer derived by enumerating x1 over {m, n}
    auto g = testutil::graph_of("r1\ta\tm\nr1\ta\tn\nr2\tm\tz\n");
    auto chain = projection(1, {Arg::sub(0), Arg::target()}, false,
                            {projection(0, {Arg::constant(*g.find_entity("a")), Arg::target()})});
    CHECK(query::answers(chain, g) == AnswerSet{*g.find_entity("z")});
}

TEST_CASE("dnf unions conjunct answers") {
    auto g = testutil::graph_of("r\ta\tx\nr\tb\ty\n");
    auto conj_a = projection(0, {Arg::constant(*g.find_entity("a")), Arg::target()});
    auto conj_b = projection(0, {Arg::constant(*g.find_entity("b")), Arg::target()});

    CHECK(query::answers_dnf({conj_a}, g) == query::answers(conj_a, g));
    CHECK(query::answers_dnf({conj_a, conj_b}, g) ==
          AnswerSet{*g.find_entity("x"), *g.find_entity("y")});
    CHECK(query::answers_dnf({conj_a, conj_a}, g) == query::answers(conj_a, g));
}

TEST_CASE("engine matches exhaustive assignment enumeration") {
    auto g = testutil::random_graph({20, 4, 70, 2, 3}, 21);
    Rng rng(31);
    for (const std::string& type : query::query_type_names()) {
        for (int i = 0; i < 15; ++i) {
            auto grounded = sampler::ground(query::query_template(type), g, rng);
            CAPTURE(type);
            CHECK(query::answers(grounded.tree, g) == testutil::naive_answers(grounded.tree, g));
        }
    }
}

TEST_CASE("adding an edge never shrinks negation-free answers") {
    // the generator draws arities first, so a longer run of the same stream
    // extends the edge list without renaming anything
    testutil::RandomGraphSpec spec{18, 3, 50, 2, 3};
    testutil::RandomGraphSpec bigger_spec = spec;
    bigger_spec.num_edges = 90;
    auto g = testutil::random_graph(spec, 5);
    auto bigger = testutil::random_graph(bigger_spec, 5);
    REQUIRE(testutil::random_facts(bigger_spec, 5).substr(0, testutil::random_facts(spec, 5).size()) ==
            testutil::random_facts(spec, 5));

    Rng rng(77);
    const std::vector<std::string> positive_types = {"1p", "2p", "3p", "2i", "3i",
                                                     "pi", "ip", "2u", "up"};
    for (const std::string& type : positive_types) {
        auto grounded = sampler::ground(query::query_template(type), g, rng);
        auto before = query::answers(grounded.tree, g);
        auto after = query::answers(grounded.tree, bigger);
        CAPTURE(type);
        for (khg::EntityId e : before) CHECK(after.contains(e));
    }
}

TEST_CASE("intersection with a negated atom equals set difference") {
    auto g = testutil::random_graph({15, 2, 40, 2, 2}, 8);
    Rng rng(13);
    for (int i = 0; i < 20; ++i) {
        auto a = sampler::ground(query::query_template("1p"), g, rng).tree;
        auto b = sampler::ground(query::query_template("1p"), g, rng).tree;
        auto nb = b;
        nb.negated = true;
        auto combined = logical(QueryNode::Kind::Intersection, {a, nb});

        AnswerSet expected;
        auto sa = query::answers(a, g);
        auto sb = query::answers(b, g);
        for (khg::EntityId e : sa) {
            if (!sb.contains(e)) expected.insert(e);
        }
        CHECK(query::answers(combined, g) == expected);
    }
}

TEST_CASE("union and intersection are commutative and associative in the result") {
    auto g = testutil::random_graph({15, 3, 45, 2, 3}, 10);
    Rng rng(17);
    for (auto kind : {QueryNode::Kind::Intersection, QueryNode::Kind::Union}) {
        for (int i = 0; i < 10; ++i) {
            auto a = sampler::ground(query::query_template("1p"), g, rng).tree;
            auto b = sampler::ground(query::query_template("1p"), g, rng).tree;
            auto c = sampler::ground(query::query_template("1p"), g, rng).tree;
            auto abc = query::answers(logical(kind, {a, b, c}), g);
            CHECK(abc == query::answers(logical(kind, {c, a, b}), g));
            CHECK(abc == query::answers(logical(kind, {logical(kind, {a, b}), c}), g));
        }
    }
}
