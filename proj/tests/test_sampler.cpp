#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "query/oracle.hpp"
#include "sampler/sampler.hpp"

using namespace hypercqa;
using query::Arg;
using query::QueryNode;

TEST_CASE("grounding a 1p atom freezes the sampled edge around the root") {
    auto g = testutil::graph_of("r\ta\tb\tc\n");
    const auto c = *g.find_entity("c");
    // only one edge exists, so grounding is forced once the root lands on c
    for (std::uint64_t seed = 0;; ++seed) {
        REQUIRE(seed < 64);
        Rng rng(seed);
        auto grounded = sampler::ground(query::query_template("1p"), g, rng);
        if (grounded.root != c) continue;
        REQUIRE(grounded.tree.args.size() == 3);
        CHECK(grounded.tree.relation == *g.find_relation("r"));
        CHECK(grounded.tree.args[0] == Arg::constant(*g.find_entity("a")));
        CHECK(grounded.tree.args[1] == Arg::constant(*g.find_entity("b")));
        CHECK(grounded.tree.args[2] == Arg::target());
        break;
    }
}

TEST_CASE("duplicate branches exhaust the budget on a one-edge graph") {
    auto g = testutil::graph_of("r\ta\tb\n");
    Rng rng(3);
    CHECK_THROWS_AS(sampler::ground(query::query_template("2i"), g, rng, 50), Error);
    try {
        Rng rng2(4);
        sampler::ground(query::query_template("2i"), g, rng2, 50);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SamplingFailed);
    }
}

TEST_CASE("negated branches keep the root inside the answer set") {
    auto g = testutil::random_graph({40, 5, 160, 2, 4}, 77);
    Rng rng(1234);
    const auto structure = query::query_template("2in");
    for (int i = 0; i < 1000; ++i) {
        auto grounded = sampler::ground(structure, g, rng);
        CHECK(query::answers(grounded.tree, g).contains(grounded.root));
    }
}

TEST_CASE("grounding is sound for every type") {
    auto g = testutil::random_graph({30, 4, 120, 2, 4}, 55);
    Rng rng(9);
    for (const std::string& type : query::query_type_names()) {
        for (int i = 0; i < 25; ++i) {
            auto grounded = sampler::ground(query::query_template(type), g, rng);
            CAPTURE(type);
            CHECK(query::answers(grounded.tree, g).contains(grounded.root));
        }
    }
}

TEST_CASE("positional fidelity: the target slot is the slot the answer occupied") {
    auto g = testutil::random_graph({25, 4, 90, 2, 4}, 31);
    Rng rng(41);
    for (const std::string& type : query::query_type_names()) {
        sampler::GroundTrace trace;
        auto grounded = sampler::ground(query::query_template(type), g, rng, 100, &trace);
        CHECK(trace.size() >= 1);
        for (const sampler::GroundStep& step : trace) {
            CHECK(g.edges()[step.edge].entities[step.target_position] == step.answer);
        }
        (void)grounded;
    }
}

TEST_CASE("labeling splits answers into easy and hard") {
    // small: r(a,x); big adds r(a,y)
    auto big = testutil::graph_of("r\ta\tx\nr\ta\ty\n");
    auto small = khg::KnowledgeHypergraph::from_edges(big, {big.edges()[0]});
    QueryNode atom;
    atom.kind = QueryNode::Kind::Projection;
    atom.relation = 0;
    atom.args = {Arg::constant(*big.find_entity("a")), Arg::target()};

    auto instance = sampler::label("1p", atom, small, big);
    CHECK(instance.easy_answers == std::set<khg::EntityId>{*big.find_entity("x")});
    CHECK(instance.hard_answers == std::set<khg::EntityId>{*big.find_entity("y")});

    SUBCASE("equal answer sets leave hard empty") {
        auto same = khg::KnowledgeHypergraph::from_edges(big, big.edges());
        auto inst = sampler::label("1p", atom, same, big);
        CHECK(inst.hard_answers.empty());
    }

    SUBCASE("the train convention pushes everything into hard") {
        auto inst = sampler::label("1p", atom, big, big);
        CHECK(inst.easy_answers.empty());
        CHECK(inst.hard_answers ==
              std::set<khg::EntityId>{*big.find_entity("x"), *big.find_entity("y")});
    }
}

TEST_CASE("sample_split honors counts, hard-answer filters and determinism") {
    auto full = testutil::random_graph({30, 4, 150, 2, 3}, 202);
    auto splits = khg::GraphSplits::make(full, 0.6, 0.2, 11);
    auto spec = sampler::SampleSpec::uniform(5, 4, 3, 11);

    auto valid = sampler::sample_split("valid", "2p", 4, splits, spec);
    REQUIRE(valid.size() == 4);
    for (const auto& instance : valid) {
        CHECK_FALSE(instance.hard_answers.empty());
        CHECK(query::answers(instance.tree, splits.valid) ==
              [&] {
                  std::set<khg::EntityId> all = instance.easy_answers;
                  all.insert(instance.hard_answers.begin(), instance.hard_answers.end());
                  return all;
              }());
    }

    auto train = sampler::sample_split("train", "1p", 5, splits, spec);
    REQUIRE(train.size() == 5);
    for (const auto& instance : train) {
        CHECK(instance.easy_answers.empty());
        CHECK_FALSE(instance.hard_answers.empty());
    }

    SUBCASE("same seed, same instances") {
        auto again = sampler::sample_split("valid", "2p", 4, splits, spec);
        REQUIRE(again.size() == valid.size());
        for (std::size_t i = 0; i < valid.size(); ++i) CHECK(again[i] == valid[i]);
    }
    SUBCASE("unknown split name") {
        CHECK_THROWS_AS(sampler::sample_split("dev", "2p", 1, splits, spec), Error);
    }
}

TEST_CASE("benchmark defaults follow the published table") {
    auto spec = sampler::SampleSpec::benchmark_defaults(1);
    CHECK(spec.counts["train"]["1p"] == 60000);
    CHECK(spec.counts["train"]["2p"] == 20000);
    CHECK(spec.counts["train"]["pni"] == 20000);
    CHECK(spec.counts["valid"]["1p"] == 10000);
    CHECK(spec.counts["test"]["pin"] == 10000);
}

TEST_CASE("sample_dataset writes one file per non-zero (split, type)") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hypercqa_sampler_test";
    fs::remove_all(dir);

    auto full = testutil::random_graph({30, 4, 150, 2, 3}, 303);
    auto splits = khg::GraphSplits::make(full, 0.6, 0.2, 5);
    sampler::SampleSpec spec;
    spec.seed = 5;
    spec.counts["train"]["1p"] = 6;
    spec.counts["train"]["2i"] = 0;  // no file expected
    spec.counts["valid"]["1p"] = 3;

    auto written = sampler::sample_dataset(spec, splits, dir.string());
    CHECK(fs::exists(dir / "train_1p.jsonl"));
    CHECK_FALSE(fs::exists(dir / "train_2i.jsonl"));
    CHECK(fs::exists(dir / "valid_1p.jsonl"));
    CHECK(fs::exists(dir / "stats.tsv"));
    CHECK(written.size() == 3);

    auto instances = query::read_query_file((dir / "train_1p.jsonl").string());
    CHECK(instances.size() == 6);

    std::ifstream stats(dir / "stats.tsv");
    std::string header;
    std::getline(stats, header);
    CHECK(header == "split\ttype\tcount\tmean_easy\tmean_hard");
    fs::remove_all(dir);
}
