#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "eval/harness.hpp"
#include "helpers.hpp"
#include "sampler/sampler.hpp"

using namespace hypercqa;
using evalh::EvalReport;
using evalh::Ranker;
using khg::EntityId;
using query::QueryInstance;

namespace {

std::vector<EntityId> identity_ranking(std::size_t n) {
    std::vector<EntityId> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<EntityId>(i);
    return out;
}

}  // namespace

TEST_CASE("mrr_query on fixed rankings") {
    const auto ranked = identity_ranking(10);
    CHECK(evalh::mrr_query(ranked, {0}) == doctest::Approx(1.0).epsilon(1e-12));
    // hard answers at ranks 2 and 4
    CHECK(evalh::mrr_query(ranked, {1, 3}) == doctest::Approx(0.375).epsilon(1e-12));
    CHECK_THROWS_AS(evalh::mrr_query(ranked, {}), Error);
}

TEST_CASE("removing an easy answer lifts the hard answers below it") {
    // unfiltered ranking: e0, e1(easy), e2(hard) -> hard rank 3
    // filtered:           e0, e2(hard)           -> hard rank 2
    std::vector<EntityId> filtered = {0, 2, 3, 4};
    CHECK(evalh::mrr_query(filtered, {2}) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("filtering never pushes a hard answer down") {
    Rng rng(15);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 5 + rng.uniform_below(40);
        std::vector<EntityId> ranked = identity_ranking(n);
        rng.shuffle(ranked);

        std::set<EntityId> easy;
        std::set<EntityId> hard;
        for (EntityId e = 0; e < n; ++e) {
            const auto bucket = rng.uniform_below(4);
            if (bucket == 0) easy.insert(e);
            if (bucket == 1) hard.insert(e);
        }
        if (hard.empty()) continue;

        std::vector<EntityId> filtered;
        for (EntityId e : ranked) {
            if (!easy.contains(e)) filtered.push_back(e);
        }
        for (EntityId h : hard) {
            const auto before =
                std::find(ranked.begin(), ranked.end(), h) - ranked.begin();
            const auto after =
                std::find(filtered.begin(), filtered.end(), h) - filtered.begin();
            CHECK(after <= before);
        }
        CHECK(evalh::mrr_query(filtered, hard) >= evalh::mrr_query(ranked, hard) - 1e-15);
    }
}

TEST_CASE("the best reachable mrr for k hard answers is (1/k) sum 1/i") {
    const auto ranked = identity_ranking(30);
    for (std::size_t k = 1; k <= 6; ++k) {
        std::set<EntityId> hard;
        for (std::size_t i = 0; i < k; ++i) hard.insert(static_cast<EntityId>(i));
        double bound = 0.0;
        for (std::size_t i = 1; i <= k; ++i) bound += 1.0 / static_cast<double>(i);
        bound /= static_cast<double>(k);
        CHECK(evalh::mrr_query(ranked, hard) == doctest::Approx(bound).epsilon(1e-12));

        // any displacement can only lower it
        Rng rng(k);
        for (int trial = 0; trial < 20; ++trial) {
            auto shuffled = ranked;
            rng.shuffle(shuffled);
            CHECK(evalh::mrr_query(shuffled, hard) <= bound + 1e-15);
        }
    }
}

TEST_CASE("evaluate aggregates per type and averages AP/AN over present types") {
    // a ranker that always places the hard answers first
    Ranker perfect = [](const query::QueryNode&, const std::set<EntityId>&) {
        return identity_ranking(8);
    };

    auto make_instance = [](const std::string& type, std::set<EntityId> hard) {
        QueryInstance instance;
        instance.type = type;
        instance.hard_answers = std::move(hard);
        return instance;
    };

    std::map<std::string, std::vector<QueryInstance>> by_type;
    by_type["1p"] = {make_instance("1p", {0}), make_instance("1p", {0, 1})};
    by_type["2u"] = {make_instance("2u", {0})};
    by_type["2in"] = {make_instance("2in", {0})};
    by_type["3i"] = {};  // empty: omitted everywhere

    EvalReport report = evalh::evaluate(perfect, by_type);
    CHECK(report.total_instances == 4);
    CHECK(report.mrr_of("1p") == doctest::Approx((1.0 + 0.75) / 2.0));
    CHECK(report.mrr_of("2u") == doctest::Approx(1.0));
    CHECK(report.mrr_of("2in") == doctest::Approx(1.0));
    CHECK(std::isnan(report.mrr_of("3i")));
    CHECK(report.ap == doctest::Approx((0.875 + 1.0) / 2.0));  // 1p and 2u only
    CHECK(report.an == doctest::Approx(1.0));

    SUBCASE("hard filtering restores a perfect score for multi-answer instances") {
        EvalReport strict = evalh::evaluate(perfect, by_type, {true});
        CHECK(strict.mrr_of("1p") == doctest::Approx(1.0));
    }

    SUBCASE("instance order does not matter") {
        auto reordered = by_type;
        std::swap(reordered["1p"][0], reordered["1p"][1]);
        EvalReport again = evalh::evaluate(perfect, reordered);
        CHECK(again.to_tsv() == report.to_tsv());
    }

    SUBCASE("the report columns follow the canonical type order") {
        const std::string tsv = report.to_tsv();
        const std::string header = tsv.substr(0, tsv.find('\n'));
        CHECK(header == "metric\t1p\t2p\t3p\t2i\t3i\tpi\tip\t2u\tup\t2in\t3in\tinp\tpin\tpni\tAP\tAN");
    }
    SUBCASE("json mirrors the table") {
        const std::string json = report.to_json();
        CHECK(json.find("\"ap\"") != std::string::npos);
        CHECK(json.find("\"1p\"") != std::string::npos);
    }
}

TEST_CASE("a ranker that hides a hard answer is an error, not a silent zero") {
    Ranker partial = [](const query::QueryNode&, const std::set<EntityId>&) {
        return std::vector<EntityId>{0, 1};
    };
    QueryInstance instance;
    instance.type = "1p";
    instance.hard_answers = {5};
    std::map<std::string, std::vector<QueryInstance>> by_type{{"1p", {instance}}};
    CHECK_THROWS_AS(evalh::evaluate(partial, by_type), Error);
}

TEST_CASE("ablate trains every variant on the same data") {
    auto g = testutil::random_graph({12, 3, 50, 2, 3}, 19);
    auto splits = khg::GraphSplits{khg::KnowledgeHypergraph::from_edges(g, g.edges()),
                                   khg::KnowledgeHypergraph::from_edges(g, g.edges()),
                                   khg::KnowledgeHypergraph::from_edges(g, g.edges())};
    auto spec = sampler::SampleSpec::uniform(6, 0, 0, 2);

    std::vector<QueryInstance> train_set;
    for (const std::string& type : {"1p", "2i", "2u"}) {
        auto part = sampler::sample_split("train", type, 6, splits, spec);
        train_set.insert(train_set.end(), part.begin(), part.end());
    }
    std::map<std::string, std::vector<QueryInstance>> eval_sets;
    eval_sets["2i"] = sampler::sample_split("train", "2i", 4, splits, spec);

    model::ModelConfig base;
    base.dim = 8;
    base.heads = 2;
    base.layers = 1;
    base.epochs = 1;
    base.batch_size = 8;

    auto report = evalh::ablate(base, g.num_entities(), g.num_relations(), train_set, eval_sets,
                                {0, 1});
    REQUIRE(report.rows.size() == 8);  // 4 variants x 2 seeds
    for (const auto& row : report.rows) {
        CHECK(row.report.config_echo.at("dataset_hash") == report.dataset_hash);
    }
    CHECK(evalh::ablation_variants() ==
          std::vector<std::string>{"full", "fuzzy", "no-abs-pe", "var-cardinality"});
    CHECK_FALSE(std::isnan(report.mean_over("full", {"2i"})));

    const std::string tsv = report.to_tsv();
    CHECK(tsv.find("full\t0\t") != std::string::npos);
    CHECK(tsv.find("var-cardinality\t1\t") != std::string::npos);
}
