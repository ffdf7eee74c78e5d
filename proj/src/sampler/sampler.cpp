#include "sampler/sampler.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/hash.hpp"
#include "query/oracle.hpp"

namespace hypercqa::sampler {

using khg::EntityId;
using khg::Hyperedge;
using khg::KnowledgeHypergraph;
using query::Arg;
using query::QueryNode;
using query::QueryStructure;

SampleSpec SampleSpec::benchmark_defaults(std::uint64_t seed) {
    SampleSpec spec;
    spec.seed = seed;
    for (const std::string& type : query::query_type_names()) {
        spec.counts["train"][type] = type == "1p" ? 60000 : 20000;
        spec.counts["valid"][type] = 10000;
        spec.counts["test"][type] = 10000;
    }
    return spec;
}

SampleSpec SampleSpec::uniform(std::uint64_t train, std::uint64_t valid, std::uint64_t test,
                               std::uint64_t seed) {
    SampleSpec spec;
    spec.seed = seed;
    for (const std::string& type : query::query_type_names()) {
        spec.counts["train"][type] = train;
        spec.counts["valid"][type] = valid;
        spec.counts["test"][type] = test;
    }
    return spec;
}

namespace {

struct AttemptFailed {};  // internal resample signal

struct Grounder {
    const KnowledgeHypergraph& graph;
    Rng& rng;
    GroundTrace* trace;

    QueryNode ground_node(const QueryStructure& s, EntityId answer) {
        switch (s.op) {
            case QueryStructure::Op::Projection: return ground_projection(s, answer);
            case QueryStructure::Op::Intersection:
            case QueryStructure::Op::Union: return ground_logical(s, answer);
        }
        throw AttemptFailed{};
    }

    QueryNode ground_projection(const QueryStructure& s, EntityId answer) {
        const auto& slots = graph.edges_containing(answer);
        if (slots.empty()) throw AttemptFailed{};
        const auto [edge_idx, target_pos] = slots[rng.uniform_below(slots.size())];
        const Hyperedge& edge = graph.edges()[edge_idx];

        QueryNode node;
        node.kind = QueryNode::Kind::Projection;
        node.relation = edge.relation;
        node.negated = s.negated;
        node.args.resize(edge.entities.size());
        node.args[target_pos] = Arg::target();

        if (!s.children.empty()) {
            // one feeding subtree: give it a slot other than the target
            if (edge.entities.size() < 2) throw AttemptFailed{};
            std::uint32_t sub_pos =
                static_cast<std::uint32_t>(rng.uniform_below(edge.entities.size() - 1));
            if (sub_pos >= target_pos) ++sub_pos;
            node.args[sub_pos] = Arg::sub(0);
            node.children.push_back(ground_node(s.children[0], edge.entities[sub_pos]));
            for (std::uint32_t pos = 0; pos < edge.entities.size(); ++pos) {
                if (pos != target_pos && pos != sub_pos) {
                    node.args[pos] = Arg::constant(edge.entities[pos]);
                }
            }
        } else {
            for (std::uint32_t pos = 0; pos < edge.entities.size(); ++pos) {
                if (pos != target_pos) node.args[pos] = Arg::constant(edge.entities[pos]);
            }
        }
        if (trace != nullptr) trace->push_back({edge_idx, target_pos, answer});
        return node;
    }

    QueryNode ground_logical(const QueryStructure& s, EntityId answer) {
        QueryNode node;
        node.kind = s.op == QueryStructure::Op::Intersection ? QueryNode::Kind::Intersection
                                                             : QueryNode::Kind::Union;
        bool has_negated = false;
        for (const QueryStructure& child : s.children) {
            if (child.negated) {
                has_negated = true;
                node.children.push_back(ground_node(child, decoy_entity(answer)));
            } else {
                node.children.push_back(ground_node(child, answer));
            }
        }

        // Degenerate branches teach nothing: identical (relation, bindings)
        // patterns are rejected, ignoring the negation flag.
        std::vector<std::string> canon;
        for (const QueryNode& child : node.children) {
            QueryNode plain = child;
            plain.negated = false;
            canon.push_back(query::serialize(plain));
        }
        std::sort(canon.begin(), canon.end());
        if (std::adjacent_find(canon.begin(), canon.end()) != canon.end()) throw AttemptFailed{};

        // A decoy-grounded negated branch may still exclude the answer;
        // keep only groundings the oracle confirms.
        if (has_negated) {
            auto confirmed = query::answers(node, graph);
            if (!confirmed.contains(answer)) throw AttemptFailed{};
        }
        return node;
    }

    EntityId decoy_entity(EntityId avoid) {
        if (graph.num_entities() < 2) throw AttemptFailed{};
        EntityId decoy = static_cast<EntityId>(rng.uniform_below(graph.num_entities() - 1));
        if (decoy >= avoid) ++decoy;
        return decoy;
    }
};

}  // namespace

GroundedQuery ground(const QueryStructure& structure, const KnowledgeHypergraph& graph, Rng& rng,
                     std::uint32_t retry_budget, GroundTrace* trace) {
    if (graph.num_edges() == 0) throw Error(ErrorKind::EmptyInput, "cannot ground on empty graph");
    for (std::uint32_t attempt = 0; attempt < retry_budget; ++attempt) {
        GroundTrace local_trace;
        Grounder grounder{graph, rng, trace != nullptr ? &local_trace : nullptr};
        EntityId root = static_cast<EntityId>(rng.uniform_below(graph.num_entities()));
        try {
            QueryNode tree = grounder.ground_node(structure, root);
            if (trace != nullptr) *trace = std::move(local_trace);
            return {std::move(tree), root};
        } catch (const AttemptFailed&) {
            continue;
        }
    }
    throw Error(ErrorKind::SamplingFailed,
                "no grounding after " + std::to_string(retry_budget) + " attempts");
}

query::QueryInstance label(const std::string& type, QueryNode tree,
                           const KnowledgeHypergraph& small, const KnowledgeHypergraph& big) {
    query::QueryInstance instance;
    instance.type = type;
    if (&small == &big) {
        // train convention: no smaller graph exists, every answer is a target
        instance.hard_answers = query::answers(tree, big);
    } else {
        instance.easy_answers = query::answers(tree, small);
        for (EntityId e : query::answers(tree, big)) {
            if (!instance.easy_answers.contains(e)) instance.hard_answers.insert(e);
        }
    }
    instance.tree = std::move(tree);
    return instance;
}

namespace {

std::uint64_t split_tag(const std::string& split) {
    if (split == "train") return 1;
    if (split == "valid") return 2;
    if (split == "test") return 3;
    throw Error(ErrorKind::ConfigError, "unknown split '" + split + "'");
}

}  // namespace

std::vector<query::QueryInstance> sample_split(const std::string& split, const std::string& type,
                                               std::uint64_t count, const khg::GraphSplits& splits,
                                               const SampleSpec& spec) {
    const QueryStructure structure = query::query_template(type);
    const std::uint64_t type_tag =
        fnv1a64(type);  // stable across runs, independent of list order
    const KnowledgeHypergraph* ground_graph = nullptr;
    const KnowledgeHypergraph* easy_graph = nullptr;
    if (split == "train") {
        ground_graph = &splits.train;
        easy_graph = &splits.train;
    } else if (split == "valid") {
        ground_graph = &splits.valid;
        easy_graph = &splits.train;
    } else {
        (void)split_tag(split);  // validates the name
        ground_graph = &splits.test;
        easy_graph = &splits.valid;
    }

    std::vector<query::QueryInstance> instances;
    instances.reserve(count);
    for (std::uint64_t index = 0; index < count; ++index) {
        Rng rng(derive_seed({spec.seed, split_tag(split), type_tag, index}));
        bool accepted = false;
        for (std::uint32_t attempt = 0; attempt < spec.retry_budget && !accepted; ++attempt) {
            GroundedQuery grounded = ground(structure, *ground_graph, rng, spec.retry_budget);
            query::QueryInstance instance =
                label(type, std::move(grounded.tree), *easy_graph, *ground_graph);
            // valid/test need at least one answer that requires unseen edges
            if (split != "train" && instance.hard_answers.empty()) continue;
            if (split == "train" && instance.hard_answers.empty()) continue;
            instances.push_back(std::move(instance));
            accepted = true;
        }
        if (!accepted) {
            throw Error(ErrorKind::SamplingExhausted,
                        split + "/" + type + " instance " + std::to_string(index) + " after " +
                            std::to_string(spec.retry_budget) + " draws");
        }
    }
    return instances;
}

std::vector<std::string> sample_dataset(const SampleSpec& spec, const khg::GraphSplits& splits,
                                        const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;

    std::ostringstream stats;
    stats << "split\ttype\tcount\tmean_easy\tmean_hard\n";
    for (const char* split_name : {"train", "valid", "test"}) {
        const std::string split(split_name);
        auto split_it = spec.counts.find(split);
        if (split_it == spec.counts.end()) continue;
        for (const std::string& type : query::query_type_names()) {
            auto type_it = split_it->second.find(type);
            if (type_it == split_it->second.end() || type_it->second == 0) continue;
            auto instances = sample_split(split, type, type_it->second, splits, spec);

            const fs::path path = fs::path(out_dir) / (split + "_" + type + ".jsonl");
            query::write_query_file(path.string(), instances);
            written.push_back(path.string());

            double easy_sum = 0.0;
            double hard_sum = 0.0;
            for (const auto& instance : instances) {
                easy_sum += static_cast<double>(instance.easy_answers.size());
                hard_sum += static_cast<double>(instance.hard_answers.size());
            }
            const double n = static_cast<double>(instances.size());
            stats << split << '\t' << type << '\t' << instances.size() << '\t'
                  << easy_sum / n << '\t' << hard_sum / n << '\n';
        }
    }

    const fs::path stats_path = fs::path(out_dir) / "stats.tsv";
    std::ofstream out(stats_path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + stats_path.string());
    out << stats.str();
    written.push_back(stats_path.string());
    return written;
}

}  // namespace hypercqa::sampler
