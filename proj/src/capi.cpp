#include "hypercqa/hypercqa.h"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "common/version.hpp"
#include "khg/graph.hpp"
#include "query/oracle.hpp"
#include "run/commands.hpp"

using hypercqa::Error;
using hypercqa::ErrorKind;

struct hcqa_graph {
    hypercqa::khg::KnowledgeHypergraph rep;
};

namespace {

thread_local std::string g_last_error;

hcqa_status status_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
        case ErrorKind::UnknownQueryType:
            return HCQA_ERR_CONFIG;
        case ErrorKind::ArityMismatch:
        case ErrorKind::EmptyInput:
        case ErrorKind::UnknownEntity:
        case ErrorKind::UnknownRelation:
        case ErrorKind::PositionOutOfRange:
        case ErrorKind::ParseError:
        case ErrorKind::InvalidQuery:
        case ErrorKind::SamplingFailed:
        case ErrorKind::SamplingExhausted:
        case ErrorKind::EmptyDataset:
        case ErrorKind::IoError:
            return HCQA_ERR_DATA;
        default:
            return HCQA_ERR_INTERNAL;
    }
}

template <typename Fn>
hcqa_status guarded(Fn&& fn) {
    try {
        fn();
        return HCQA_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return HCQA_ERR_INTERNAL;
    }
}

char* copy_string(const std::string& text) {
    char* out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* hcqa_version(void) { return hypercqa::kVersion; }

const char* hcqa_last_error(void) { return g_last_error.c_str(); }

void hcqa_string_free(char* s) { delete[] s; }

hcqa_status hcqa_graph_open(const char* facts_path, hcqa_graph** out_graph) {
    return guarded([&] {
        if (facts_path == nullptr || out_graph == nullptr) {
            throw Error(ErrorKind::ConfigError, "null argument");
        }
        std::ifstream in(facts_path, std::ios::binary);
        if (!in) throw Error(ErrorKind::IoError, std::string("cannot open ") + facts_path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        *out_graph =
            new hcqa_graph{hypercqa::khg::KnowledgeHypergraph::parse_facts(buffer.str())};
    });
}

hcqa_status hcqa_graph_parse(const char* facts_text, hcqa_graph** out_graph) {
    return guarded([&] {
        if (facts_text == nullptr || out_graph == nullptr) {
            throw Error(ErrorKind::ConfigError, "null argument");
        }
        *out_graph = new hcqa_graph{hypercqa::khg::KnowledgeHypergraph::parse_facts(facts_text)};
    });
}

void hcqa_graph_close(hcqa_graph* graph) { delete graph; }

hcqa_status hcqa_graph_counts(const hcqa_graph* graph, uint64_t* entities, uint64_t* relations,
                              uint64_t* edges) {
    return guarded([&] {
        if (graph == nullptr) throw Error(ErrorKind::ConfigError, "null graph");
        if (entities != nullptr) *entities = graph->rep.num_entities();
        if (relations != nullptr) *relations = graph->rep.num_relations();
        if (edges != nullptr) *edges = graph->rep.num_edges();
    });
}

hcqa_status hcqa_graph_stats_tsv(const hcqa_graph* graph, char** out_tsv) {
    return guarded([&] {
        if (graph == nullptr || out_tsv == nullptr) {
            throw Error(ErrorKind::ConfigError, "null argument");
        }
        *out_tsv = copy_string(graph->rep.stats_tsv());
    });
}

hcqa_status hcqa_oracle_answers(const hcqa_graph* graph, const char* tree_json, char** out_json) {
    return guarded([&] {
        if (graph == nullptr || tree_json == nullptr || out_json == nullptr) {
            throw Error(ErrorKind::ConfigError, "null argument");
        }
        hypercqa::query::QueryNode tree = hypercqa::query::deserialize_tree(tree_json);
        const auto violations = hypercqa::query::validate(tree, &graph->rep);
        if (!violations.empty()) {
            throw Error(ErrorKind::InvalidQuery, violations.front());
        }
        nlohmann::json answers = hypercqa::query::answers(tree, graph->rep);
        *out_json = copy_string(answers.dump());
    });
}

hcqa_status hcqa_run(const char* command, const char* config_text) {
    return guarded([&] {
        if (command == nullptr) throw Error(ErrorKind::ConfigError, "null command");
        hypercqa::run::Config config =
            hypercqa::run::parse_config_text(config_text == nullptr ? "" : config_text);
        hypercqa::run::run_command(command, config);
    });
}

}  // extern "C"
