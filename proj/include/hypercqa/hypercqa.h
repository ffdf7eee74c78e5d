/* hypercqa — complex query answering over ordered knowledge hypergraphs.
 *
 * C interface of the shared library. All functions return hcqa_status;
 * on failure hcqa_last_error() carries a one-line diagnostic for the
 * calling thread. Heap strings handed out through char** parameters must
 * be released with hcqa_string_free().
 */
#ifndef HYPERCQA_H
#define HYPERCQA_H

#include <stdint.h>

#if defined(_WIN32)
#define HCQA_API __declspec(dllexport)
#else
#define HCQA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hcqa_status {
    HCQA_OK = 0,
    HCQA_ERR_CONFIG = 1, /* bad flags, bad keys, missing seed, ... */
    HCQA_ERR_DATA = 2,   /* unreadable or malformed inputs */
    HCQA_ERR_INTERNAL = 3,
} hcqa_status;

HCQA_API const char* hcqa_version(void);

/* Message for the last failing call on this thread; never NULL. */
HCQA_API const char* hcqa_last_error(void);

HCQA_API void hcqa_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Fact stores                                                         */

typedef struct hcqa_graph hcqa_graph;

/* Loads a tab-separated fact file (relation, then entities; '#' comments;
 * duplicates collapse). */
HCQA_API hcqa_status hcqa_graph_open(const char* facts_path, hcqa_graph** out_graph);

/* Same, from an in-memory listing. */
HCQA_API hcqa_status hcqa_graph_parse(const char* facts_text, hcqa_graph** out_graph);

HCQA_API void hcqa_graph_close(hcqa_graph* graph);

HCQA_API hcqa_status hcqa_graph_counts(const hcqa_graph* graph, uint64_t* entities,
                                       uint64_t* relations, uint64_t* edges);

/* Entity/relation/edge counts plus an arity histogram, tab-separated. */
HCQA_API hcqa_status hcqa_graph_stats_tsv(const hcqa_graph* graph, char** out_tsv);

/* Exact answers of one serialized query tree (JSON, as written in query
 * files) as a JSON array of entity ids. */
HCQA_API hcqa_status hcqa_oracle_answers(const hcqa_graph* graph, const char* tree_json,
                                         char** out_json);

/* ------------------------------------------------------------------ */
/* Command runner                                                      */

/* Runs one command with a key=value configuration block (same format as
 * the CLI's --config files). Commands:
 *   sample | train | eval | oracle | baseline | ablate | stats
 * Artifacts land on disk per the config; every command writes a
 * manifest.json with the config echo and input hashes. */
HCQA_API hcqa_status hcqa_run(const char* command, const char* config_text);

#ifdef __cplusplus
}
#endif

#endif /* HYPERCQA_H */
