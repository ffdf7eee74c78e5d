// Exercises the shared library through its C surface only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "hypercqa/hypercqa.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_CASE("version and error strings are always present") {
    CHECK(hcqa_version() != nullptr);
    CHECK(hcqa_last_error() != nullptr);
}

TEST_CASE("graph handles") {
    hcqa_graph* graph = nullptr;
    REQUIRE(hcqa_graph_parse("coauthor\ta\tb\tc\nworks_at\ta\tx\n", &graph) == HCQA_OK);
    REQUIRE(graph != nullptr);

    uint64_t entities = 0, relations = 0, edges = 0;
    CHECK(hcqa_graph_counts(graph, &entities, &relations, &edges) == HCQA_OK);
    CHECK(entities == 4);
    CHECK(relations == 2);
    CHECK(edges == 2);

    char* tsv = nullptr;
    REQUIRE(hcqa_graph_stats_tsv(graph, &tsv) == HCQA_OK);
    CHECK(std::strstr(tsv, "entities\t4") != nullptr);
    CHECK(std::strstr(tsv, "arity_3\t1") != nullptr);
    hcqa_string_free(tsv);

    SUBCASE("oracle answers a serialized tree") {
        char* answers = nullptr;
        REQUIRE(hcqa_oracle_answers(graph, R"({"op":"p","rel":0,"args":[{"e":0},{"e":1},"t"]})",
                                    &answers) == HCQA_OK);
        CHECK(std::string(answers) == "[2]");
        hcqa_string_free(answers);

        CHECK(hcqa_oracle_answers(graph, "not json", &answers) == HCQA_ERR_DATA);
        CHECK(std::string(hcqa_last_error()).find("ParseError") != std::string::npos);
    }

    hcqa_graph_close(graph);
}

TEST_CASE("failures set codes and messages") {
    hcqa_graph* graph = nullptr;
    CHECK(hcqa_graph_open("/definitely/not/there.tsv", &graph) == HCQA_ERR_DATA);
    CHECK(std::string(hcqa_last_error()).find("cannot open") != std::string::npos);
    CHECK(hcqa_graph_parse("r\ta\tb\nr\ta\n", &graph) == HCQA_ERR_DATA);
    CHECK(hcqa_graph_parse(nullptr, &graph) == HCQA_ERR_CONFIG);
    CHECK(hcqa_run("frobnicate", "") == HCQA_ERR_CONFIG);
    CHECK(hcqa_run("sample", "facts=x\nout=y\n") == HCQA_ERR_CONFIG);  // missing seed
    CHECK(hcqa_run("sample", "this is not key value") == HCQA_ERR_CONFIG);
}

TEST_CASE("the command runner drives a tiny end-to-end sample and oracle pass") {
    TempDir dir("hypercqa_capi_test");
    const fs::path facts = dir.path / "facts.tsv";

    // a deliberately well-connected little graph
    std::string text;
    for (int i = 0; i < 14; ++i) {
        text += "r\te" + std::to_string(i) + "\te" + std::to_string((i + 1) % 14) + "\n";
        text += "s\te" + std::to_string(i) + "\te" + std::to_string((i + 5) % 14) + "\te" +
                std::to_string((i + 9) % 14) + "\n";
    }
    write_file(facts, text);

    const std::string sample_cfg = "facts=" + facts.string() + "\nout=" + (dir.path / "data").string() +
                                   "\nseed=7\ncount_train=3\ncount_valid=2\ncount_test=2\n" +
                                   "count_train_1p=3\nonly_types=1p,2i\ntrain_frac=0.7\nvalid_frac=0.15\n";
    REQUIRE(hcqa_run("sample", sample_cfg.c_str()) == HCQA_OK);
    CHECK(fs::exists(dir.path / "data" / "train_1p.jsonl"));
    CHECK(fs::exists(dir.path / "data" / "stats.tsv"));
    CHECK(fs::exists(dir.path / "data" / "manifest.json"));
    CHECK(fs::exists(dir.path / "data" / "splits" / "test.tsv"));

    const std::string oracle_cfg = "facts=" + (dir.path / "data" / "splits" / "test.tsv").string() +
                                   "\nqueries=" + (dir.path / "data" / "test_1p.jsonl").string() +
                                   "\nout=" + (dir.path / "answers.jsonl").string() + "\n";
    REQUIRE(hcqa_run("oracle", oracle_cfg.c_str()) == HCQA_OK);
    CHECK(fs::exists(dir.path / "answers.jsonl"));

    std::ifstream in(dir.path / "answers.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            ++lines;
            CHECK(line.find("\"answers\":[") != std::string::npos);
        }
    }
    CHECK(lines == 2);

    SUBCASE("stats writes a file when asked") {
        const std::string stats_cfg =
            "facts=" + facts.string() + "\nout=" + (dir.path / "stats.tsv").string() + "\n";
        REQUIRE(hcqa_run("stats", stats_cfg.c_str()) == HCQA_OK);
        CHECK(fs::exists(dir.path / "stats.tsv"));
    }
}
