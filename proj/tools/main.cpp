// Command-line front end. All work happens behind the shared library's C
// interface; this binary only parses flags, assembles the key=value
// configuration (config file first, explicit flags override) and maps
// hcqa_status onto exit codes: 1 for configuration errors, 2 for data
// errors.

#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypercqa/hypercqa.h"

namespace {

struct CommandArgs {
    CLI::App* cmd = nullptr;
    std::string config_file;
    struct Value {
        std::string key;
        std::shared_ptr<std::string> holder;
        CLI::Option* option;
    };
    struct Flag {
        std::string key;
        std::shared_ptr<bool> holder;
    };
    std::vector<Value> values;
    std::vector<Flag> flags;

    CLI::Option* opt(const std::string& name, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<std::string>();
        CLI::Option* option = cmd->add_option(name, *holder, help);
        values.push_back({key, holder, option});
        return option;
    }

    void flag(const std::string& name, const std::string& key, const std::string& help) {
        auto holder = std::make_shared<bool>(false);
        cmd->add_flag(name, *holder, help);
        flags.push_back({key, holder});
    }

    std::string config_text() const {
        std::string text;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) {
                throw CLI::ValidationError("--config", "cannot open " + config_file);
            }
            std::ostringstream buffer;
            buffer << in.rdbuf();
            text += buffer.str();
            text += '\n';
        }
        for (const Value& value : values) {
            if (value.option->count() > 0) text += value.key + "=" + *value.holder + "\n";
        }
        for (const Flag& flag : flags) {
            if (*flag.holder) text += flag.key + "=1\n";
        }
        return text;
    }
};

void add_model_options(CommandArgs& args) {
    args.opt("--dim", "dim", "embedding width");
    args.opt("--layers", "layers", "encoder layers");
    args.opt("--heads", "heads", "attention heads");
    args.opt("--ffn-multiplier", "ffn_multiplier", "feed-forward width multiplier");
    args.opt("--dropout", "dropout", "dropout rate");
    args.opt("--epochs", "epochs", "training epochs");
    args.opt("--batch", "batch", "batch size");
    args.opt("--lr", "lr", "learning rate");
    args.opt("--exclude-types", "exclude_types", "query types withheld from training (csv)");
    args.flag("--ood", "ood", "withhold 3p,3in,3i,inp from training");
    args.flag("--full-train", "full_train", "train on every query type");
    args.flag("--fuzzy", "fuzzy", "fuzzy logical operations instead of the logical encoder");
    args.flag("--no-abs-pe", "no_abs_pe", "drop the absolute positional encoding");
    args.flag("--variadic-card", "variadic_card", "logical encoder consumes all children at once");
    args.flag("--tied-decoder", "tied_decoder", "score with entity-table inner products");
}

int exit_code(hcqa_status status) {
    switch (status) {
        case HCQA_OK: return 0;
        case HCQA_ERR_CONFIG: return 1;
        case HCQA_ERR_DATA: return 2;
        default: return 3;
    }
}

int run_stats_to_stdout(const std::string& facts) {
    hcqa_graph* graph = nullptr;
    hcqa_status status = hcqa_graph_open(facts.c_str(), &graph);
    if (status != HCQA_OK) {
        std::fprintf(stderr, "hypercqa: %s\n", hcqa_last_error());
        return exit_code(status);
    }
    char* tsv = nullptr;
    status = hcqa_graph_stats_tsv(graph, &tsv);
    if (status == HCQA_OK) {
        std::fputs(tsv, stdout);
        hcqa_string_free(tsv);
    } else {
        std::fprintf(stderr, "hypercqa: %s\n", hcqa_last_error());
    }
    hcqa_graph_close(graph);
    return exit_code(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("hypercqa ") + hcqa_version() +
                 " — complex query answering over knowledge hypergraphs"};
    app.require_subcommand(1);

    std::vector<std::unique_ptr<CommandArgs>> commands;
    auto make = [&](const std::string& name, const std::string& help) -> CommandArgs& {
        auto args = std::make_unique<CommandArgs>();
        args->cmd = app.add_subcommand(name, help);
        args->cmd->add_option("--config", args->config_file, "key=value config file");
        commands.push_back(std::move(args));
        return *commands.back();
    };

    CommandArgs& sample = make("sample", "sample query datasets from a fact file");
    sample.opt("--facts", "facts", "tab-separated fact file");
    sample.opt("--out", "out", "output directory");
    sample.opt("--seed", "seed", "RNG seed");
    sample.opt("--train-frac", "train_frac", "train edge fraction (default 0.8)");
    sample.opt("--valid-frac", "valid_frac", "extra valid edge fraction (default 0.1)");
    sample.opt("--count-train", "count_train", "instances per train type");
    sample.opt("--count-train-1p", "count_train_1p", "instances for train 1p");
    sample.opt("--count-valid", "count_valid", "instances per valid type");
    sample.opt("--count-test", "count_test", "instances per test type");
    sample.opt("--retry-budget", "retry_budget", "draws per instance before giving up");
    sample.opt("--only-types", "only_types", "restrict to these query types (csv)");

    CommandArgs& train = make("train", "train the two-stage model");
    train.opt("--data", "data", "dataset directory from `sample`");
    train.opt("--out", "out", "checkpoint path");
    train.opt("--seed", "seed", "RNG seed");
    train.opt("--score", "score", "ranking score: cosine | decoder-logits");
    add_model_options(train);

    CommandArgs& eval = make("eval", "evaluate a checkpoint with filtered MRR");
    eval.opt("--checkpoint", "checkpoint", "trained checkpoint");
    eval.opt("--data", "data", "dataset directory");
    eval.opt("--out", "out", "report directory");
    eval.opt("--split", "split", "valid | test (default test)");
    eval.opt("--score", "score", "ranking score: cosine | decoder-logits");
    eval.flag("--filter-hard", "filter_hard", "also filter the other hard answers");

    CommandArgs& oracle = make("oracle", "exact answers for a query file");
    oracle.opt("--facts", "facts", "fact file to answer against");
    oracle.opt("--queries", "queries", "query .jsonl file");
    oracle.opt("--out", "out", "answers .jsonl path");

    CommandArgs& baseline = make("baseline", "closed-form message baseline");
    baseline.opt("--data", "data", "dataset directory");
    baseline.opt("--out", "out", "output directory");
    baseline.opt("--seed", "seed", "RNG seed");
    baseline.opt("--family", "family", "m-distmult | m-cp | hype | hsimple");
    baseline.opt("--dim", "dim", "embedding width");
    baseline.opt("--epochs", "epochs", "pretraining epochs");
    baseline.opt("--batch", "batch", "batch size");
    baseline.opt("--lr", "lr", "learning rate");
    baseline.opt("--split", "split", "valid | test (default test)");
    baseline.opt("--shift-divisor", "shift_divisor", "hsimple rotation divisor");

    CommandArgs& ablate = make("ablate", "train and compare the model variants");
    ablate.opt("--data", "data", "dataset directory");
    ablate.opt("--out", "out", "output directory");
    ablate.opt("--seed", "seed", "base RNG seed");
    ablate.opt("--seeds", "seeds", "comma-separated seeds (default 0,1,2)");
    ablate.opt("--split", "split", "evaluation split (default valid)");
    add_model_options(ablate);

    CommandArgs& stats = make("stats", "entity/relation/edge counts and arity histogram");
    stats.opt("--facts", "facts", "fact file");
    stats.opt("--out", "out", "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // bad flags are configuration errors
    }

    for (const auto& args : commands) {
        if (!args->cmd->parsed()) continue;
        const std::string name = args->cmd->get_name();
        std::string config;
        try {
            config = args->config_text();
        } catch (const CLI::Error& e) {
            std::fprintf(stderr, "hypercqa: %s\n", e.what());
            return 1;
        }
        if (name == "stats" && config.find("out=") == std::string::npos) {
            // print to stdout; no artifacts to write
            std::string facts;
            for (const auto& value : args->values) {
                if (value.key == "facts") facts = *value.holder;
            }
            return run_stats_to_stdout(facts);
        }
        const hcqa_status status = hcqa_run(name.c_str(), config.c_str());
        if (status != HCQA_OK) {
            std::fprintf(stderr, "hypercqa: %s\n", hcqa_last_error());
        }
        return exit_code(status);
    }
    return 1;
}
