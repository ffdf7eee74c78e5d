#include "run/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "baseline/hlmpnn.hpp"
#include "common/hash.hpp"
#include "common/version.hpp"
#include "eval/harness.hpp"
#include "khg/splits.hpp"
#include "model/lkhgt.hpp"
#include "query/oracle.hpp"
#include "sampler/sampler.hpp"
#include "tensor/checkpoint.hpp"

namespace hypercqa::run {

namespace fs = std::filesystem;

Config parse_config_text(const std::string& text) {
    Config config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ConfigError,
                        "line " + std::to_string(line_no) + ": expected key=value");
        }
        config[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return config;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << content;
}

// The HYPERCQA_OUT environment variable re-roots relative output paths.
std::string resolve_out(const std::string& path) {
    const char* root = std::getenv("HYPERCQA_OUT");
    if (root == nullptr || *root == '\0' || path.empty() || fs::path(path).is_absolute()) {
        return path;
    }
    return (fs::path(root) / path).string();
}

struct ConfigReader {
    const Config& config;
    const char* command;

    std::string require(const std::string& key) const {
        auto it = config.find(key);
        if (it == config.end() || it->second.empty()) {
            throw Error(ErrorKind::ConfigError,
                        std::string(command) + " needs '" + key + "'");
        }
        return it->second;
    }
    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = config.find(key);
        return it == config.end() || it->second.empty() ? fallback : it->second;
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = config.find(key);
        return it == config.end() || it->second.empty() ? fallback : std::stoull(it->second);
    }
    double get_f64(const std::string& key, double fallback) const {
        auto it = config.find(key);
        return it == config.end() || it->second.empty() ? fallback : std::stod(it->second);
    }
    bool get_bool(const std::string& key, bool fallback = false) const {
        auto it = config.find(key);
        if (it == config.end() || it->second.empty()) return fallback;
        return it->second == "1" || it->second == "true" || it->second == "yes";
    }
    std::uint64_t require_seed() const {
        auto it = config.find("seed");
        if (it == config.end() || it->second.empty()) {
            throw Error(ErrorKind::ConfigError,
                        std::string(command) + " needs an explicit seed");
        }
        return std::stoull(it->second);
    }
};

void write_manifest(const std::string& out_dir, const std::string& command, const Config& config,
                    const std::map<std::string, std::string>& input_files,
                    const std::vector<std::string>& outputs) {
    nlohmann::ordered_json manifest;
    manifest["command"] = command;
    manifest["version"] = kVersion;
    manifest["config"] = config;
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& [label, path] : input_files) {
        inputs[label] = {{"path", path}, {"hash", hash_file(path)}};
    }
    manifest["inputs"] = std::move(inputs);
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const std::string& path : outputs) outs.push_back(path);
    manifest["outputs"] = std::move(outs);
    write_file((fs::path(out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string::npos) end = text.size();
        if (end > start) out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

model::ModelConfig model_config_from(const ConfigReader& reader) {
    model::ModelConfig config;
    config.dim = reader.get_u64("dim", config.dim);
    config.layers = reader.get_u64("layers", config.layers);
    config.heads = reader.get_u64("heads", config.heads);
    config.ffn_multiplier = reader.get_u64("ffn_multiplier", config.ffn_multiplier);
    config.dropout = reader.get_f64("dropout", config.dropout);
    config.epochs = reader.get_u64("epochs", config.epochs);
    config.batch_size = reader.get_u64("batch", config.batch_size);
    config.lr = reader.get_f64("lr", config.lr);
    config.seed = reader.require_seed();
    if (reader.get_bool("fuzzy")) config.logical_mode = model::LogicalMode::Fuzzy;
    if (reader.get_bool("no_abs_pe")) config.positional = model::PositionalMode::None;
    if (reader.get_bool("variadic_card")) config.cardinality = model::CardinalityMode::Variadic;
    if (reader.get_bool("tied_decoder")) config.tied_decoder = true;
    if (reader.get("score", "cosine") == "decoder-logits") {
        config.score = model::ScoreMode::DecoderLogits;
    }
    if (reader.get_bool("ood")) config.exclude_types = model::ood_excluded_types();
    for (const std::string& type : split_csv(reader.get("exclude_types", ""))) {
        config.exclude_types.push_back(type);
    }
    if (reader.get_bool("full_train")) config.exclude_types.clear();
    return config;
}

struct LoadedData {
    khg::GraphSplits splits;
    std::string test_facts_path;
};

LoadedData load_splits_dir(const std::string& data_dir) {
    const fs::path base = fs::path(data_dir) / "splits";
    LoadedData data{khg::GraphSplits::load((base / "train.tsv").string(),
                                           (base / "valid.tsv").string(),
                                           (base / "test.tsv").string()),
                    (base / "test.tsv").string()};
    return data;
}

std::map<std::string, std::vector<query::QueryInstance>> load_query_files(
    const std::string& data_dir, const std::string& split,
    std::map<std::string, std::string>* manifest_inputs) {
    std::map<std::string, std::vector<query::QueryInstance>> by_type;
    for (const std::string& type : query::query_type_names()) {
        const fs::path path = fs::path(data_dir) / (split + "_" + type + ".jsonl");
        if (!fs::exists(path)) continue;
        by_type[type] = query::read_query_file(path.string());
        if (manifest_inputs != nullptr) {
            (*manifest_inputs)[split + "_" + type] = path.string();
        }
    }
    return by_type;
}

// ---------------------------------------------------------------------------

std::string cmd_sample(const Config& config) {
    ConfigReader reader{config, "sample"};
    const std::string facts_path = reader.require("facts");
    const std::string out_dir = resolve_out(reader.require("out"));
    const std::uint64_t seed = reader.require_seed();

    khg::KnowledgeHypergraph full = khg::KnowledgeHypergraph::parse_facts(read_file(facts_path));
    khg::GraphSplits splits = khg::GraphSplits::make(full, reader.get_f64("train_frac", 0.8),
                                                     reader.get_f64("valid_frac", 0.1), seed);

    sampler::SampleSpec spec = sampler::SampleSpec::benchmark_defaults(seed);
    spec.retry_budget = static_cast<std::uint32_t>(reader.get_u64("retry_budget", 100));
    if (config.count("count_train") != 0 || config.count("count_valid") != 0 ||
        config.count("count_test") != 0) {
        const std::uint64_t train = reader.get_u64("count_train", 20000);
        spec = sampler::SampleSpec::uniform(train, reader.get_u64("count_valid", 10000),
                                            reader.get_u64("count_test", 10000), seed);
        spec.retry_budget = static_cast<std::uint32_t>(reader.get_u64("retry_budget", 100));
        spec.counts["train"]["1p"] = reader.get_u64("count_train_1p", 3 * train);
    }
    for (const std::string& type : split_csv(reader.get("only_types", ""))) {
        (void)query::query_template(type);  // validate the name
    }
    if (!reader.get("only_types", "").empty()) {
        const auto keep = split_csv(reader.get("only_types", ""));
        for (const char* split : {"train", "valid", "test"}) {
            for (const std::string& type : query::query_type_names()) {
                if (std::find(keep.begin(), keep.end(), type) == keep.end()) {
                    spec.counts[split][type] = 0;
                }
            }
        }
    }

    fs::create_directories(fs::path(out_dir) / "splits");
    std::vector<std::string> outputs = sampler::sample_dataset(spec, splits, out_dir);
    const std::string train_tsv = (fs::path(out_dir) / "splits" / "train.tsv").string();
    const std::string valid_tsv = (fs::path(out_dir) / "splits" / "valid.tsv").string();
    const std::string test_tsv = (fs::path(out_dir) / "splits" / "test.tsv").string();
    write_file(train_tsv, splits.train.serialize());
    write_file(valid_tsv, splits.valid.serialize());
    write_file(test_tsv, splits.test.serialize());
    outputs.insert(outputs.end(), {train_tsv, valid_tsv, test_tsv});

    write_manifest(out_dir, "sample", config, {{"facts", facts_path}}, outputs);
    return "";
}

std::string cmd_train(const Config& config) {
    ConfigReader reader{config, "train"};
    const std::string data_dir = reader.require("data");
    const std::string out_path = resolve_out(reader.require("out"));
    model::ModelConfig model_config = model_config_from(reader);

    LoadedData data = load_splits_dir(data_dir);
    std::map<std::string, std::string> inputs{{"test_facts", data.test_facts_path}};
    auto by_type = load_query_files(data_dir, "train", &inputs);
    std::vector<query::QueryInstance> dataset;
    for (auto& [type, instances] : by_type) {
        for (auto& instance : instances) dataset.push_back(std::move(instance));
    }

    model::LkhgtModel m(data.splits.test.num_entities(), data.splits.test.num_relations(),
                        model_config);
    std::vector<model::EpochStats> curve = m.train(dataset);

    const fs::path out_file(out_path);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    std::map<std::string, std::string> extra;
    extra["vocab_hash"] = hex64(data.splits.test.vocab_hash());
    m.save(out_path, extra);

    std::ostringstream log;
    log << "epoch\tloss\ttrain_mrr_sample\n";
    log.setf(std::ios::fixed);
    log.precision(6);
    for (const model::EpochStats& stats : curve) {
        log << stats.epoch << '\t' << stats.loss << '\t' << stats.sample_mrr << '\n';
    }
    write_file(out_path + ".log.tsv", log.str());

    const std::string manifest_dir =
        out_file.has_parent_path() ? out_file.parent_path().string() : ".";
    write_manifest(manifest_dir, "train", config, inputs,
                   {out_path, out_path + ".manifest.json", out_path + ".log.tsv"});
    return "";
}

std::string cmd_eval(const Config& config) {
    ConfigReader reader{config, "eval"};
    const std::string checkpoint = reader.require("checkpoint");
    const std::string data_dir = reader.require("data");
    const std::string out_dir = resolve_out(reader.require("out"));
    const std::string split = reader.get("split", "test");

    model::LkhgtModel m = model::LkhgtModel::load(checkpoint);
    if (config.count("score") != 0) {
        m.set_score_mode(reader.get("score", "cosine") == "decoder-logits"
                             ? model::ScoreMode::DecoderLogits
                             : model::ScoreMode::Cosine);
    }

    LoadedData data = load_splits_dir(data_dir);
    const auto meta = tensor::load_manifest_extra(checkpoint);
    auto vocab_it = meta.find("vocab_hash");
    if (vocab_it != meta.end() && vocab_it->second != hex64(data.splits.test.vocab_hash())) {
        throw Error(ErrorKind::ConfigError, "checkpoint was trained on a different vocabulary");
    }

    std::map<std::string, std::string> inputs{{"checkpoint", checkpoint},
                                              {"test_facts", data.test_facts_path}};
    auto by_type = load_query_files(data_dir, split, &inputs);

    evalh::EvalConfig eval_config;
    eval_config.filter_hard = reader.get_bool("filter_hard");
    evalh::Ranker ranker = [&m](const query::QueryNode& tree,
                                const std::set<khg::EntityId>& exclude) {
        return m.rank(tree, exclude);
    };
    std::map<std::string, std::string> echo = m.config().describe();
    echo["split"] = split;
    echo["filter_hard"] = eval_config.filter_hard ? "1" : "0";
    evalh::EvalReport report = evaluate(ranker, by_type, eval_config, std::move(echo));

    fs::create_directories(out_dir);
    const std::string tsv_path = (fs::path(out_dir) / "report.tsv").string();
    const std::string json_path = (fs::path(out_dir) / "report.json").string();
    write_file(tsv_path, report.to_tsv());
    write_file(json_path, report.to_json() + "\n");
    write_manifest(out_dir, "eval", config, inputs, {tsv_path, json_path});
    return "";
}

std::string cmd_oracle(const Config& config) {
    ConfigReader reader{config, "oracle"};
    const std::string facts_path = reader.require("facts");
    const std::string queries_path = reader.require("queries");
    const std::string out_path = resolve_out(reader.require("out"));

    khg::KnowledgeHypergraph graph = khg::KnowledgeHypergraph::parse_facts(read_file(facts_path));
    std::vector<query::QueryInstance> instances = query::read_query_file(queries_path);

    std::ostringstream out;
    for (const query::QueryInstance& instance : instances) {
        const auto violations = query::validate(instance.tree, &graph);
        if (!violations.empty()) {
            throw Error(ErrorKind::InvalidQuery, violations.front());
        }
        nlohmann::ordered_json line;
        line["type"] = instance.type;
        line["answers"] = query::answers(instance.tree, graph);
        out << line.dump() << '\n';
    }
    const fs::path out_file(out_path);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    write_file(out_path, out.str());
    write_manifest(out_file.has_parent_path() ? out_file.parent_path().string() : ".", "oracle",
                   config, {{"facts", facts_path}, {"queries", queries_path}}, {out_path});
    return "";
}

std::string cmd_baseline(const Config& config) {
    ConfigReader reader{config, "baseline"};
    const std::string data_dir = reader.require("data");
    const std::string out_dir = resolve_out(reader.require("out"));
    const std::string split = reader.get("split", "test");

    baseline::BaselineConfig base_config;
    base_config.family = baseline::family_from_name(reader.get("family", "m-distmult"));
    base_config.dim = reader.get_u64("dim", base_config.dim);
    base_config.epochs = reader.get_u64("epochs", base_config.epochs);
    base_config.batch_size = reader.get_u64("batch", base_config.batch_size);
    base_config.lr = reader.get_f64("lr", base_config.lr);
    base_config.seed = reader.require_seed();
    base_config.shift_divisor = reader.get_u64("shift_divisor", base_config.shift_divisor);

    LoadedData data = load_splits_dir(data_dir);
    std::map<std::string, std::string> inputs{{"test_facts", data.test_facts_path}};
    auto by_type = load_query_files(data_dir, split, &inputs);
    // no closed form for negation: score only the EPFO types
    for (const std::string& type : query::query_type_names()) {
        if (query::is_negation_type(type)) by_type.erase(type);
    }

    baseline::KhgEmbedding embedding(data.splits.test.num_entities(),
                                     data.splits.test.num_relations(), base_config);
    std::vector<double> curve = embedding.pretrain(data.splits.train);

    evalh::Ranker ranker = [&](const query::QueryNode& tree,
                               const std::set<khg::EntityId>& exclude) {
        const std::vector<double> scores = embedding.score_query(tree);
        std::vector<khg::EntityId> order;
        order.reserve(scores.size());
        for (std::size_t e = 0; e < scores.size(); ++e) {
            if (!exclude.contains(static_cast<khg::EntityId>(e))) {
                order.push_back(static_cast<khg::EntityId>(e));
            }
        }
        std::stable_sort(order.begin(), order.end(), [&](khg::EntityId a, khg::EntityId b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;
        });
        return order;
    };

    std::map<std::string, std::string> echo;
    echo["family"] = family_name(base_config.family);
    echo["dim"] = std::to_string(base_config.dim);
    echo["split"] = split;
    echo["seed"] = std::to_string(base_config.seed);
    evalh::EvalReport report = evalh::evaluate(ranker, by_type, {}, std::move(echo));

    fs::create_directories(out_dir);
    const std::string ckpt_path = (fs::path(out_dir) / "baseline.ckpt").string();
    embedding.save(ckpt_path);
    std::ostringstream log;
    log << "epoch\tloss\n";
    log.setf(std::ios::fixed);
    log.precision(6);
    for (std::size_t i = 0; i < curve.size(); ++i) log << (i + 1) << '\t' << curve[i] << '\n';
    const std::string log_path = (fs::path(out_dir) / "pretrain.log.tsv").string();
    const std::string tsv_path = (fs::path(out_dir) / "report.tsv").string();
    const std::string json_path = (fs::path(out_dir) / "report.json").string();
    write_file(log_path, log.str());
    write_file(tsv_path, report.to_tsv());
    write_file(json_path, report.to_json() + "\n");
    write_manifest(out_dir, "baseline", config, inputs,
                   {ckpt_path, log_path, tsv_path, json_path});
    return "";
}

std::string cmd_ablate(const Config& config) {
    ConfigReader reader{config, "ablate"};
    const std::string data_dir = reader.require("data");
    const std::string out_dir = resolve_out(reader.require("out"));
    const std::string split = reader.get("split", "valid");
    model::ModelConfig base = model_config_from(reader);

    std::vector<std::uint64_t> seeds;
    for (const std::string& token : split_csv(reader.get("seeds", "0,1,2"))) {
        seeds.push_back(std::stoull(token));
    }

    LoadedData data = load_splits_dir(data_dir);
    std::map<std::string, std::string> inputs{{"test_facts", data.test_facts_path}};
    auto train_by_type = load_query_files(data_dir, "train", &inputs);
    std::vector<query::QueryInstance> train_set;
    for (auto& [type, instances] : train_by_type) {
        for (auto& instance : instances) train_set.push_back(std::move(instance));
    }
    auto eval_sets = load_query_files(data_dir, split, &inputs);

    evalh::AblationReport report =
        evalh::ablate(base, data.splits.test.num_entities(), data.splits.test.num_relations(),
                      train_set, eval_sets, seeds);

    fs::create_directories(out_dir);
    const std::string tsv_path = (fs::path(out_dir) / "ablation.tsv").string();
    write_file(tsv_path, report.to_tsv());
    write_manifest(out_dir, "ablate", config, inputs, {tsv_path});
    return "";
}

std::string cmd_stats(const Config& config) {
    ConfigReader reader{config, "stats"};
    const std::string facts_path = reader.require("facts");
    khg::KnowledgeHypergraph graph = khg::KnowledgeHypergraph::parse_facts(read_file(facts_path));
    const std::string tsv = graph.stats_tsv();
    const std::string out_path = resolve_out(reader.get("out", ""));
    if (!out_path.empty()) {
        const fs::path out_file(out_path);
        if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
        write_file(out_path, tsv);
        write_manifest(out_file.has_parent_path() ? out_file.parent_path().string() : ".", "stats",
                       config, {{"facts", facts_path}}, {out_path});
        return "";
    }
    return tsv;
}

}  // namespace

std::string run_command(const std::string& command, const Config& config) {
    if (command == "sample") return cmd_sample(config);
    if (command == "train") return cmd_train(config);
    if (command == "eval") return cmd_eval(config);
    if (command == "oracle") return cmd_oracle(config);
    if (command == "baseline") return cmd_baseline(config);
    if (command == "ablate") return cmd_ablate(config);
    if (command == "stats") return cmd_stats(config);
    throw Error(ErrorKind::ConfigError, "unknown command '" + command + "'");
}

}  // namespace hypercqa::run
