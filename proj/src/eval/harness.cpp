#include "eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "common/hash.hpp"

namespace hypercqa::evalh {

double mrr_query(const std::vector<khg::EntityId>& ranked, const std::set<khg::EntityId>& hard) {
    if (hard.empty()) throw Error(ErrorKind::EmptyHardSet, "query has no hard answers");
    double sum = 0.0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (hard.contains(ranked[i])) {
            sum += 1.0 / static_cast<double>(i + 1);
            ++found;
        }
    }
    if (found != hard.size()) {
        throw Error(ErrorKind::EmptyHardSet, "hard answers missing from the ranking");
    }
    return sum / static_cast<double>(hard.size());
}

namespace {

double instance_mrr(const Ranker& ranker, const query::QueryInstance& instance,
                    const EvalConfig& config) {
    const auto ranked = ranker(instance.tree, instance.easy_answers);
    if (!config.filter_hard) return mrr_query(ranked, instance.hard_answers);

    // Under the stricter convention each hard answer is ranked with the other
    // hard answers removed, which lifts it by however many sat above it.
    double sum = 0.0;
    std::size_t hard_above = 0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (instance.hard_answers.contains(ranked[i])) {
            sum += 1.0 / static_cast<double>(i + 1 - hard_above);
            ++hard_above;
            ++found;
        }
    }
    if (found != instance.hard_answers.size()) {
        throw Error(ErrorKind::EmptyHardSet, "hard answers missing from the ranking");
    }
    return sum / static_cast<double>(instance.hard_answers.size());
}

const std::vector<std::string>& epfo_types() {
    static const std::vector<std::string> types = {"1p", "2p", "3p", "2i", "3i",
                                                   "pi", "ip", "2u", "up"};
    return types;
}

}  // namespace

double EvalReport::mrr_of(const std::string& type) const {
    for (const TypeResult& result : per_type) {
        if (result.type == type) return result.mrr;
    }
    return std::nan("");
}

std::string EvalReport::to_tsv() const {
    std::ostringstream out;
    out << "metric";
    for (const std::string& type : query::query_type_names()) out << '\t' << type;
    out << "\tAP\tAN\n";
    out << "mrr";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const std::string& type : query::query_type_names()) {
        const double value = mrr_of(type);
        out << '\t';
        if (std::isnan(value)) {
            out << "-";
        } else {
            out << value;
        }
    }
    out << '\t' << ap << '\t' << an << '\n';
    out << "count";
    for (const std::string& type : query::query_type_names()) {
        std::size_t count = 0;
        for (const TypeResult& result : per_type) {
            if (result.type == type) count = result.count;
        }
        out << '\t' << count;
    }
    out << '\t' << total_instances << "\t-\n";
    return out.str();
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json types = nlohmann::ordered_json::object();
    for (const TypeResult& result : per_type) {
        types[result.type] = {{"mrr", result.mrr}, {"count", result.count}};
    }
    j["per_type"] = std::move(types);
    j["ap"] = ap;
    j["an"] = an;
    j["total_instances"] = total_instances;
    j["config"] = config_echo;
    return j.dump(2);
}

EvalReport evaluate(const Ranker& ranker,
                    const std::map<std::string, std::vector<query::QueryInstance>>& by_type,
                    const EvalConfig& config, std::map<std::string, std::string> config_echo) {
    EvalReport report;
    report.config_echo = std::move(config_echo);
    for (const std::string& type : query::query_type_names()) {
        auto it = by_type.find(type);
        if (it == by_type.end() || it->second.empty()) continue;
        double sum = 0.0;
        for (const query::QueryInstance& instance : it->second) {
            sum += instance_mrr(ranker, instance, config);
        }
        TypeResult result;
        result.type = type;
        result.count = it->second.size();
        result.mrr = sum / static_cast<double>(result.count);
        report.total_instances += result.count;
        report.per_type.push_back(result);
    }

    double ap_sum = 0.0;
    std::size_t ap_n = 0;
    double an_sum = 0.0;
    std::size_t an_n = 0;
    for (const TypeResult& result : report.per_type) {
        if (std::find(epfo_types().begin(), epfo_types().end(), result.type) != epfo_types().end()) {
            ap_sum += result.mrr;
            ++ap_n;
        } else {
            an_sum += result.mrr;
            ++an_n;
        }
    }
    report.ap = ap_n > 0 ? ap_sum / static_cast<double>(ap_n) : 0.0;
    report.an = an_n > 0 ? an_sum / static_cast<double>(an_n) : 0.0;
    return report;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& ablation_variants() {
    static const std::vector<std::string> variants = {"full", "fuzzy", "no-abs-pe",
                                                      "var-cardinality"};
    return variants;
}

namespace {

model::ModelConfig variant_config(const model::ModelConfig& base, const std::string& variant,
                                  std::uint64_t seed) {
    model::ModelConfig config = base;
    config.seed = seed;
    if (variant == "fuzzy") config.logical_mode = model::LogicalMode::Fuzzy;
    if (variant == "no-abs-pe") config.positional = model::PositionalMode::None;
    if (variant == "var-cardinality") config.cardinality = model::CardinalityMode::Variadic;
    return config;
}

}  // namespace

double AblationReport::mean_over(const std::string& variant,
                                 const std::vector<std::string>& types) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const AblationRow& row : rows) {
        if (row.variant != variant) continue;
        for (const std::string& type : types) {
            const double value = row.report.mrr_of(type);
            if (!std::isnan(value)) {
                sum += value;
                ++n;
            }
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : std::nan("");
}

std::string AblationReport::to_tsv() const {
    std::ostringstream out;
    out << "variant\tseed\tdataset";
    for (const std::string& type : query::query_type_names()) out << '\t' << type;
    out << "\tAP\tAN\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const AblationRow& row : rows) {
        out << row.variant << '\t' << row.seed << '\t' << dataset_hash;
        for (const std::string& type : query::query_type_names()) {
            const double value = row.report.mrr_of(type);
            out << '\t';
            if (std::isnan(value)) {
                out << "-";
            } else {
                out << value;
            }
        }
        out << '\t' << row.report.ap << '\t' << row.report.an << '\n';
    }
    return out.str();
}

AblationReport ablate(const model::ModelConfig& base, std::size_t num_entities,
                      std::size_t num_relations,
                      const std::vector<query::QueryInstance>& train_set,
                      const std::map<std::string, std::vector<query::QueryInstance>>& eval_sets,
                      const std::vector<std::uint64_t>& seeds) {
    std::string blob;
    for (const query::QueryInstance& instance : train_set) blob += query::serialize(instance);
    for (const auto& [type, instances] : eval_sets) {
        for (const query::QueryInstance& instance : instances) blob += query::serialize(instance);
    }

    AblationReport report;
    report.dataset_hash = hex64(fnv1a64(blob));
    for (const std::string& variant : ablation_variants()) {
        for (std::uint64_t seed : seeds) {
            model::LkhgtModel m(num_entities, num_relations, variant_config(base, variant, seed));
            m.train(train_set);
            Ranker ranker = [&m](const query::QueryNode& tree,
                                 const std::set<khg::EntityId>& exclude) {
                return m.rank(tree, exclude);
            };
            std::map<std::string, std::string> echo = m.config().describe();
            echo["variant"] = variant;
            echo["dataset_hash"] = report.dataset_hash;
            report.rows.push_back({variant, seed, evaluate(ranker, eval_sets, {}, std::move(echo))});
        }
    }
    return report;
}

}  // namespace hypercqa::evalh
