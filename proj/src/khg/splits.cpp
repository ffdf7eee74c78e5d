#include "khg/splits.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "common/rng.hpp"

namespace hypercqa::khg {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

GraphSplits GraphSplits::make(const KnowledgeHypergraph& full, double train_frac,
                              double valid_frac, std::uint64_t seed) {
    if (train_frac <= 0.0 || valid_frac < 0.0 || train_frac + valid_frac > 1.0) {
        throw Error(ErrorKind::ConfigError, "split fractions must satisfy 0 < train, train+valid <= 1");
    }
    std::vector<std::uint32_t> order(full.num_edges());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed({seed, 0x73706c6974ULL}));  // "split"
    rng.shuffle(order);

    const std::size_t n = order.size();
    std::size_t n_train = std::max<std::size_t>(1, static_cast<std::size_t>(n * train_frac));
    std::size_t n_valid = n_train + static_cast<std::size_t>(n * valid_frac);
    n_valid = std::min(n_valid, n);

    auto take = [&](std::size_t count) {
        std::vector<std::uint32_t> picked(order.begin(), order.begin() + count);
        std::sort(picked.begin(), picked.end());  // keep first-appearance order
        std::vector<Hyperedge> edges;
        edges.reserve(count);
        for (std::uint32_t idx : picked) edges.push_back(full.edges()[idx]);
        return edges;
    };

    GraphSplits splits{
        KnowledgeHypergraph::from_edges(full, take(n_train)),
        KnowledgeHypergraph::from_edges(full, take(n_valid)),
        KnowledgeHypergraph::from_edges(full, full.edges()),
    };
    splits.check();
    return splits;
}

GraphSplits GraphSplits::load(const std::string& train_path, const std::string& valid_path,
                              const std::string& test_path) {
    KnowledgeHypergraph test = KnowledgeHypergraph::parse_facts(read_file(test_path));
    GraphSplits splits{
        KnowledgeHypergraph::parse_facts_with_vocab(read_file(train_path), test),
        KnowledgeHypergraph::parse_facts_with_vocab(read_file(valid_path), test),
        std::move(test),
    };
    splits.check();
    return splits;
}

void GraphSplits::check() const {
    if (train.vocab_hash() != test.vocab_hash() || valid.vocab_hash() != test.vocab_hash()) {
        throw Error(ErrorKind::ConfigError, "splits must share one vocabulary");
    }
    for (const Hyperedge& edge : train.edges()) {
        if (!valid.has_edge(edge)) throw Error(ErrorKind::ConfigError, "train edge missing from valid");
    }
    for (const Hyperedge& edge : valid.edges()) {
        if (!test.has_edge(edge)) throw Error(ErrorKind::ConfigError, "valid edge missing from test");
    }
}

}  // namespace hypercqa::khg
