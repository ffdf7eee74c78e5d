#include "query/algebra.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

namespace hypercqa::query {

using json = nlohmann::ordered_json;

std::size_t node_count(const QueryNode& tree) {
    std::size_t count = 1;
    for (const QueryNode& child : tree.children) count += node_count(child);
    return count;
}

namespace {

void validate_rec(const QueryNode& node, const KnowledgeHypergraph* graph, bool under_intersection,
                  std::vector<std::string>& out) {
    switch (node.kind) {
        case QueryNode::Kind::Projection: {
            if (node.negated && !under_intersection) {
                out.push_back("negated projection outside an intersection has no finite evaluation");
            }
            std::size_t targets = 0;
            std::size_t subs = 0;
            for (const Arg& arg : node.args) {
                if (arg.kind == Arg::Kind::Target) ++targets;
                if (arg.kind == Arg::Kind::Sub) {
                    ++subs;
                    if (arg.child >= node.children.size()) {
                        out.push_back("sub argument references missing child");
                    }
                }
            }
            if (targets != 1) {
                out.push_back("projection must carry exactly one target, has " +
                              std::to_string(targets));
            }
            if (subs != node.children.size()) {
                out.push_back("projection children and sub arguments disagree");
            }
            if (graph != nullptr) {
                if (node.relation >= graph->num_relations()) {
                    out.push_back("unknown relation id " + std::to_string(node.relation));
                } else if (node.args.size() != graph->arity(node.relation)) {
                    out.push_back("argument count " + std::to_string(node.args.size()) +
                                  " does not match arity of relation '" +
                                  graph->relation_name(node.relation) + "'");
                }
                for (const Arg& arg : node.args) {
                    if (arg.kind == Arg::Kind::Const && arg.entity >= graph->num_entities()) {
                        out.push_back("unknown entity id " + std::to_string(arg.entity));
                    }
                }
            }
            for (const QueryNode& child : node.children) validate_rec(child, graph, false, out);
            break;
        }
        case QueryNode::Kind::Intersection: {
            if (node.children.size() < 2) out.push_back("intersection needs >= 2 children");
            bool any_positive = false;
            for (const QueryNode& child : node.children) {
                const bool neg = child.kind == QueryNode::Kind::Projection && child.negated;
                if (!neg) any_positive = true;
                validate_rec(child, graph, true, out);
            }
            if (!any_positive) out.push_back("unbounded complement: all intersection children negated");
            break;
        }
        case QueryNode::Kind::Union: {
            if (node.children.size() < 2) out.push_back("union needs >= 2 children");
            for (const QueryNode& child : node.children) {
                if (child.kind == QueryNode::Kind::Projection && child.negated) {
                    out.push_back("negated projection under union has no finite evaluation");
                }
                validate_rec(child, graph, false, out);
            }
            break;
        }
    }
}

}  // namespace

std::vector<std::string> validate(const QueryNode& tree, const KnowledgeHypergraph* graph) {
    std::vector<std::string> out;
    validate_rec(tree, graph, false, out);
    return out;
}

// -------------------------------------------------------------------------

const std::vector<std::string>& query_type_names() {
    static const std::vector<std::string> names = {"1p", "2p",  "3p",  "2i",  "3i",  "pi",  "ip",
                                                   "2u", "up",  "2in", "3in", "inp", "pin", "pni"};
    return names;
}

bool is_negation_type(const std::string& name) {
    return name == "2in" || name == "3in" || name == "inp" || name == "pin" || name == "pni";
}

namespace {

QueryStructure proj(std::vector<QueryStructure> feed = {}, bool negated = false) {
    QueryStructure s;
    s.op = QueryStructure::Op::Projection;
    s.negated = negated;
    s.children = std::move(feed);
    return s;
}

QueryStructure logical(QueryStructure::Op op, std::vector<QueryStructure> children) {
    QueryStructure s;
    s.op = op;
    s.children = std::move(children);
    return s;
}

}  // namespace

QueryStructure query_template(const std::string& name) {
    std::string key;
    for (char c : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    const auto I = QueryStructure::Op::Intersection;
    const auto U = QueryStructure::Op::Union;

    if (key == "1p") return proj();
    if (key == "2p") return proj({proj()});
    if (key == "3p") return proj({proj({proj()})});
    if (key == "2i") return logical(I, {proj(), proj()});
    if (key == "3i") return logical(I, {proj(), proj(), proj()});
    if (key == "pi") return logical(I, {proj({proj()}), proj()});
    if (key == "ip") return proj({logical(I, {proj(), proj()})});
    if (key == "2u") return logical(U, {proj(), proj()});
    if (key == "up") return proj({logical(U, {proj(), proj()})});
    if (key == "2in") return logical(I, {proj(), proj({}, true)});
    if (key == "3in") return logical(I, {proj(), proj(), proj({}, true)});
    if (key == "inp") return proj({logical(I, {proj(), proj({}, true)})});
    if (key == "pin") return logical(I, {proj({proj()}), proj({}, true)});
    // pni: the negation sits on the two-hop branch
    if (key == "pni") return logical(I, {proj({proj()}, true), proj()});
    throw Error(ErrorKind::UnknownQueryType, name);
}

std::size_t structure_node_count(const QueryStructure& structure) {
    std::size_t count = 1;
    for (const QueryStructure& child : structure.children) count += structure_node_count(child);
    return count;
}

// -------------------------------------------------------------------------

namespace {

json tree_to_json(const QueryNode& node) {
    json j;
    switch (node.kind) {
        case QueryNode::Kind::Projection: {
            j["op"] = "p";
            j["rel"] = node.relation;
            if (node.negated) j["neg"] = true;
            json args = json::array();
            for (const Arg& arg : node.args) {
                switch (arg.kind) {
                    case Arg::Kind::Const: args.push_back(json{{"e", arg.entity}}); break;
                    case Arg::Kind::Sub:
                        args.push_back(json{{"sub", tree_to_json(node.children[arg.child])}});
                        break;
                    case Arg::Kind::Target: args.push_back("t"); break;
                }
            }
            j["args"] = std::move(args);
            break;
        }
        case QueryNode::Kind::Intersection:
        case QueryNode::Kind::Union: {
            j["op"] = node.kind == QueryNode::Kind::Intersection ? "i" : "u";
            json children = json::array();
            for (const QueryNode& child : node.children) children.push_back(tree_to_json(child));
            j["args"] = std::move(children);
            break;
        }
    }
    return j;
}

QueryNode tree_from_json(const json& j) {
    if (!j.is_object() || !j.contains("op")) {
        throw Error(ErrorKind::ParseError, "node must be an object with 'op'");
    }
    const std::string op = j.at("op").get<std::string>();
    QueryNode node;
    if (op == "p") {
        node.kind = QueryNode::Kind::Projection;
        node.relation = j.at("rel").get<RelationId>();
        node.negated = j.value("neg", false);
        for (const json& arg : j.at("args")) {
            if (arg.is_string() && arg.get<std::string>() == "t") {
                node.args.push_back(Arg::target());
            } else if (arg.is_object() && arg.contains("e")) {
                node.args.push_back(Arg::constant(arg.at("e").get<EntityId>()));
            } else if (arg.is_object() && arg.contains("sub")) {
                node.args.push_back(Arg::sub(node.children.size()));
                node.children.push_back(tree_from_json(arg.at("sub")));
            } else {
                throw Error(ErrorKind::ParseError, "bad projection argument: " + arg.dump());
            }
        }
    } else if (op == "i" || op == "u") {
        node.kind = op == "i" ? QueryNode::Kind::Intersection : QueryNode::Kind::Union;
        for (const json& child : j.at("args")) node.children.push_back(tree_from_json(child));
    } else {
        throw Error(ErrorKind::ParseError, "unknown op '" + op + "'");
    }
    return node;
}

}  // namespace

std::string serialize(const QueryNode& tree) { return tree_to_json(tree).dump(); }

std::string serialize(const QueryInstance& instance) {
    json j;
    j["type"] = instance.type;
    j["tree"] = tree_to_json(instance.tree);
    j["easy"] = instance.easy_answers;
    j["hard"] = instance.hard_answers;
    return j.dump();
}

QueryNode deserialize_tree(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::ParseError, "malformed JSON");
    return tree_from_json(j);
}

QueryInstance deserialize(const std::string& line) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::ParseError, "malformed JSON");
    try {
        QueryInstance instance;
        instance.type = j.at("type").get<std::string>();
        instance.tree = tree_from_json(j.at("tree"));
        for (const json& e : j.at("easy")) instance.easy_answers.insert(e.get<EntityId>());
        for (const json& e : j.at("hard")) instance.hard_answers.insert(e.get<EntityId>());
        return instance;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

std::vector<QueryInstance> read_query_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::vector<QueryInstance> instances;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            instances.push_back(deserialize(line));
        } catch (const Error& e) {
            throw Error(ErrorKind::ParseError,
                        path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return instances;
}

void write_query_file(const std::string& path, const std::vector<QueryInstance>& instances) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    for (const QueryInstance& instance : instances) out << serialize(instance) << '\n';
}

}  // namespace hypercqa::query
