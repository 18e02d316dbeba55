#include "voltgraph/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "voltgraph/solve.hpp"

namespace voltgraph {

using nlohmann::json;

GraphRecord to_record(int64_t id, const CircuitGraph& g) {
    GraphRecord r;
    r.id = id;
    r.n_nodes = g.num_nodes;
    r.node_types.reserve(g.node_types.size());
    for (NodeType t : g.node_types) r.node_types.push_back(static_cast<int>(t));
    r.node_params = g.node_params;
    r.edges = g.edges;
    r.output_nodes = g.output_nodes;
    r.targets = g.targets;
    return r;
}

std::string record_to_json(const GraphRecord& r) {
    json j;
    j["id"] = r.id;
    j["n_nodes"] = r.n_nodes;
    j["node_types"] = r.node_types;
    j["node_params"] = r.node_params;
    std::vector<int> flat;
    flat.reserve(r.edges.size() * 2);
    for (auto [a, b] : r.edges) {
        flat.push_back(a);
        flat.push_back(b);
    }
    j["edges"] = flat;
    j["output_mask"] = r.output_nodes;
    j["targets"] = r.targets;
    if (!r.graph_labels.empty()) j["graph_labels"] = r.graph_labels;
    return j.dump();
}

GraphRecord record_from_json(const std::string& line) {
    json j = json::parse(line);
    GraphRecord r;
    r.id = j.at("id").get<int64_t>();
    r.n_nodes = j.at("n_nodes").get<int>();
    r.node_types = j.at("node_types").get<std::vector<int>>();
    r.node_params = j.at("node_params").get<std::vector<double>>();
    auto flat = j.at("edges").get<std::vector<int>>();
    if (flat.size() % 2 != 0) throw std::runtime_error("edge list has odd length");
    for (size_t i = 0; i < flat.size(); i += 2) r.edges.emplace_back(flat[i], flat[i + 1]);
    r.output_nodes = j.at("output_mask").get<std::vector<int>>();
    r.targets = j.at("targets").get<std::vector<double>>();
    if (j.contains("graph_labels"))
        r.graph_labels = j.at("graph_labels").get<std::map<std::string, double>>();
    return r;
}

std::string DatasetManifest::to_json() const {
    json j;
    j["name"] = name;
    j["record_count"] = record_count;
    j["splits"] = {{"train", n_train}, {"val", n_val}, {"test", n_test}};
    j["generator"] = json::parse(generator_json);
    std::ostringstream hash;
    hash << "0x" << std::hex << content_hash;
    j["content_hash"] = hash.str();
    j["rejected"] = rejected;
    return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
    json j = json::parse(text);
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.record_count = j.at("record_count").get<int64_t>();
    m.n_train = j.at("splits").at("train").get<int64_t>();
    m.n_val = j.at("splits").at("val").get<int64_t>();
    m.n_test = j.at("splits").at("test").get<int64_t>();
    m.generator_json = j.at("generator").dump();
    m.content_hash = std::stoull(j.at("content_hash").get<std::string>(), nullptr, 16);
    m.rejected = j.at("rejected").get<int64_t>();
    return m;
}

namespace {

json generator_to_json(const LadderSpec& spec, int64_t count, bool label_rout) {
    json j;
    j["family"] = "ladder";
    j["variant"] = ladder_variant_name(spec.variant);
    j["n_lo"] = spec.n_lo;
    j["n_hi"] = spec.n_hi;
    j["r_lo"] = spec.r_lo;
    j["r_hi"] = spec.r_hi;
    j["v_lo"] = spec.v_lo;
    j["v_hi"] = spec.v_hi;
    j["seed"] = spec.seed;
    j["count"] = count;
    j["label_rout"] = label_rout;
    return j;
}

}  // namespace

DatasetManifest generate_dataset(const LadderSpec& spec, int64_t count, SplitFractions splits,
                                 const std::string& out_dir, const std::string& name,
                                 bool label_rout) {
    check_ladder_spec(spec);
    if (count < 1) throw std::invalid_argument("dataset needs at least one record");
    double fsum = splits.train + splits.val + splits.test;
    if (std::fabs(fsum - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");

    std::filesystem::create_directories(out_dir);
    std::string records_path = out_dir + "/records.jsonl";
    std::ofstream out(records_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + records_path);

    Rng rng(spec.seed);
    int64_t rejected = 0;
    for (int64_t id = 0; id < count; ++id) {
        for (;;) {
            Circuit c = make_ladder(spec, rng);
            try {
                SolveResult sol = solve_dc(c);
                if (sol.ill_conditioned) throw UnsolvableError("ill-conditioned sample");
                GraphRecord r = to_record(id, circuit_to_graph(c, &sol));
                if (label_rout)
                    r.graph_labels["rout_ohms"] = output_resistance(c, c.outputs.back());
                out << record_to_json(r) << '\n';
                break;
            } catch (const UnsolvableError&) {
                ++rejected;
            }
        }
    }
    out.close();

    DatasetManifest m;
    m.name = name;
    m.record_count = count;
    m.n_train = std::llround(splits.train * static_cast<double>(count));
    m.n_val = std::llround(splits.val * static_cast<double>(count));
    m.n_test = count - m.n_train - m.n_val;
    if (m.n_test < 0) {
        m.n_val += m.n_test;
        m.n_test = 0;
    }
    m.generator_json = generator_to_json(spec, count, label_rout).dump();
    m.content_hash = file_content_hash(records_path);
    m.rejected = rejected;

    std::ofstream mf(out_dir + "/manifest.json", std::ios::binary);
    mf << m.to_json() << '\n';
    return m;
}

DatasetManifest load_manifest(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json", std::ios::binary);
    if (!in) throw std::runtime_error("no manifest in " + dir);
    std::stringstream ss;
    ss << in.rdbuf();
    return DatasetManifest::from_json(ss.str());
}

std::vector<GraphRecord> load_records(const std::string& dir) {
    std::ifstream in(dir + "/records.jsonl", std::ios::binary);
    if (!in) throw std::runtime_error("no records file in " + dir);
    std::vector<GraphRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(record_from_json(line));
    }
    return out;
}

std::vector<GraphRecord> load_split(const std::string& dir, Split which) {
    DatasetManifest m = load_manifest(dir);
    std::vector<GraphRecord> all = load_records(dir);
    if (static_cast<int64_t>(all.size()) != m.record_count)
        throw std::runtime_error("record count does not match manifest in " + dir);
    int64_t lo = 0, n = 0;
    switch (which) {
        case Split::Train: lo = 0; n = m.n_train; break;
        case Split::Val: lo = m.n_train; n = m.n_val; break;
        case Split::Test: lo = m.n_train + m.n_val; n = m.n_test; break;
    }
    return {all.begin() + lo, all.begin() + lo + n};
}

uint64_t file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot hash missing file: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
    return h;
}

}  // namespace voltgraph
