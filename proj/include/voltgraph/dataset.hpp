#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voltgraph/graph.hpp"
#include "voltgraph/ladder.hpp"

namespace voltgraph {

// One graph instance as stored in a dataset file (one JSON object per line).
struct GraphRecord {
    int64_t id = 0;
    int n_nodes = 0;
    std::vector<int> node_types;
    std::vector<double> node_params;
    std::vector<std::pair<int, int>> edges;
    std::vector<int> output_nodes;  // supervised node indices, declaration order
    std::vector<double> targets;    // volts, aligned to output_nodes
    std::map<std::string, double> graph_labels;

    // Training target for graph-level tasks; set by the experiment harness
    // from graph_labels, never serialized.
    std::optional<double> graph_target;
};

GraphRecord to_record(int64_t id, const CircuitGraph& g);
std::string record_to_json(const GraphRecord& r);
GraphRecord record_from_json(const std::string& line);

struct SplitFractions {
    double train = 0.9;
    double val = 0.1;
    double test = 0.0;
};

struct DatasetManifest {
    std::string name;
    int64_t record_count = 0;
    int64_t n_train = 0, n_val = 0, n_test = 0;
    std::string generator_json;  // LadderSpec + count + label flag
    uint64_t content_hash = 0;   // FNV-1a over the records file bytes
    int64_t rejected = 0;        // unsolvable samples that were redrawn

    std::string to_json() const;
    static DatasetManifest from_json(const std::string& text);
};

// Writes <dir>/records.jsonl and <dir>/manifest.json. Branch counts are
// drawn uniformly over the spec range; records are already in sampling
// order, so splits are positional: first n_train records, then n_val, then
// n_test. With label_rout, each record carries graph_labels["rout_ohms"]
// measured at the last output net. Deterministic given spec.seed.
DatasetManifest generate_dataset(const LadderSpec& spec, int64_t count, SplitFractions splits,
                                 const std::string& out_dir, const std::string& name,
                                 bool label_rout = false);

enum class Split { Train, Val, Test };

DatasetManifest load_manifest(const std::string& dir);
std::vector<GraphRecord> load_records(const std::string& dir);
std::vector<GraphRecord> load_split(const std::string& dir, Split which);

uint64_t file_content_hash(const std::string& path);

}  // namespace voltgraph
