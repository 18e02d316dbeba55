#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "voltgraph/circuit.hpp"
#include "voltgraph/solve.hpp"

namespace voltgraph {

// Order is the wire format for dataset records; append only.
enum class NodeType : int {
    NetNode = 0,
    GroundNode = 1,
    ResistorTerminal = 2,
    VSourcePlusTerminal = 3,
    VSourceMinusTerminal = 4,
    ISourcePlusTerminal = 5,
    ISourceMinusTerminal = 6,
};

inline constexpr int kNumNodeTypes = 7;

const char* node_type_name(NodeType t);

// Circuit as a graph: one node per device terminal, one per net; terminals
// of a device form a complete subgraph and each terminal links to its net.
// Edges are undirected, unique, self-loop free, featureless.
struct CircuitGraph {
    int num_nodes = 0;
    std::vector<NodeType> node_types;
    std::vector<double> node_params;  // normalized device parameter, 0 on net nodes
    std::vector<std::pair<int, int>> edges;
    std::vector<int> output_nodes;    // net-node indices in `.out` order
    std::vector<double> targets;      // volts, aligned to output_nodes; may be empty
    std::vector<std::string> provenance;  // net name, or "device.role"

    std::vector<bool> output_mask() const;
};

// Resistor ohms → log10(R/1kΩ), so [100 Ω, 10 kΩ] maps onto [−1, 1].
// Source values pass through (already order-1 in volts/amps).
double normalize_param(DeviceKind kind, double raw);

// Builds the graph in three passes: terminal nodes with device-internal
// complete subgraphs, then net nodes, then terminal-to-net edges. With a
// SolveResult, targets are filled from the declared output nets.
// Throws std::invalid_argument if an output net has no solved voltage.
CircuitGraph circuit_to_graph(const Circuit& c, const SolveResult* solution = nullptr);

// Degree of every node.
std::vector<int> node_degrees(const CircuitGraph& g);

bool is_graph_connected(const CircuitGraph& g);

// Order-independent structural hash: stable under node relabeling that
// preserves the (type, param, multiset-of-neighbor-colors) refinement.
// Collisions are possible in principle; used for isomorphism spot checks.
uint64_t canonical_graph_hash(const CircuitGraph& g, int refinement_rounds = 6);

}  // namespace voltgraph
