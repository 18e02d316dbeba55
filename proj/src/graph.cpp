#include "voltgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "voltgraph/rng.hpp"

namespace voltgraph {

const char* node_type_name(NodeType t) {
    switch (t) {
        case NodeType::NetNode: return "NetNode";
        case NodeType::GroundNode: return "GroundNode";
        case NodeType::ResistorTerminal: return "ResistorTerminal";
        case NodeType::VSourcePlusTerminal: return "VSourcePlusTerminal";
        case NodeType::VSourceMinusTerminal: return "VSourceMinusTerminal";
        case NodeType::ISourcePlusTerminal: return "ISourcePlusTerminal";
        case NodeType::ISourceMinusTerminal: return "ISourceMinusTerminal";
    }
    return "?";
}

std::vector<bool> CircuitGraph::output_mask() const {
    std::vector<bool> mask(static_cast<size_t>(num_nodes), false);
    for (int v : output_nodes) mask[static_cast<size_t>(v)] = true;
    return mask;
}

double normalize_param(DeviceKind kind, double raw) {
    if (kind == DeviceKind::Resistor) {
        if (raw <= 0.0) throw std::invalid_argument("resistance must be positive");
        return std::log10(raw / 1000.0);
    }
    return raw;
}

CircuitGraph circuit_to_graph(const Circuit& c, const SolveResult* solution) {
    CircuitGraph g;

    // Pass 1: two terminal nodes per device, one internal edge.
    for (const Device& d : c.devices) {
        NodeType ta, tb;
        switch (d.kind) {
            case DeviceKind::Resistor:
                ta = NodeType::ResistorTerminal;
                tb = NodeType::ResistorTerminal;
                break;
            case DeviceKind::VSource:
                ta = NodeType::VSourcePlusTerminal;
                tb = NodeType::VSourceMinusTerminal;
                break;
            default:
                ta = NodeType::ISourcePlusTerminal;
                tb = NodeType::ISourceMinusTerminal;
                break;
        }
        double p = normalize_param(d.kind, d.value);
        int first = g.num_nodes;
        g.node_types.push_back(ta);
        g.node_params.push_back(p);
        g.provenance.push_back(d.name + "." + terminal_role(d.kind, 0));
        g.node_types.push_back(tb);
        g.node_params.push_back(p);
        g.provenance.push_back(d.name + "." + terminal_role(d.kind, 1));
        g.num_nodes += 2;
        g.edges.emplace_back(first, first + 1);
    }

    // Pass 2: one node per net, in net insertion order.
    std::vector<int> net_node(c.nets.size());
    for (size_t i = 0; i < c.nets.size(); ++i) {
        net_node[i] = g.num_nodes++;
        g.node_types.push_back(c.nets[i].is_ground ? NodeType::GroundNode : NodeType::NetNode);
        g.node_params.push_back(0.0);
        g.provenance.push_back(c.nets[i].name);
    }

    // Pass 3: each terminal connects to its net. Two terminals of one device
    // on the same net stay distinct nodes with their own edges.
    for (size_t di = 0; di < c.devices.size(); ++di) {
        int base = static_cast<int>(2 * di);
        const Device& d = c.devices[di];
        g.edges.emplace_back(base, net_node[static_cast<size_t>(c.net_index(d.net_a))]);
        g.edges.emplace_back(base + 1, net_node[static_cast<size_t>(c.net_index(d.net_b))]);
    }

    for (const std::string& out : c.outputs) {
        int idx = c.net_index(out);
        if (idx < 0) throw std::invalid_argument("output net not in circuit: " + out);
        g.output_nodes.push_back(net_node[static_cast<size_t>(idx)]);
        if (solution) {
            auto it = solution->voltages.find(out);
            if (it == solution->voltages.end())
                throw std::invalid_argument("no solved voltage for output net: " + out);
            g.targets.push_back(it->second);
        }
    }
    return g;
}

std::vector<int> node_degrees(const CircuitGraph& g) {
    std::vector<int> deg(static_cast<size_t>(g.num_nodes), 0);
    for (auto [a, b] : g.edges) {
        ++deg[static_cast<size_t>(a)];
        ++deg[static_cast<size_t>(b)];
    }
    return deg;
}

bool is_graph_connected(const CircuitGraph& g) {
    if (g.num_nodes == 0) return true;
    std::vector<std::vector<int>> adj(static_cast<size_t>(g.num_nodes));
    for (auto [a, b] : g.edges) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    std::vector<bool> seen(static_cast<size_t>(g.num_nodes), false);
    std::vector<int> stack{0};
    seen[0] = true;
    int visited = 0;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        ++visited;
        for (int u : adj[static_cast<size_t>(v)])
            if (!seen[static_cast<size_t>(u)]) {
                seen[static_cast<size_t>(u)] = true;
                stack.push_back(u);
            }
    }
    return visited == g.num_nodes;
}

uint64_t canonical_graph_hash(const CircuitGraph& g, int refinement_rounds) {
    // Weisfeiler-Lehman style color refinement; the final multiset of colors
    // is hashed, so any relabeling hashes identically.
    size_t n = static_cast<size_t>(g.num_nodes);
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : g.edges) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    std::vector<uint64_t> color(n), next(n);
    for (size_t v = 0; v < n; ++v) {
        uint64_t h = fnv1a64(&g.node_types[v], sizeof(NodeType));
        double p = g.node_params[v];
        h = fnv1a64(&p, sizeof(double), h);
        bool is_out = false;
        for (int o : g.output_nodes) is_out |= (o == static_cast<int>(v));
        h = fnv1a64(&is_out, sizeof(bool), h);
        color[v] = h;
    }
    for (int round = 0; round < refinement_rounds; ++round) {
        for (size_t v = 0; v < n; ++v) {
            std::vector<uint64_t> neigh;
            neigh.reserve(adj[v].size());
            for (int u : adj[v]) neigh.push_back(color[static_cast<size_t>(u)]);
            std::sort(neigh.begin(), neigh.end());
            uint64_t h = color[v];
            for (uint64_t nc : neigh) h = fnv1a64(&nc, sizeof(uint64_t), h);
            next[v] = h;
        }
        color.swap(next);
    }
    std::sort(color.begin(), color.end());
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint64_t cv : color) h = fnv1a64(&cv, sizeof(uint64_t), h);
    return h;
}

}  // namespace voltgraph
