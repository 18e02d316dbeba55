#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "voltgraph/dataset.hpp"
#include "voltgraph/rng.hpp"
#include "voltgraph/tensor.hpp"

namespace voltgraph {

enum class Task { NodeVoltage, GraphLabel };
enum class Pooling { CrossAttention, Mean };

const char* pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);

struct ModelConfig {
    int n_layers = 10;       // GEN blocks
    int hidden_dim = 128;
    int head_hidden = 512;   // MLP heads
    int latent_rows = 16;
    int latent_dim = 16;
    int n_cross_layers = 3;
    int n_heads = 4;
    double epsilon = 1e-7;   // message floor
    bool with_pool_head = false;   // adds the graph-level head
    Pooling pooling = Pooling::CrossAttention;
    bool pool_output_nodes_only = false;

    int graph_embed_dim() const { return latent_rows * latent_dim; }
    std::string to_json() const;
    static ModelConfig from_json(const std::string& text);
};

// Disjoint union of several graphs, with per-destination CSR over directed
// edge copies for aggregation.
struct BatchData {
    int n_graphs = 0;
    std::vector<int> node_types;
    std::vector<double> node_params;
    std::vector<int> indptr;          // size ΣN+1; incoming directed edges per node
    std::vector<int> src;             // source node per directed edge, grouped by dest
    std::vector<int> graph_offsets;   // size B+1; node row ranges
    std::vector<int> output_rows;     // global node rows, record order
    std::vector<int> output_offsets;  // size B+1; per-graph ranges into output_rows
    std::vector<double> targets;      // per output row (node-level task)
    std::vector<double> graph_labels; // per graph (graph-level task)
    std::vector<int64_t> record_ids;

    const std::vector<double>& targets_for(Task t) const {
        return t == Task::NodeVoltage ? targets : graph_labels;
    }
};

BatchData make_batch(const std::vector<GraphRecord>& records, const std::vector<int>& which);
BatchData make_batch(const GraphRecord& record);

struct Param {
    std::string name;
    Tensor value;
};

// Minimal interface the training loop needs.
class PredictModel {
public:
    virtual ~PredictModel() = default;
    // Column vector: one row per supervised output (node task) or per graph
    // (graph task), aligned with targets_for(task()).
    virtual Tensor predict(const BatchData& batch) = 0;
    virtual std::vector<Param>& params() = 0;
    virtual Task task() const = 0;
};

// Encoder + GEN message-passing stack + node-voltage head, with an optional
// latent cross-attention pooling head for graph-level labels.
class GnnModel : public PredictModel {
public:
    GnnModel(ModelConfig cfg, uint64_t seed);

    // Node embeddings after the full stack, (ΣN × hidden).
    Tensor forward_nodes(const BatchData& batch);
    // Graph embeddings (B × 256 for cross-attention, B × hidden for mean).
    Tensor pool_graphs(const Tensor& h, const BatchData& batch);
    Tensor predict(const BatchData& batch) override;

    std::vector<Param>& params() override { return params_; }
    Task task() const override {
        return cfg_.with_pool_head ? Task::GraphLabel : Task::NodeVoltage;
    }
    const ModelConfig& config() const { return cfg_; }

    // Backbone = encoder + GEN stack; heads stay trainable.
    void freeze_backbone();
    void set_all_trainable(bool trainable);
    static bool is_backbone_param(const std::string& name);

    void save_checkpoint(const std::string& path) const;
    static std::unique_ptr<GnnModel> load_checkpoint(const std::string& path);
    // Copies every parameter whose name and shape match; returns the names
    // copied. Throws if a backbone parameter of *this is missing from the
    // checkpoint or has the wrong shape.
    std::vector<std::string> load_backbone_from(const std::string& path);

    Tensor* find_param(const std::string& name);

private:
    ModelConfig cfg_;
    std::vector<Param> params_;
    std::map<std::string, size_t> by_name_;

    Tensor& param(const std::string& name);
    Tensor& add_param(const std::string& name, std::vector<int> shape, Rng& rng,
                      double init_scale);
    Tensor& add_param_normal(const std::string& name, std::vector<int> shape, Rng& rng,
                             double sigma);
    Tensor& add_param_const(const std::string& name, std::vector<int> shape, double v);
    void build(uint64_t seed);
    Tensor mlp_head(const Tensor& x, const std::string& prefix);
};

// Fixed-topology baseline: flattens per-node (one-hot type, param) features
// in node order and maps them to all supervised outputs with one MLP.
class MlpModel : public PredictModel {
public:
    MlpModel(int n_nodes, int outputs_per_graph, int n_hidden_layers, int width, uint64_t seed);

    Tensor predict(const BatchData& batch) override;
    std::vector<Param>& params() override { return params_; }
    Task task() const override { return Task::NodeVoltage; }

    int n_nodes() const { return n_nodes_; }
    int outputs_per_graph() const { return outputs_per_graph_; }

private:
    int n_nodes_;
    int outputs_per_graph_;
    int n_hidden_layers_;
    int width_;
    std::vector<Param> params_;
};

// Per-node input features for the flattened baseline: one-hot type + param.
inline constexpr int kNodeFeatureDim = kNumNodeTypes + 1;

}  // namespace voltgraph
