#include "voltgraph/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace voltgraph {

using nlohmann::json;

const char* pooling_name(Pooling p) {
    return p == Pooling::CrossAttention ? "cross-attention" : "mean";
}

Pooling pooling_from_name(const std::string& name) {
    if (name == "cross-attention") return Pooling::CrossAttention;
    if (name == "mean") return Pooling::Mean;
    throw std::invalid_argument("unknown pooling: " + name);
}

std::string ModelConfig::to_json() const {
    json j;
    j["n_layers"] = n_layers;
    j["hidden_dim"] = hidden_dim;
    j["head_hidden"] = head_hidden;
    j["latent_rows"] = latent_rows;
    j["latent_dim"] = latent_dim;
    j["n_cross_layers"] = n_cross_layers;
    j["n_heads"] = n_heads;
    j["epsilon"] = epsilon;
    j["with_pool_head"] = with_pool_head;
    j["pooling"] = pooling_name(pooling);
    j["pool_output_nodes_only"] = pool_output_nodes_only;
    return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ModelConfig c;
    c.n_layers = j.at("n_layers").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.head_hidden = j.at("head_hidden").get<int>();
    c.latent_rows = j.at("latent_rows").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.n_cross_layers = j.at("n_cross_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.epsilon = j.at("epsilon").get<double>();
    c.with_pool_head = j.at("with_pool_head").get<bool>();
    c.pooling = pooling_from_name(j.at("pooling").get<std::string>());
    c.pool_output_nodes_only = j.at("pool_output_nodes_only").get<bool>();
    return c;
}

BatchData make_batch(const std::vector<GraphRecord>& records, const std::vector<int>& which) {
    BatchData b;
    b.n_graphs = static_cast<int>(which.size());
    b.graph_offsets.push_back(0);
    b.output_offsets.push_back(0);

    int total_nodes = 0;
    std::vector<std::pair<int, int>> directed;  // (dest, src)
    for (int wi : which) {
        const GraphRecord& r = records.at(static_cast<size_t>(wi));
        int base = total_nodes;
        b.node_types.insert(b.node_types.end(), r.node_types.begin(), r.node_types.end());
        b.node_params.insert(b.node_params.end(), r.node_params.begin(), r.node_params.end());
        for (auto [u, v] : r.edges) {
            directed.emplace_back(base + v, base + u);
            directed.emplace_back(base + u, base + v);
        }
        for (int o : r.output_nodes) b.output_rows.push_back(base + o);
        b.targets.insert(b.targets.end(), r.targets.begin(), r.targets.end());
        if (r.graph_target) b.graph_labels.push_back(*r.graph_target);
        b.record_ids.push_back(r.id);
        total_nodes += r.n_nodes;
        b.graph_offsets.push_back(total_nodes);
        b.output_offsets.push_back(static_cast<int>(b.output_rows.size()));
    }

    // CSR over incoming directed edges, grouped by destination; within one
    // destination the original edge order is kept.
    b.indptr.assign(static_cast<size_t>(total_nodes) + 1, 0);
    for (auto [dest, s] : directed) ++b.indptr[static_cast<size_t>(dest) + 1];
    for (size_t i = 1; i < b.indptr.size(); ++i) b.indptr[i] += b.indptr[i - 1];
    b.src.assign(directed.size(), -1);
    std::vector<int> cursor(b.indptr.begin(), b.indptr.end() - 1);
    for (auto [dest, s] : directed) b.src[static_cast<size_t>(cursor[static_cast<size_t>(dest)]++)] = s;
    return b;
}

BatchData make_batch(const GraphRecord& record) {
    std::vector<GraphRecord> one{record};
    return make_batch(one, {0});
}

// ---- GnnModel ----

GnnModel::GnnModel(ModelConfig cfg, uint64_t seed) : cfg_(cfg) { build(seed); }

Tensor& GnnModel::param(const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::logic_error("unknown parameter: " + name);
    return params_[it->second].value;
}

Tensor* GnnModel::find_param(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : &params_[it->second].value;
}

Tensor& GnnModel::add_param(const std::string& name, std::vector<int> shape, Rng& rng,
                            double init_scale) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<size_t>(n));
    for (double& v : data) v = rng.uniform(-init_scale, init_scale);
    by_name_[name] = params_.size();
    params_.push_back(Param{name, Tensor::from_data(std::move(shape), std::move(data), true)});
    return params_.back().value;
}

Tensor& GnnModel::add_param_normal(const std::string& name, std::vector<int> shape, Rng& rng,
                                   double sigma) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(static_cast<size_t>(n));
    for (double& v : data) v = rng.normal(0.0, sigma);
    by_name_[name] = params_.size();
    params_.push_back(Param{name, Tensor::from_data(std::move(shape), std::move(data), true)});
    return params_.back().value;
}

Tensor& GnnModel::add_param_const(const std::string& name, std::vector<int> shape, double v) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    by_name_[name] = params_.size();
    params_.push_back(Param{
        name, Tensor::from_data(std::move(shape), std::vector<double>(static_cast<size_t>(n), v), true)});
    return params_.back().value;
}

void GnnModel::build(uint64_t seed) {
    Rng rng(seed);
    int h = cfg_.hidden_dim;
    double sh = 1.0 / std::sqrt(static_cast<double>(h));

    add_param("encoder.type_emb", {kNumNodeTypes, h}, rng, sh);
    add_param("encoder.param_proj", {1, h}, rng, 1.0);

    for (int l = 0; l < cfg_.n_layers; ++l) {
        std::string p = "gen." + std::to_string(l) + ".";
        add_param_const(p + "ln.gamma", {h}, 1.0);
        add_param_const(p + "ln.beta", {h}, 0.0);
        add_param_const(p + "beta", {1}, 1.0);  // aggregation temperature
        add_param(p + "w1", {h, h}, rng, sh);
        add_param(p + "w2", {h, h}, rng, sh);
    }

    add_param("head.w1", {h, cfg_.head_hidden}, rng, sh);
    add_param("head.b1", {cfg_.head_hidden}, rng, sh);
    add_param("head.w2", {cfg_.head_hidden, 1}, rng, 1.0 / std::sqrt(cfg_.head_hidden));
    add_param("head.b2", {1}, rng, 1.0 / std::sqrt(cfg_.head_hidden));

    if (!cfg_.with_pool_head) return;

    int r = cfg_.latent_rows, ld = cfg_.latent_dim;
    int p_width = cfg_.graph_embed_dim();  // n_heads · head_dim
    double sl = 1.0 / std::sqrt(static_cast<double>(ld));
    double sp = 1.0 / std::sqrt(static_cast<double>(p_width));
    add_param_normal("pool.latents", {r, ld}, rng, 0.02);
    for (int cl = 0; cl < cfg_.n_cross_layers; ++cl) {
        std::string p = "pool." + std::to_string(cl) + ".";
        add_param_const(p + "ln_q.gamma", {ld}, 1.0);
        add_param_const(p + "ln_q.beta", {ld}, 0.0);
        add_param(p + "wq", {ld, p_width}, rng, sl);
        add_param(p + "bq", {p_width}, rng, sl);
        add_param(p + "wk", {h, p_width}, rng, sh);
        add_param(p + "bk", {p_width}, rng, sh);
        add_param(p + "wv", {h, p_width}, rng, sh);
        add_param(p + "bv", {p_width}, rng, sh);
        add_param(p + "wo", {p_width, ld}, rng, sp);
        add_param(p + "bo", {ld}, rng, sp);
        add_param_const(p + "ln_f.gamma", {ld}, 1.0);
        add_param_const(p + "ln_f.beta", {ld}, 0.0);
        add_param(p + "ffn_w1", {ld, 4 * ld}, rng, sl);
        add_param(p + "ffn_b1", {4 * ld}, rng, sl);
        add_param(p + "ffn_w2", {4 * ld, ld}, rng, 1.0 / std::sqrt(4.0 * ld));
        add_param(p + "ffn_b2", {ld}, rng, 1.0 / std::sqrt(4.0 * ld));
    }
    int emb = cfg_.pooling == Pooling::CrossAttention ? r * ld : h;
    double se = 1.0 / std::sqrt(static_cast<double>(emb));
    add_param("pool.out.w1", {emb, cfg_.head_hidden}, rng, se);
    add_param("pool.out.b1", {cfg_.head_hidden}, rng, se);
    add_param("pool.out.w2", {cfg_.head_hidden, 1}, rng, 1.0 / std::sqrt(cfg_.head_hidden));
    add_param("pool.out.b2", {1}, rng, 1.0 / std::sqrt(cfg_.head_hidden));
}

Tensor GnnModel::forward_nodes(const BatchData& batch) {
    int n = static_cast<int>(batch.node_types.size());
    for (int t : batch.node_types)
        if (t < 0 || t >= kNumNodeTypes)
            throw std::invalid_argument("unknown node-type code: " + std::to_string(t));

    // H0 = type embedding + param · projection row
    Tensor h = gather_rows(param("encoder.type_emb"), batch.node_types);
    {
        std::vector<double> bcast(static_cast<size_t>(n) * cfg_.hidden_dim);
        for (int i = 0; i < n; ++i)
            std::fill_n(&bcast[static_cast<size_t>(i) * cfg_.hidden_dim], cfg_.hidden_dim,
                        batch.node_params[static_cast<size_t>(i)]);
        Tensor pm = Tensor::from_data({n, cfg_.hidden_dim}, std::move(bcast));
        h = add(h, mul(tile_rows(param("encoder.param_proj"), n), pm));
    }

    for (int l = 0; l < cfg_.n_layers; ++l) {
        std::string p = "gen." + std::to_string(l) + ".";
        Tensor z = layer_norm(h, param(p + "ln.gamma"), param(p + "ln.beta"));
        Tensor msg = add_scalar(relu(gather_rows(z, batch.src)), cfg_.epsilon);
        Tensor agg = softmax_aggregate(msg, batch.indptr, param(p + "beta"));
        Tensor f = matmul(relu(matmul(agg, param(p + "w1"))), param(p + "w2"));
        h = add(h, f);
    }
    return h;
}

Tensor GnnModel::mlp_head(const Tensor& x, const std::string& prefix) {
    Tensor z = relu(add_bias(matmul(x, param(prefix + "w1")), param(prefix + "b1")));
    return add_bias(matmul(z, param(prefix + "w2")), param(prefix + "b2"));
}

Tensor GnnModel::pool_graphs(const Tensor& h, const BatchData& batch) {
    const std::vector<int>& offsets =
        cfg_.pool_output_nodes_only ? batch.output_offsets : batch.graph_offsets;
    Tensor feats = cfg_.pool_output_nodes_only ? gather_rows(h, batch.output_rows) : h;

    if (cfg_.pooling == Pooling::Mean) return mean_segments(feats, offsets);

    int b = batch.n_graphs;
    int r = cfg_.latent_rows;
    Tensor lat = tile_rows(param("pool.latents"), b);  // (B·R × ld)
    for (int cl = 0; cl < cfg_.n_cross_layers; ++cl) {
        std::string p = "pool." + std::to_string(cl) + ".";
        Tensor q = add_bias(matmul(layer_norm(lat, param(p + "ln_q.gamma"), param(p + "ln_q.beta")),
                                   param(p + "wq")),
                            param(p + "bq"));
        Tensor k = add_bias(matmul(feats, param(p + "wk")), param(p + "bk"));
        Tensor v = add_bias(matmul(feats, param(p + "wv")), param(p + "bv"));
        Tensor att = latent_cross_attention(q, k, v, offsets, r, cfg_.n_heads);
        lat = add(lat, add_bias(matmul(att, param(p + "wo")), param(p + "bo")));
        Tensor ln = layer_norm(lat, param(p + "ln_f.gamma"), param(p + "ln_f.beta"));
        Tensor ffn = add_bias(
            matmul(relu(add_bias(matmul(ln, param(p + "ffn_w1")), param(p + "ffn_b1"))),
                   param(p + "ffn_w2")),
            param(p + "ffn_b2"));
        lat = add(lat, ffn);
    }
    return reshape(lat, {b, r * cfg_.latent_dim});
}

Tensor GnnModel::predict(const BatchData& batch) {
    Tensor h = forward_nodes(batch);
    if (cfg_.with_pool_head) return mlp_head(pool_graphs(h, batch), "pool.out.");
    if (batch.output_rows.empty()) throw std::invalid_argument("batch has no supervised nodes");
    return mlp_head(gather_rows(h, batch.output_rows), "head.");
}

bool GnnModel::is_backbone_param(const std::string& name) {
    return name.rfind("encoder.", 0) == 0 || name.rfind("gen.", 0) == 0;
}

void GnnModel::freeze_backbone() {
    for (Param& p : params_)
        if (is_backbone_param(p.name)) p.value.set_requires_grad(false);
}

void GnnModel::set_all_trainable(bool trainable) {
    for (Param& p : params_) p.value.set_requires_grad(trainable);
}

void GnnModel::save_checkpoint(const std::string& path) const {
    json j;
    j["format"] = "voltgraph-checkpoint";
    j["version"] = 1;
    j["config"] = json::parse(cfg_.to_json());
    json params = json::object();
    for (const Param& p : params_) {
        json entry;
        entry["shape"] = p.value.shape();
        entry["data"] = p.value.data();
        params[p.name] = std::move(entry);
    }
    j["params"] = std::move(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump();
}

namespace {

json read_checkpoint_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing checkpoint: " + path);
    json j = json::parse(in);
    if (j.value("format", "") != "voltgraph-checkpoint")
        throw std::runtime_error("not a checkpoint file: " + path);
    return j;
}

}  // namespace

std::unique_ptr<GnnModel> GnnModel::load_checkpoint(const std::string& path) {
    json j = read_checkpoint_json(path);
    ModelConfig cfg = ModelConfig::from_json(j.at("config").dump());
    auto model = std::make_unique<GnnModel>(cfg, 0);
    for (Param& p : model->params_) {
        auto it = j.at("params").find(p.name);
        if (it == j.at("params").end())
            throw std::runtime_error("checkpoint missing parameter: " + p.name);
        auto shape = it->at("shape").get<std::vector<int>>();
        if (shape != p.value.shape())
            throw std::runtime_error("checkpoint shape mismatch for: " + p.name);
        p.value.data() = it->at("data").get<std::vector<double>>();
    }
    return model;
}

std::vector<std::string> GnnModel::load_backbone_from(const std::string& path) {
    json j = read_checkpoint_json(path);
    const json& params = j.at("params");
    std::vector<std::string> copied;
    for (Param& p : params_) {
        auto it = params.find(p.name);
        if (it == params.end()) {
            if (is_backbone_param(p.name))
                throw std::runtime_error("checkpoint missing backbone parameter: " + p.name);
            continue;
        }
        auto shape = it->at("shape").get<std::vector<int>>();
        if (shape != p.value.shape()) {
            if (is_backbone_param(p.name))
                throw std::runtime_error("checkpoint shape mismatch for: " + p.name);
            continue;
        }
        p.value.data() = it->at("data").get<std::vector<double>>();
        copied.push_back(p.name);
    }
    return copied;
}

// ---- MlpModel ----

MlpModel::MlpModel(int n_nodes, int outputs_per_graph, int n_hidden_layers, int width,
                   uint64_t seed)
    : n_nodes_(n_nodes),
      outputs_per_graph_(outputs_per_graph),
      n_hidden_layers_(n_hidden_layers),
      width_(width) {
    Rng rng(seed);
    auto add = [this, &rng](const std::string& name, std::vector<int> shape, double s) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        std::vector<double> data(static_cast<size_t>(n));
        for (double& v : data) v = rng.uniform(-s, s);
        params_.push_back(Param{name, Tensor::from_data(std::move(shape), std::move(data), true)});
    };
    int in_dim = n_nodes_ * kNodeFeatureDim;
    int prev = in_dim;
    for (int l = 0; l < n_hidden_layers_; ++l) {
        double s = 1.0 / std::sqrt(static_cast<double>(prev));
        add("mlp." + std::to_string(l) + ".w", {prev, width_}, s);
        add("mlp." + std::to_string(l) + ".b", {width_}, s);
        prev = width_;
    }
    double s = 1.0 / std::sqrt(static_cast<double>(prev));
    add("mlp.out.w", {prev, outputs_per_graph_}, s);
    add("mlp.out.b", {outputs_per_graph_}, s);
}

Tensor MlpModel::predict(const BatchData& batch) {
    int b = batch.n_graphs;
    int in_dim = n_nodes_ * kNodeFeatureDim;
    std::vector<double> feats(static_cast<size_t>(b) * in_dim, 0.0);
    for (int g = 0; g < b; ++g) {
        int lo = batch.graph_offsets[static_cast<size_t>(g)];
        int hi = batch.graph_offsets[static_cast<size_t>(g) + 1];
        if (hi - lo != n_nodes_)
            throw std::invalid_argument("fixed-topology model: node count mismatch in record " +
                                        std::to_string(batch.record_ids[static_cast<size_t>(g)]));
        int nout = batch.output_offsets[static_cast<size_t>(g) + 1] -
                   batch.output_offsets[static_cast<size_t>(g)];
        if (nout != outputs_per_graph_)
            throw std::invalid_argument("fixed-topology model: output count mismatch in record " +
                                        std::to_string(batch.record_ids[static_cast<size_t>(g)]));
        for (int i = 0; i < n_nodes_; ++i) {
            int t = batch.node_types[static_cast<size_t>(lo + i)];
            feats[static_cast<size_t>(g) * in_dim + static_cast<size_t>(i) * kNodeFeatureDim + t] = 1.0;
            feats[static_cast<size_t>(g) * in_dim + static_cast<size_t>(i) * kNodeFeatureDim +
                  kNumNodeTypes] = batch.node_params[static_cast<size_t>(lo + i)];
        }
    }
    Tensor x = Tensor::from_data({b, in_dim}, std::move(feats));
    for (size_t l = 0; l + 2 < params_.size(); l += 2)
        x = relu(add_bias(matmul(x, params_[l].value), params_[l + 1].value));
    x = add_bias(matmul(x, params_[params_.size() - 2].value), params_.back().value);
    return reshape(x, {b * outputs_per_graph_, 1});
}

}  // namespace voltgraph
