#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "helpers.hpp"
#include "voltgraph/model.hpp"
#include "voltgraph/solve.hpp"

using namespace voltgraph;

namespace {

ModelConfig tiny_config(int layers = 3) {
    ModelConfig cfg;
    cfg.n_layers = layers;
    cfg.hidden_dim = 8;
    cfg.head_hidden = 8;
    cfg.latent_rows = 2;
    cfg.latent_dim = 4;
    cfg.n_cross_layers = 2;
    cfg.n_heads = 2;
    return cfg;
}

GraphRecord divider_record() {
    Circuit c = testing::make_divider();
    SolveResult r = solve_dc(c);
    return to_record(0, circuit_to_graph(c, &r));
}

// Relabels every node through `perm` (new index = perm[old]), keeping the
// supervised outputs in their original declaration order.
GraphRecord permute_record(const GraphRecord& r, const std::vector<int>& perm) {
    GraphRecord out = r;
    for (size_t i = 0; i < perm.size(); ++i) {
        out.node_types[static_cast<size_t>(perm[i])] = r.node_types[i];
        out.node_params[static_cast<size_t>(perm[i])] = r.node_params[i];
    }
    for (auto& [a, b] : out.edges) {
        a = perm[static_cast<size_t>(a)];
        b = perm[static_cast<size_t>(b)];
    }
    for (int& o : out.output_nodes) o = perm[static_cast<size_t>(o)];
    return out;
}

}  // namespace

TEST_CASE("make_batch builds the disjoint union with per-node CSR") {
    GraphRecord r = divider_record();
    BatchData one = make_batch(r);
    CHECK(one.n_graphs == 1);
    CHECK(one.node_types.size() == static_cast<size_t>(r.n_nodes));
    CHECK(one.graph_offsets == std::vector<int>{0, r.n_nodes});
    CHECK(one.output_rows == std::vector<int>{r.output_nodes[0]});
    CHECK(one.targets == r.targets);
    // Every undirected edge appears once per direction.
    CHECK(one.src.size() == 2 * r.edges.size());
    REQUIRE(one.indptr.size() == static_cast<size_t>(r.n_nodes + 1));
    CHECK(one.indptr.front() == 0);
    CHECK(one.indptr.back() == static_cast<int>(one.src.size()));
    // Incoming sources per node match the undirected neighbor sets.
    for (int node = 0; node < r.n_nodes; ++node) {
        std::vector<int> want;
        for (auto [a, b] : r.edges) {
            if (a == node) want.push_back(b);
            if (b == node) want.push_back(a);
        }
        std::vector<int> got(one.src.begin() + one.indptr[static_cast<size_t>(node)],
                             one.src.begin() + one.indptr[static_cast<size_t>(node) + 1]);
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        CHECK(got == want);
    }

    GraphRecord r2 = divider_record();
    r2.id = 1;
    BatchData two = make_batch({r, r2}, {0, 1});
    CHECK(two.n_graphs == 2);
    CHECK(two.graph_offsets == std::vector<int>{0, r.n_nodes, 2 * r.n_nodes});
    CHECK(two.output_rows[1] == r.output_nodes[0] + r.n_nodes);
    CHECK(two.record_ids == std::vector<int64_t>{0, 1});
}

TEST_CASE("node-task predictions are one row per supervised output") {
    auto records = testing::solved_ladder_records(4, 99);
    GnnModel model(tiny_config(), 7);
    BatchData batch = make_batch(records, {0, 1, 2, 3});
    Tensor out = model.predict(batch);
    CHECK(out.rows() == static_cast<int>(batch.output_rows.size()));
    CHECK(out.cols() == 1);
}

TEST_CASE("predictions are invariant to batching") {
    auto records = testing::solved_ladder_records(3, 123);
    GnnModel model(tiny_config(), 42);
    NoGradGuard guard;
    Tensor joint = model.predict(make_batch(records, {0, 1, 2}));
    size_t row = 0;
    for (int i = 0; i < 3; ++i) {
        Tensor solo = model.predict(make_batch(records[static_cast<size_t>(i)]));
        for (double v : solo.data())
            CHECK(v == doctest::Approx(joint.data()[row++]).epsilon(1e-9));
    }
    CHECK(row == joint.data().size());
}

TEST_CASE("message passing is equivariant under node relabeling") {
    GraphRecord r = testing::solved_ladder_records(1, 321, 3, 3)[0];
    std::vector<int> perm(static_cast<size_t>(r.n_nodes));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(17);
    rng.shuffle(perm);
    GraphRecord p = permute_record(r, perm);

    GnnModel model(tiny_config(), 5);
    NoGradGuard guard;
    Tensor a = model.predict(make_batch(r));
    Tensor b = model.predict(make_batch(p));
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.data().size(); ++i)
        CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-9));
}

TEST_CASE("the flattened baseline is sensitive to node order") {
    GraphRecord r = divider_record();
    std::vector<int> perm(static_cast<size_t>(r.n_nodes));
    std::iota(perm.begin(), perm.end(), 0);
    std::swap(perm[0], perm[2]);  // exchange a source and a resistor terminal
    GraphRecord p = permute_record(r, perm);

    MlpModel mlp(r.n_nodes, 1, 2, 16, 5);
    NoGradGuard guard;
    double a = mlp.predict(make_batch(r)).item();
    double b = mlp.predict(make_batch(p)).item();
    CHECK(a != b);
}

TEST_CASE("full model passes a finite-difference gradient check") {
    GraphRecord r = divider_record();  // 9 nodes
    ModelConfig cfg = tiny_config(5);

    SUBCASE("node-voltage head") {
        GnnModel model(cfg, 11);
        BatchData batch = make_batch(r);
        auto forward = [&] { return mse_loss(model.predict(batch), batch.targets); };
        std::vector<Tensor> inputs;
        for (Param& p : model.params()) inputs.push_back(p.value);
        CHECK(testing::fd_check(forward, inputs) < 1e-4);
    }
    SUBCASE("cross-attention pooling head") {
        ModelConfig pool_cfg = cfg;
        pool_cfg.with_pool_head = true;
        GnnModel model(pool_cfg, 11);
        GraphRecord labeled = r;
        labeled.graph_target = 0.35;
        BatchData batch = make_batch(labeled);
        auto forward = [&] { return mse_loss(model.predict(batch), batch.graph_labels); };
        std::vector<Tensor> inputs;
        for (Param& p : model.params()) inputs.push_back(p.value);
        CHECK(testing::fd_check(forward, inputs) < 1e-4);
    }
}

TEST_CASE("pooling produces the documented embedding widths") {
    auto records = testing::solved_ladder_records(2, 8);
    ModelConfig cfg = tiny_config();
    cfg.with_pool_head = true;
    GnnModel model(cfg, 3);
    BatchData batch = make_batch(records, {0, 1});
    NoGradGuard guard;
    Tensor h = model.forward_nodes(batch);
    CHECK(h.cols() == cfg.hidden_dim);
    Tensor pooled = model.pool_graphs(h, batch);
    CHECK(pooled.rows() == 2);
    CHECK(pooled.cols() == cfg.graph_embed_dim());

    ModelConfig mean_cfg = cfg;
    mean_cfg.pooling = Pooling::Mean;
    GnnModel mean_model(mean_cfg, 3);
    Tensor mh = mean_model.forward_nodes(batch);
    Tensor mp = mean_model.pool_graphs(mh, batch);
    CHECK(mp.rows() == 2);
    CHECK(mp.cols() == mean_cfg.hidden_dim);
}

TEST_CASE("backbone freezing stops exactly the encoder and stack") {
    GnnModel model(tiny_config(), 9);
    model.freeze_backbone();
    for (Param& p : model.params()) {
        bool backbone = GnnModel::is_backbone_param(p.name);
        CHECK(p.value.requires_grad() == !backbone);
    }
    model.set_all_trainable(true);
    for (Param& p : model.params()) CHECK(p.value.requires_grad());
    model.set_all_trainable(false);
    for (Param& p : model.params()) CHECK_FALSE(p.value.requires_grad());
}

TEST_CASE("checkpoints round-trip parameters exactly") {
    namespace fs = std::filesystem;
    std::string dir = testing::scratch_dir("ckpt");
    std::string path = dir + "/model.json";

    ModelConfig cfg = tiny_config();
    cfg.with_pool_head = true;
    GnnModel model(cfg, 31);
    model.save_checkpoint(path);

    std::unique_ptr<GnnModel> back = GnnModel::load_checkpoint(path);
    REQUIRE(back->params().size() == model.params().size());
    for (size_t i = 0; i < model.params().size(); ++i) {
        CHECK(back->params()[i].name == model.params()[i].name);
        CHECK(back->params()[i].value.data() == model.params()[i].value.data());
    }

    GnnModel fresh(cfg, 999);
    std::vector<std::string> copied = fresh.load_backbone_from(path);
    CHECK_FALSE(copied.empty());
    for (Param& p : fresh.params()) {
        Tensor* ref = model.find_param(p.name);
        REQUIRE(ref != nullptr);
        bool was_copied =
            std::find(copied.begin(), copied.end(), p.name) != copied.end();
        if (was_copied)
            CHECK(p.value.data() == ref->data());
        if (GnnModel::is_backbone_param(p.name)) CHECK(was_copied);
    }
    fs::remove_all(dir);
}

TEST_CASE("model config serializes and restores") {
    ModelConfig cfg = tiny_config();
    cfg.pooling = Pooling::Mean;
    cfg.with_pool_head = true;
    cfg.pool_output_nodes_only = true;
    ModelConfig back = ModelConfig::from_json(cfg.to_json());
    CHECK(back.n_layers == cfg.n_layers);
    CHECK(back.hidden_dim == cfg.hidden_dim);
    CHECK(back.head_hidden == cfg.head_hidden);
    CHECK(back.latent_rows == cfg.latent_rows);
    CHECK(back.latent_dim == cfg.latent_dim);
    CHECK(back.n_cross_layers == cfg.n_cross_layers);
    CHECK(back.n_heads == cfg.n_heads);
    CHECK(back.epsilon == cfg.epsilon);
    CHECK(back.with_pool_head == cfg.with_pool_head);
    CHECK(back.pooling == cfg.pooling);
    CHECK(back.pool_output_nodes_only == cfg.pool_output_nodes_only);
}

TEST_CASE("pooling names round-trip") {
    CHECK(pooling_from_name(pooling_name(Pooling::CrossAttention)) == Pooling::CrossAttention);
    CHECK(pooling_from_name(pooling_name(Pooling::Mean)) == Pooling::Mean);
    CHECK_THROWS(pooling_from_name("sum"));
}
