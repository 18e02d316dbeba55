#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace voltgraph {

namespace detail {

struct TensorNode {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated on first use
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    int64_t size() const {
        int64_t s = 1;
        for (int d : shape) s *= d;
        return s;
    }
    std::vector<double>& ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

// Row-major double tensor with reverse-mode differentiation. Each op records
// its inputs and a backward closure; backward() walks the tape once in
// reverse topological order. Gradients accumulate additively across uses.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    int64_t size() const { return node_->size(); }
    int rows() const { return node_->shape.at(0); }
    int cols() const { return node_->shape.at(1); }

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    std::vector<double>& grad() { return node_->ensure_grad(); }
    bool has_grad() const { return !node_->grad.empty(); }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    double item() const;

    // Root must be scalar.
    void backward();

    void zero_grad() { if (node_ && !node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0); }

    std::shared_ptr<detail::TensorNode> node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
    std::shared_ptr<detail::TensorNode> node_;

    friend Tensor make_op(std::vector<int> shape, std::vector<double> data,
                          std::vector<Tensor> inputs,
                          std::function<void(detail::TensorNode&)> backward_fn);
};

// Disables tape recording in its scope (inference / frozen evaluation).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

// ---- elementwise and linear algebra ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
// (m×k)·(k×n); BLAS-backed.
Tensor matmul(const Tensor& a, const Tensor& b);
// x: (m×n), bias: (n) or (1×n), broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// Row-wise normalization with learnable gain/shift; eps = 1e-5.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);

// ---- shape plumbing ----
Tensor reshape(const Tensor& x, std::vector<int> shape);
Tensor gather_rows(const Tensor& x, const std::vector<int>& idx);
Tensor concat_cols(const Tensor& a, const Tensor& b);
// Vertically repeats the whole matrix `times` times.
Tensor tile_rows(const Tensor& x, int times);
// offsets: B+1 row boundaries; mean over each segment, empty segments → 0.
Tensor mean_segments(const Tensor& x, const std::vector<int>& offsets);

// ---- graph aggregation ----
// Messages m (rows = directed edges) reduced onto destinations by
// per-channel softmax weights exp(beta·m) normalized over each destination's
// incoming edges. indptr: D+1 boundaries into msg rows grouped by
// destination. beta: shape {1}, learnable temperature. Destinations with no
// incoming edges produce zero rows.
Tensor softmax_aggregate(const Tensor& msg, const std::vector<int>& indptr, const Tensor& beta);

// ---- attention ----
// q: (B·R × P) latent queries, k/v: (ΣN × P) packed node projections,
// node_offsets: B+1 row boundaries of k/v per graph. Scaled dot-product
// attention per graph and head (P = n_heads · head_dim); latents attend to
// nodes only, so cost is linear in node count.
Tensor latent_cross_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                              const std::vector<int>& node_offsets, int latents_per_graph,
                              int n_heads);

// ---- losses ----
Tensor mse_loss(const Tensor& pred, const std::vector<double>& target);
Tensor bce_with_logits_loss(const Tensor& logits, const std::vector<double>& labels);

}  // namespace voltgraph
