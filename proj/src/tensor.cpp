#include "voltgraph/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <cblas.h>

namespace voltgraph {

namespace {

bool g_grad_enabled = true;

int64_t shape_size(const std::vector<int>& shape) {
    int64_t s = 1;
    for (int d : shape) s *= d;
    return s;
}

void check(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return from_data(shape, std::vector<double>(static_cast<size_t>(shape_size(shape)), 0.0),
                     requires_grad);
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data, bool requires_grad) {
    check(shape_size(shape) == static_cast<int64_t>(data.size()),
          "tensor data length does not match shape");
    auto n = std::make_shared<detail::TensorNode>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

double Tensor::item() const {
    check(node_ && node_->size() == 1, "item() needs a one-element tensor");
    return node_->data[0];
}

void Tensor::backward() {
    check(node_ && node_->size() == 1, "backward() starts from a scalar");
    // Postorder over the tape; reversing it processes every node before its
    // parents.
    std::vector<detail::TensorNode*> order;
    std::unordered_set<detail::TensorNode*> seen;
    struct Frame {
        detail::TensorNode* n;
        size_t next_parent;
    };
    std::vector<Frame> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.n->parents.size()) {
            detail::TensorNode* p = f.n->parents[f.next_parent++].get();
            if (seen.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }
    node_->ensure_grad()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn && !(*it)->grad.empty()) (*it)->backward_fn(**it);
}

// Shared constructor for every op: the tape is recorded only when some input
// wants gradients and recording is enabled.
Tensor make_op(std::vector<int> shape, std::vector<double> data, std::vector<Tensor> inputs,
               std::function<void(detail::TensorNode&)> backward_fn) {
    Tensor out = Tensor::from_data(std::move(shape), std::move(data), false);
    bool rg = false;
    if (g_grad_enabled)
        for (const Tensor& t : inputs) rg = rg || t.requires_grad();
    if (rg) {
        out.node()->requires_grad = true;
        for (const Tensor& t : inputs) out.node()->parents.push_back(t.node());
        out.node()->backward_fn = std::move(backward_fn);
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "add: shape mismatch");
    std::vector<double> out(a.data());
    const auto& bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](detail::TensorNode& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "sub: shape mismatch");
    std::vector<double> out(a.data());
    const auto& bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](detail::TensorNode& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check(a.shape() == b.shape(), "mul: shape mismatch");
    std::vector<double> out(a.data());
    const auto& bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](detail::TensorNode& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * an->data[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.data());
    for (double& v : out) v *= s;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, s](detail::TensorNode& self) {
        if (!an->requires_grad) return;
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * s;
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.data());
    for (double& v : out) v += s;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](detail::TensorNode& self) {
        if (!an->requires_grad) return;
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.data());
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](detail::TensorNode& self) {
        if (!an->requires_grad) return;
        auto& g = an->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i)
            if (an->data[i] > 0.0) g[i] += self.grad[i];
    });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check(a.shape().size() == 2 && b.shape().size() == 2, "matmul: need 2-D tensors");
    check(a.cols() == b.rows(), "matmul: inner dimensions differ");
    int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    if (m > 0 && k > 0 && n > 0)
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0, a.data().data(), k,
                    b.data().data(), n, 0.0, out.data(), n);
    auto an = a.node(), bn = b.node();
    return make_op({m, n}, std::move(out), {a, b}, [an, bn, m, k, n](detail::TensorNode& self) {
        if (m == 0 || k == 0 || n == 0) return;
        if (an->requires_grad)  // dA = dC · Bᵀ
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n, 1.0, self.grad.data(), n,
                        bn->data.data(), n, 1.0, an->ensure_grad().data(), k);
        if (bn->requires_grad)  // dB = Aᵀ · dC
            cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, m, 1.0, an->data.data(), k,
                        self.grad.data(), n, 1.0, bn->ensure_grad().data(), n);
    });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    check(x.shape().size() == 2, "add_bias: x must be 2-D");
    int m = x.rows(), n = x.cols();
    check(bias.size() == n, "add_bias: bias length must equal column count");
    std::vector<double> out(x.data());
    const auto& bd = bias.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += bd[static_cast<size_t>(j)];
    auto xn = x.node(), bn = bias.node();
    return make_op(x.shape(), std::move(out), {x, bias}, [xn, bn, m, n](detail::TensorNode& self) {
        if (xn->requires_grad) {
            auto& g = xn->ensure_grad();
            for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) g[static_cast<size_t>(j)] += self.grad[static_cast<size_t>(i) * n + j];
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
    check(x.shape().size() == 2, "layer_norm: x must be 2-D");
    int m = x.rows(), n = x.cols();
    check(gamma.size() == n && beta.size() == n, "layer_norm: gain/shift length mismatch");
    constexpr double kEps = 1e-5;

    std::vector<double> out(static_cast<size_t>(m) * n);
    std::vector<double> xhat(static_cast<size_t>(m) * n);
    std::vector<double> inv_std(static_cast<size_t>(m));
    const auto& xd = x.data();
    const auto& gd = gamma.data();
    const auto& bd = beta.data();
    for (int i = 0; i < m; ++i) {
        const double* row = &xd[static_cast<size_t>(i) * n];
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += row[j];
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= n;
        double is = 1.0 / std::sqrt(var + kEps);
        inv_std[static_cast<size_t>(i)] = is;
        for (int j = 0; j < n; ++j) {
            double h = (row[j] - mean) * is;
            xhat[static_cast<size_t>(i) * n + j] = h;
            out[static_cast<size_t>(i) * n + j] = gd[static_cast<size_t>(j)] * h + bd[static_cast<size_t>(j)];
        }
    }
    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    return make_op(x.shape(), std::move(out), {x, gamma, beta},
                   [xn, gn, bn, m, n, xhat = std::move(xhat),
                    inv_std = std::move(inv_std)](detail::TensorNode& self) {
        if (gn->requires_grad) {
            auto& g = gn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    g[static_cast<size_t>(j)] += self.grad[static_cast<size_t>(i) * n + j] *
                                                 xhat[static_cast<size_t>(i) * n + j];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) g[static_cast<size_t>(j)] += self.grad[static_cast<size_t>(i) * n + j];
        }
        if (xn->requires_grad) {
            auto& g = xn->ensure_grad();
            for (int i = 0; i < m; ++i) {
                double mean_dh = 0.0, mean_dh_xhat = 0.0;
                for (int j = 0; j < n; ++j) {
                    double dh = self.grad[static_cast<size_t>(i) * n + j] * gn->data[static_cast<size_t>(j)];
                    mean_dh += dh;
                    mean_dh_xhat += dh * xhat[static_cast<size_t>(i) * n + j];
                }
                mean_dh /= n;
                mean_dh_xhat /= n;
                for (int j = 0; j < n; ++j) {
                    double dh = self.grad[static_cast<size_t>(i) * n + j] * gn->data[static_cast<size_t>(j)];
                    g[static_cast<size_t>(i) * n + j] +=
                        inv_std[static_cast<size_t>(i)] *
                        (dh - mean_dh - xhat[static_cast<size_t>(i) * n + j] * mean_dh_xhat);
                }
            }
        }
    });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
    check(shape_size(shape) == x.size(), "reshape: element count must not change");
    auto xn = x.node();
    return make_op(std::move(shape), std::vector<double>(x.data()), {x},
                   [xn](detail::TensorNode& self) {
        if (!xn->requires_grad) return;
        auto& g = xn->ensure_grad();
        for (size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& idx) {
    check(x.shape().size() == 2, "gather_rows: x must be 2-D");
    int n = x.cols();
    std::vector<double> out(idx.size() * static_cast<size_t>(n));
    const auto& xd = x.data();
    for (size_t i = 0; i < idx.size(); ++i) {
        check(idx[i] >= 0 && idx[i] < x.rows(), "gather_rows: index out of range");
        std::copy_n(&xd[static_cast<size_t>(idx[i]) * n], n, &out[i * static_cast<size_t>(n)]);
    }
    auto xn = x.node();
    return make_op({static_cast<int>(idx.size()), n}, std::move(out), {x},
                   [xn, n, idx](detail::TensorNode& self) {
        if (!xn->requires_grad) return;
        auto& g = xn->ensure_grad();
        for (size_t i = 0; i < idx.size(); ++i)
            for (int j = 0; j < n; ++j)
                g[static_cast<size_t>(idx[i]) * n + j] += self.grad[i * static_cast<size_t>(n) + j];
    });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    check(a.shape().size() == 2 && b.shape().size() == 2, "concat_cols: need 2-D tensors");
    check(a.rows() == b.rows(), "concat_cols: row count mismatch");
    int m = a.rows(), na = a.cols(), nb = b.cols();
    std::vector<double> out(static_cast<size_t>(m) * (na + nb));
    for (int i = 0; i < m; ++i) {
        std::copy_n(&a.data()[static_cast<size_t>(i) * na], na, &out[static_cast<size_t>(i) * (na + nb)]);
        std::copy_n(&b.data()[static_cast<size_t>(i) * nb], nb,
                    &out[static_cast<size_t>(i) * (na + nb) + na]);
    }
    auto an = a.node(), bn = b.node();
    return make_op({m, na + nb}, std::move(out), {a, b}, [an, bn, m, na, nb](detail::TensorNode& self) {
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < na; ++j)
                    g[static_cast<size_t>(i) * na + j] += self.grad[static_cast<size_t>(i) * (na + nb) + j];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < nb; ++j)
                    g[static_cast<size_t>(i) * nb + j] += self.grad[static_cast<size_t>(i) * (na + nb) + na + j];
        }
    });
}

Tensor tile_rows(const Tensor& x, int times) {
    check(x.shape().size() == 2, "tile_rows: x must be 2-D");
    check(times >= 1, "tile_rows: times must be positive");
    int m = x.rows(), n = x.cols();
    std::vector<double> out(static_cast<size_t>(m) * n * static_cast<size_t>(times));
    for (int t = 0; t < times; ++t)
        std::copy_n(x.data().data(), static_cast<size_t>(m) * n,
                    &out[static_cast<size_t>(t) * m * n]);
    auto xn = x.node();
    return make_op({m * times, n}, std::move(out), {x}, [xn, m, n, times](detail::TensorNode& self) {
        if (!xn->requires_grad) return;
        auto& g = xn->ensure_grad();
        for (int t = 0; t < times; ++t)
            for (size_t i = 0; i < static_cast<size_t>(m) * n; ++i)
                g[i] += self.grad[static_cast<size_t>(t) * m * n + i];
    });
}

Tensor mean_segments(const Tensor& x, const std::vector<int>& offsets) {
    check(x.shape().size() == 2, "mean_segments: x must be 2-D");
    check(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == x.rows(),
          "mean_segments: bad offsets");
    int b = static_cast<int>(offsets.size()) - 1;
    int n = x.cols();
    std::vector<double> out(static_cast<size_t>(b) * n, 0.0);
    const auto& xd = x.data();
    for (int s = 0; s < b; ++s) {
        int lo = offsets[static_cast<size_t>(s)], hi = offsets[static_cast<size_t>(s) + 1];
        if (hi <= lo) continue;
        for (int i = lo; i < hi; ++i)
            for (int j = 0; j < n; ++j) out[static_cast<size_t>(s) * n + j] += xd[static_cast<size_t>(i) * n + j];
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(s) * n + j] /= (hi - lo);
    }
    auto xn = x.node();
    return make_op({b, n}, std::move(out), {x}, [xn, offsets, b, n](detail::TensorNode& self) {
        if (!xn->requires_grad) return;
        auto& g = xn->ensure_grad();
        for (int s = 0; s < b; ++s) {
            int lo = offsets[static_cast<size_t>(s)], hi = offsets[static_cast<size_t>(s) + 1];
            if (hi <= lo) continue;
            double inv = 1.0 / (hi - lo);
            for (int i = lo; i < hi; ++i)
                for (int j = 0; j < n; ++j)
                    g[static_cast<size_t>(i) * n + j] += self.grad[static_cast<size_t>(s) * n + j] * inv;
        }
    });
}

Tensor softmax_aggregate(const Tensor& msg, const std::vector<int>& indptr, const Tensor& beta) {
    check(msg.shape().size() == 2, "softmax_aggregate: messages must be 2-D");
    check(beta.size() == 1, "softmax_aggregate: beta must be a scalar tensor");
    check(!indptr.empty() && indptr.front() == 0 && indptr.back() == msg.rows(),
          "softmax_aggregate: bad indptr");
    int dests = static_cast<int>(indptr.size()) - 1;
    int n = msg.cols();
    double bval = beta.data()[0];

    std::vector<double> out(static_cast<size_t>(dests) * n, 0.0);
    std::vector<double> weights(msg.data().size(), 0.0);
    const auto& md = msg.data();
    for (int v = 0; v < dests; ++v) {
        int lo = indptr[static_cast<size_t>(v)], hi = indptr[static_cast<size_t>(v) + 1];
        if (hi <= lo) continue;
        for (int j = 0; j < n; ++j) {
            double mx = -1e300;
            for (int e = lo; e < hi; ++e) mx = std::max(mx, bval * md[static_cast<size_t>(e) * n + j]);
            double z = 0.0;
            for (int e = lo; e < hi; ++e) {
                double w = std::exp(bval * md[static_cast<size_t>(e) * n + j] - mx);
                weights[static_cast<size_t>(e) * n + j] = w;
                z += w;
            }
            double acc = 0.0;
            for (int e = lo; e < hi; ++e) {
                double w = weights[static_cast<size_t>(e) * n + j] / z;
                weights[static_cast<size_t>(e) * n + j] = w;
                acc += w * md[static_cast<size_t>(e) * n + j];
            }
            out[static_cast<size_t>(v) * n + j] = acc;
        }
    }
    auto mn = msg.node(), bn = beta.node();
    return make_op({dests, n}, std::move(out), {msg, beta},
                   [mn, bn, indptr, dests, n, bval,
                    weights = std::move(weights)](detail::TensorNode& self) {
        // d out_v / d m_e = w_e (1 + β (m_e − out_v)) per channel;
        // d out_v / d β  = Σ_e w_e m_e² − out_v².
        for (int v = 0; v < dests; ++v) {
            int lo = indptr[static_cast<size_t>(v)], hi = indptr[static_cast<size_t>(v) + 1];
            if (hi <= lo) continue;
            for (int j = 0; j < n; ++j) {
                double av = self.data[static_cast<size_t>(v) * n + j];
                double go = self.grad[static_cast<size_t>(v) * n + j];
                if (go == 0.0) continue;
                if (mn->requires_grad) {
                    auto& g = mn->ensure_grad();
                    for (int e = lo; e < hi; ++e) {
                        double m = mn->data[static_cast<size_t>(e) * n + j];
                        double w = weights[static_cast<size_t>(e) * n + j];
                        g[static_cast<size_t>(e) * n + j] += go * w * (1.0 + bval * (m - av));
                    }
                }
                if (bn->requires_grad) {
                    double s2 = 0.0;
                    for (int e = lo; e < hi; ++e) {
                        double m = mn->data[static_cast<size_t>(e) * n + j];
                        s2 += weights[static_cast<size_t>(e) * n + j] * m * m;
                    }
                    bn->ensure_grad()[0] += go * (s2 - av * av);
                }
            }
        }
    });
}

Tensor latent_cross_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                              const std::vector<int>& node_offsets, int latents_per_graph,
                              int n_heads) {
    check(q.shape().size() == 2 && k.shape().size() == 2 && v.shape().size() == 2,
          "latent_cross_attention: need 2-D tensors");
    int p = q.cols();
    check(k.cols() == p && v.cols() == p, "latent_cross_attention: projection widths differ");
    check(p % n_heads == 0, "latent_cross_attention: width not divisible by head count");
    int b = static_cast<int>(node_offsets.size()) - 1;
    check(q.rows() == b * latents_per_graph, "latent_cross_attention: query rows != B·R");
    check(node_offsets.front() == 0 && node_offsets.back() == k.rows(),
          "latent_cross_attention: bad node offsets");
    int d = p / n_heads;
    int r = latents_per_graph;
    double scl = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<double> out(static_cast<size_t>(q.rows()) * p, 0.0);
    // Attention weights per (graph, head): r rows × n_b cols, packed per graph.
    std::vector<double> wbuf;
    {
        size_t total = 0;
        for (int g = 0; g < b; ++g)
            total += static_cast<size_t>(node_offsets[static_cast<size_t>(g) + 1] -
                                         node_offsets[static_cast<size_t>(g)]) * r * n_heads;
        wbuf.assign(total, 0.0);
    }
    std::vector<size_t> woff(static_cast<size_t>(b) + 1, 0);
    for (int g = 0; g < b; ++g)
        woff[static_cast<size_t>(g) + 1] =
            woff[static_cast<size_t>(g)] +
            static_cast<size_t>(node_offsets[static_cast<size_t>(g) + 1] -
                                node_offsets[static_cast<size_t>(g)]) * r * n_heads;

    const auto& qd = q.data();
    const auto& kd = k.data();
    const auto& vd = v.data();
    for (int g = 0; g < b; ++g) {
        int nlo = node_offsets[static_cast<size_t>(g)];
        int nb = node_offsets[static_cast<size_t>(g) + 1] - nlo;
        if (nb <= 0) continue;
        for (int h = 0; h < n_heads; ++h) {
            const double* qg = &qd[static_cast<size_t>(g) * r * p + static_cast<size_t>(h) * d];
            const double* kg = &kd[static_cast<size_t>(nlo) * p + static_cast<size_t>(h) * d];
            const double* vg = &vd[static_cast<size_t>(nlo) * p + static_cast<size_t>(h) * d];
            double* w = &wbuf[woff[static_cast<size_t>(g)] + static_cast<size_t>(h) * r * nb];
            // scores = Q·Kᵀ/√d → softmax rows → out = W·V
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, r, nb, d, scl, qg, p, kg, p, 0.0,
                        w, nb);
            for (int i = 0; i < r; ++i) {
                double* row = &w[static_cast<size_t>(i) * nb];
                double mx = *std::max_element(row, row + nb);
                double z = 0.0;
                for (int j = 0; j < nb; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    z += row[j];
                }
                for (int j = 0; j < nb; ++j) row[j] /= z;
            }
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, r, d, nb, 1.0, w, nb, vg, p, 0.0,
                        &out[static_cast<size_t>(g) * r * p + static_cast<size_t>(h) * d], p);
        }
    }

    auto qn = q.node(), kn = k.node(), vn = v.node();
    return make_op(
        {q.rows(), p}, std::move(out), {q, k, v},
        [qn, kn, vn, node_offsets, b, r, p, d, n_heads, scl, wbuf = std::move(wbuf),
         woff = std::move(woff)](detail::TensorNode& self) {
            std::vector<double> dw, ds;
            for (int g = 0; g < b; ++g) {
                int nlo = node_offsets[static_cast<size_t>(g)];
                int nb = node_offsets[static_cast<size_t>(g) + 1] - nlo;
                if (nb <= 0) continue;
                dw.assign(static_cast<size_t>(r) * nb, 0.0);
                ds.assign(static_cast<size_t>(r) * nb, 0.0);
                for (int h = 0; h < n_heads; ++h) {
                    const double* w = &wbuf[woff[static_cast<size_t>(g)] + static_cast<size_t>(h) * r * nb];
                    const double* dout = &self.grad[static_cast<size_t>(g) * r * p + static_cast<size_t>(h) * d];
                    const double* qg = &qn->data[static_cast<size_t>(g) * r * p + static_cast<size_t>(h) * d];
                    const double* kg = &kn->data[static_cast<size_t>(nlo) * p + static_cast<size_t>(h) * d];
                    const double* vg = &vn->data[static_cast<size_t>(nlo) * p + static_cast<size_t>(h) * d];

                    if (vn->requires_grad)  // dV += Wᵀ·dO
                        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, nb, d, r, 1.0, w, nb,
                                    dout, p, 1.0,
                                    &vn->ensure_grad()[static_cast<size_t>(nlo) * p + static_cast<size_t>(h) * d],
                                    p);
                    // dW = dO·Vᵀ, then softmax backward to scores.
                    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, r, nb, d, 1.0, dout, p, vg,
                                p, 0.0, dw.data(), nb);
                    for (int i = 0; i < r; ++i) {
                        double dot = 0.0;
                        for (int j = 0; j < nb; ++j)
                            dot += w[static_cast<size_t>(i) * nb + j] * dw[static_cast<size_t>(i) * nb + j];
                        for (int j = 0; j < nb; ++j)
                            ds[static_cast<size_t>(i) * nb + j] =
                                w[static_cast<size_t>(i) * nb + j] * (dw[static_cast<size_t>(i) * nb + j] - dot);
                    }
                    if (qn->requires_grad)  // dQ += dS·K/√d
                        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, r, d, nb, scl,
                                    ds.data(), nb, kg, p, 1.0,
                                    &qn->ensure_grad()[static_cast<size_t>(g) * r * p + static_cast<size_t>(h) * d],
                                    p);
                    if (kn->requires_grad)  // dK += dSᵀ·Q/√d
                        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, nb, d, r, scl,
                                    ds.data(), nb, qg, p, 1.0,
                                    &kn->ensure_grad()[static_cast<size_t>(nlo) * p + static_cast<size_t>(h) * d],
                                    p);
                }
            }
        });
}

Tensor mse_loss(const Tensor& pred, const std::vector<double>& target) {
    check(pred.size() == static_cast<int64_t>(target.size()), "mse_loss: length mismatch");
    check(!target.empty(), "mse_loss: empty target");
    double acc = 0.0;
    const auto& pd = pred.data();
    for (size_t i = 0; i < target.size(); ++i) {
        double d = pd[i] - target[i];
        acc += d * d;
    }
    acc /= static_cast<double>(target.size());
    auto pn = pred.node();
    return make_op({1}, {acc}, {pred}, [pn, target](detail::TensorNode& self) {
        if (!pn->requires_grad) return;
        auto& g = pn->ensure_grad();
        double s = 2.0 * self.grad[0] / static_cast<double>(target.size());
        for (size_t i = 0; i < target.size(); ++i) g[i] += s * (pn->data[i] - target[i]);
    });
}

Tensor bce_with_logits_loss(const Tensor& logits, const std::vector<double>& labels) {
    check(logits.size() == static_cast<int64_t>(labels.size()), "bce: length mismatch");
    check(!labels.empty(), "bce: empty labels");
    double acc = 0.0;
    const auto& zd = logits.data();
    for (size_t i = 0; i < labels.size(); ++i) {
        double z = zd[i];
        acc += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::fabs(z)));
    }
    acc /= static_cast<double>(labels.size());
    auto zn = logits.node();
    return make_op({1}, {acc}, {logits}, [zn, labels](detail::TensorNode& self) {
        if (!zn->requires_grad) return;
        auto& g = zn->ensure_grad();
        double s = self.grad[0] / static_cast<double>(labels.size());
        for (size_t i = 0; i < labels.size(); ++i) {
            double sig = 1.0 / (1.0 + std::exp(-zn->data[i]));
            g[i] += s * (sig - labels[i]);
        }
    });
}

}  // namespace voltgraph
