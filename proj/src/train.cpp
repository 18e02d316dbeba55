#include "voltgraph/train.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "voltgraph/metrics.hpp"

namespace voltgraph {

double lr_at(int step, int total_steps, double lr0, double lr1) {
    if (total_steps <= 1) return lr0;
    double f = static_cast<double>(step) / static_cast<double>(total_steps - 1);
    f = std::clamp(f, 0.0, 1.0);
    return lr0 + (lr1 - lr0) * f;
}

void Adam::step(std::vector<Param>& params, double lr) {
    if (slots_.empty()) slots_.resize(params.size());
    ++t_;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (size_t p = 0; p < params.size(); ++p) {
        Tensor& w = params[p].value;
        if (!w.requires_grad() || !w.has_grad()) continue;
        Slot& s = slots_[p];
        auto& data = w.data();
        auto& grad = w.grad();
        if (s.m.empty()) {
            s.m.assign(data.size(), 0.0);
            s.v.assign(data.size(), 0.0);
        }
        for (size_t i = 0; i < data.size(); ++i) {
            double g = grad[i];
            s.m[i] = beta1 * s.m[i] + (1.0 - beta1) * g;
            s.v[i] = beta2 * s.v[i] + (1.0 - beta2) * g * g;
            double mhat = s.m[i] / c1;
            double vhat = s.v[i] / c2;
            data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

void Adam::zero_grad(std::vector<Param>& params) {
    for (Param& p : params) p.value.zero_grad();
}

namespace {

// Endless deterministic shuffled index stream over the training set.
class BatchFeeder {
public:
    BatchFeeder(int n, uint64_t seed) : n_(n), rng_(seed) { refill(); }

    std::vector<int> next(int batch_size) {
        std::vector<int> out;
        out.reserve(static_cast<size_t>(batch_size));
        while (static_cast<int>(out.size()) < batch_size) {
            if (cursor_ == order_.size()) refill();
            out.push_back(order_[cursor_++]);
        }
        return out;
    }

private:
    void refill() {
        if (order_.empty()) {
            order_.resize(static_cast<size_t>(n_));
            for (int i = 0; i < n_; ++i) order_[static_cast<size_t>(i)] = i;
        }
        rng_.shuffle(order_);
        cursor_ = 0;
    }

    int n_;
    Rng rng_;
    std::vector<int> order_;
    size_t cursor_ = 0;
};

struct Snapshot {
    std::vector<std::vector<double>> values;

    void capture(const std::vector<Param>& params) {
        values.clear();
        values.reserve(params.size());
        for (const Param& p : params) values.push_back(p.value.data());
    }
    void restore(std::vector<Param>& params) const {
        for (size_t i = 0; i < params.size(); ++i) params[i].value.data() = values[i];
    }
    bool empty() const { return values.empty(); }
};

}  // namespace

TrainHistory train_model(PredictModel& model, const std::vector<GraphRecord>& train,
                         const std::vector<GraphRecord>& val, const Hyper& hyper) {
    if (train.empty()) throw std::invalid_argument("training set is empty");
    if (val.empty()) throw std::invalid_argument("validation set is empty");

    Adam opt;
    BatchFeeder feeder(static_cast<int>(train.size()), hyper.seed);
    Rng eval_rng = Rng::derive(hyper.seed, 0x7261696e);

    TrainHistory hist;
    Snapshot best;
    int evals_since_best = 0;

    double loss_acc = 0.0;
    int loss_count = 0;

    for (int step = 0; step < hyper.total_steps; ++step) {
        double lr = lr_at(step, hyper.total_steps, hyper.lr0, hyper.lr1);
        std::vector<int> which = feeder.next(hyper.batch_size);
        BatchData batch = make_batch(train, which);
        Tensor pred = model.predict(batch);
        Tensor loss = mse_loss(pred, batch.targets_for(model.task()));
        if (!std::isfinite(loss.item()))
            throw std::runtime_error("non-finite loss at step " + std::to_string(step));
        opt.zero_grad(model.params());
        loss.backward();
        opt.step(model.params(), lr);
        loss_acc += loss.item();
        ++loss_count;
        hist.steps_run = step + 1;

        bool last_step = step + 1 == hyper.total_steps;
        if ((step + 1) % hyper.eval_interval != 0 && !last_step) continue;

        // Train metric on a capped random subsample; validation on the
        // whole split.
        std::vector<int> train_probe;
        {
            int cap = std::min<int>(hyper.train_eval_cap, static_cast<int>(train.size()));
            std::vector<int> all(train.size());
            for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
            eval_rng.shuffle(all);
            train_probe.assign(all.begin(), all.begin() + cap);
        }
        EvalPoint pt;
        pt.step = step + 1;
        pt.lr = lr;
        pt.train_loss = loss_count > 0 ? loss_acc / loss_count : 0.0;
        loss_acc = 0.0;
        loss_count = 0;
        {
            NoGradGuard ng;
            std::vector<GraphRecord> probe;
            probe.reserve(train_probe.size());
            for (int i : train_probe) probe.push_back(train[static_cast<size_t>(i)]);
            MetricReport tr = evaluate_model(model, probe, {hyper.acc_k}, hyper.eval_batch_size);
            MetricReport vr = evaluate_model(model, val, {hyper.acc_k}, hyper.eval_batch_size);
            pt.train_acc = tr.acc_at_k.at(hyper.acc_k);
            pt.val_acc = vr.acc_at_k.at(hyper.acc_k);
            pt.val_mse = vr.mse;
        }
        hist.points.push_back(pt);

        if (pt.val_acc > hist.best_val_acc) {
            hist.best_val_acc = pt.val_acc;
            hist.best_step = pt.step;
            best.capture(model.params());
            evals_since_best = 0;
        } else {
            ++evals_since_best;
            if (evals_since_best >= hyper.patience) {
                hist.early_stopped = true;
                break;
            }
        }
    }

    if (!best.empty()) best.restore(model.params());
    return hist;
}

const char* fine_tune_mode_name(FineTuneMode m) {
    switch (m) {
        case FineTuneMode::FPT: return "fpt";
        case FineTuneMode::FTPT: return "ft-pt";
        case FineTuneMode::Scratch: return "scratch";
    }
    return "?";
}

FineTuneMode fine_tune_mode_from_name(const std::string& name) {
    if (name == "fpt") return FineTuneMode::FPT;
    if (name == "ft-pt" || name == "ftpt") return FineTuneMode::FTPT;
    if (name == "scratch") return FineTuneMode::Scratch;
    throw std::invalid_argument("unknown fine-tune mode: " + name);
}

std::unique_ptr<GnnModel> configure_fine_tune(const std::string& checkpoint_path,
                                              const ModelConfig& target_cfg, FineTuneMode mode,
                                              uint64_t seed) {
    auto model = std::make_unique<GnnModel>(target_cfg, seed);
    if (mode == FineTuneMode::Scratch) return model;
    if (!std::filesystem::exists(checkpoint_path))
        throw std::runtime_error("missing checkpoint: " + checkpoint_path);
    model->load_backbone_from(checkpoint_path);
    if (mode == FineTuneMode::FPT) model->freeze_backbone();
    return model;
}

}  // namespace voltgraph
