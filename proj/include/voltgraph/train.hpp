#pragma once

#include <memory>
#include <string>
#include <vector>

#include "voltgraph/model.hpp"

namespace voltgraph {

// Linear interpolation from lr0 at step 0 to lr1 at the final step.
double lr_at(int step, int total_steps, double lr0, double lr1);

struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void step(std::vector<Param>& params, double lr);
    void zero_grad(std::vector<Param>& params);

private:
    struct Slot {
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    int64_t t_ = 0;
};

struct Hyper {
    int total_steps = 4000;
    int batch_size = 64;
    int eval_interval = 100;
    double lr0 = 1e-3;
    double lr1 = 5e-5;
    int patience = 20;        // evaluations without a new best before stopping
    int acc_k = 100;          // validation selection metric
    uint64_t seed = 1;
    int eval_batch_size = 256;
    int train_eval_cap = 512;  // train-metric subsample per evaluation
};

struct EvalPoint {
    int step = 0;            // steps completed when evaluated
    double lr = 0.0;
    double train_loss = 0.0;  // running mean since last evaluation
    double train_acc = 0.0;
    double val_acc = 0.0;
    double val_mse = 0.0;
};

struct TrainHistory {
    std::vector<EvalPoint> points;
    int best_step = -1;
    double best_val_acc = -1.0;
    int steps_run = 0;
    bool early_stopped = false;
};

// Adam + MSE with the linear learning-rate schedule; evaluates every
// eval_interval steps, keeps the best-validation parameters, stops after
// `patience` evaluations without improvement, and restores the best
// parameters before returning. Deterministic given hyper.seed.
// Throws on a non-finite loss, naming the step.
TrainHistory train_model(PredictModel& model, const std::vector<GraphRecord>& train,
                         const std::vector<GraphRecord>& val, const Hyper& hyper);

enum class FineTuneMode { FPT, FTPT, Scratch };

const char* fine_tune_mode_name(FineTuneMode m);
FineTuneMode fine_tune_mode_from_name(const std::string& name);

// Builds a model for a downstream task. FPT and FTPT start from the
// checkpoint's backbone (FPT freezes it); Scratch initializes fresh from the
// seed. Heads the checkpoint also has (matching shapes) are carried over for
// FPT/FTPT. Throws when the checkpoint is missing or incompatible.
std::unique_ptr<GnnModel> configure_fine_tune(const std::string& checkpoint_path,
                                              const ModelConfig& target_cfg, FineTuneMode mode,
                                              uint64_t seed);

}  // namespace voltgraph
