#pragma once

#include <string>
#include <vector>

#include "voltgraph/metrics.hpp"
#include "voltgraph/train.hpp"

namespace voltgraph {

// FNV-1a over a canonical serialization; stamped into every metrics CSV so
// identical inputs are provably identical runs.
uint64_t config_hash_of(const std::string& serialized);
std::string hash_hex(uint64_t h);

struct PretrainConfig {
    std::string dataset_dir;
    std::string out_dir;  // history.csv, checkpoint.json, summary.json
    std::string run_name = "pretrain";
    ModelConfig model;
    Hyper hyper;
};

struct PretrainResult {
    TrainHistory history;
    std::string checkpoint_path;
    double final_val_acc = 0.0;  // best-validation Acc@K
    uint64_t config_hash = 0;
    uint64_t dataset_hash = 0;
};

// Node-voltage pretraining on the train/val splits of a mixed-size dataset;
// saves the best-validation checkpoint and the evaluation history CSV.
PretrainResult run_pretrain(const PretrainConfig& cfg);

struct ZeroShotResult {
    std::string dataset_dir;
    MetricReport report;
};

// Pure inference with a trained checkpoint over the test split of each
// dataset; appends one CSV row per dataset.
std::vector<ZeroShotResult> run_zero_shot(const std::string& checkpoint_path,
                                          const std::vector<std::string>& dataset_dirs,
                                          const std::string& out_csv, int acc_k = 100);

enum class FixedArch { Gnn, Mlp5 };

struct FixedBaselineConfig {
    std::string dataset_dir;  // every record must share one topology
    FixedArch arch = FixedArch::Gnn;
    int gnn_layers = 10;
    ModelConfig model;  // used for Gnn arch (n_layers overridden by gnn_layers)
    Hyper hyper;
    std::string out_csv;
};

struct FixedBaselineResult {
    MetricReport test;
    TrainHistory history;
};

// Trains a specialized model on one fixed topology and scores the test split.
FixedBaselineResult run_fixed_baseline(const FixedBaselineConfig& cfg);

struct FinetuneCurveConfig {
    std::string checkpoint_path;  // needed for FT-PT / FPT modes
    std::string dataset_dir;
    Task task = Task::NodeVoltage;
    std::string graph_label_key = "rout_ohms";
    bool log_transform_label = true;  // graph task trains on log10(label/1000)
    std::vector<double> fractions{0.1, 0.25, 0.5, 1.0};
    std::vector<FineTuneMode> modes{FineTuneMode::FTPT, FineTuneMode::Scratch};
    std::vector<Pooling> poolings{Pooling::CrossAttention};  // graph task only
    std::vector<uint64_t> seeds{1, 2, 3};
    ModelConfig model;
    Hyper hyper;
    std::string out_csv;
};

struct CurvePoint {
    double fraction = 0.0;
    FineTuneMode mode = FineTuneMode::Scratch;
    Pooling pooling = Pooling::CrossAttention;
    uint64_t seed = 0;
    double acc = 0.0;
    double mse = 0.0;
    int steps_run = 0;
};

struct CurveTable {
    std::vector<CurvePoint> rows;
};

// For each (fraction, mode[, pooling]) × seed: train on the leading
// `fraction` of a seed-shuffled train split, early-stop on val, score the
// held-out test split. Throws when a fraction rounds below one example.
CurveTable run_finetune_curve(const FinetuneCurveConfig& cfg);

struct CurveSummaryRow {
    double fraction = 0.0;
    FineTuneMode mode = FineTuneMode::Scratch;
    Pooling pooling = Pooling::CrossAttention;
    double mean_acc = 0.0;
    double stderr_acc = 0.0;  // sample stddev / √n
    double median_acc = 0.0;
    int n = 0;
};

std::vector<CurveSummaryRow> summarize_curve(const CurveTable& table);
void write_curve_summary_csv(const std::vector<CurveSummaryRow>& rows, const std::string& path);

// Sets record.graph_target from graph_labels[key] (optionally log10(x/1000))
// on every record; throws if a record lacks the label.
void apply_graph_target(std::vector<GraphRecord>& records, const std::string& key,
                        bool log_transform);

double median_of(std::vector<double> v);

}  // namespace voltgraph
