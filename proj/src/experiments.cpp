#include "voltgraph/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "voltgraph/netlist.hpp"

namespace voltgraph {

uint64_t config_hash_of(const std::string& serialized) { return fnv1a64(serialized); }

std::string hash_hex(uint64_t h) {
    std::ostringstream ss;
    ss << "0x" << std::hex << h;
    return ss.str();
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty set");
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void apply_graph_target(std::vector<GraphRecord>& records, const std::string& key,
                        bool log_transform) {
    for (GraphRecord& r : records) {
        auto it = r.graph_labels.find(key);
        if (it == r.graph_labels.end())
            throw std::runtime_error("record " + std::to_string(r.id) + " lacks graph label: " + key);
        r.graph_target = log_transform ? std::log10(it->second / 1000.0) : it->second;
    }
}

namespace {

std::string hyper_string(const Hyper& h) {
    std::ostringstream ss;
    ss << "steps=" << h.total_steps << ";batch=" << h.batch_size << ";eval=" << h.eval_interval
       << ";lr0=" << format_double(h.lr0) << ";lr1=" << format_double(h.lr1)
       << ";patience=" << h.patience << ";k=" << h.acc_k << ";seed=" << h.seed
       << ";cap=" << h.train_eval_cap;
    return ss.str();
}

void write_history_csv(const std::string& path, const TrainHistory& hist, uint64_t seed,
                       uint64_t config_hash, uint64_t dataset_hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "step,lr,train_loss,train_acc,val_acc,val_mse,seed,config_hash,dataset_hash\n";
    for (const EvalPoint& p : hist.points)
        out << p.step << ',' << format_double(p.lr) << ',' << format_double(p.train_loss) << ','
            << format_double(p.train_acc) << ',' << format_double(p.val_acc) << ','
            << format_double(p.val_mse) << ',' << seed << ',' << hash_hex(config_hash) << ','
            << hash_hex(dataset_hash) << '\n';
}

}  // namespace

PretrainResult run_pretrain(const PretrainConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    std::vector<GraphRecord> train = load_split(cfg.dataset_dir, Split::Train);
    std::vector<GraphRecord> val = load_split(cfg.dataset_dir, Split::Val);
    DatasetManifest manifest = load_manifest(cfg.dataset_dir);

    GnnModel model(cfg.model, cfg.hyper.seed);
    TrainHistory hist = train_model(model, train, val, cfg.hyper);

    PretrainResult res;
    res.history = std::move(hist);
    res.final_val_acc = res.history.best_val_acc;
    res.config_hash = config_hash_of(cfg.model.to_json() + "|" + hyper_string(cfg.hyper));
    res.dataset_hash = manifest.content_hash;
    res.checkpoint_path = cfg.out_dir + "/checkpoint.json";
    model.save_checkpoint(res.checkpoint_path);
    write_history_csv(cfg.out_dir + "/history.csv", res.history, cfg.hyper.seed, res.config_hash,
                      res.dataset_hash);

    std::ofstream summary(cfg.out_dir + "/summary.json", std::ios::binary);
    summary << "{\"run\":\"" << cfg.run_name << "\",\"best_val_acc\":"
            << format_double(res.final_val_acc) << ",\"best_step\":" << res.history.best_step
            << ",\"steps_run\":" << res.history.steps_run << ",\"config_hash\":\""
            << hash_hex(res.config_hash) << "\",\"dataset_hash\":\"" << hash_hex(res.dataset_hash)
            << "\"}\n";
    return res;
}

std::vector<ZeroShotResult> run_zero_shot(const std::string& checkpoint_path,
                                          const std::vector<std::string>& dataset_dirs,
                                          const std::string& out_csv, int acc_k) {
    std::unique_ptr<GnnModel> model = GnnModel::load_checkpoint(checkpoint_path);
    model->set_all_trainable(false);  // pure inference

    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_csv);
    out << "dataset,n_examples,acc_at_" << acc_k
        << ",mse,range_min,range_max,config_hash,dataset_hash\n";

    uint64_t config_hash = config_hash_of(model->config().to_json() + "|" + checkpoint_path);
    std::vector<ZeroShotResult> results;
    for (const std::string& dir : dataset_dirs) {
        std::vector<GraphRecord> test = load_split(dir, Split::Test);
        if (test.empty()) throw std::runtime_error("dataset has no test split: " + dir);
        MetricReport rep = evaluate_model(*model, test, {acc_k});
        DatasetManifest manifest = load_manifest(dir);
        out << manifest.name << ',' << rep.n_examples << ',' << format_double(rep.acc_at_k.at(acc_k))
            << ',' << format_double(rep.mse) << ',' << format_double(rep.range_min) << ','
            << format_double(rep.range_max) << ',' << hash_hex(config_hash) << ','
            << hash_hex(manifest.content_hash) << '\n';
        results.push_back(ZeroShotResult{dir, rep});
    }
    return results;
}

FixedBaselineResult run_fixed_baseline(const FixedBaselineConfig& cfg) {
    std::vector<GraphRecord> train = load_split(cfg.dataset_dir, Split::Train);
    std::vector<GraphRecord> val = load_split(cfg.dataset_dir, Split::Val);
    std::vector<GraphRecord> test = load_split(cfg.dataset_dir, Split::Test);
    if (train.empty() || val.empty() || test.empty())
        throw std::runtime_error("fixed baseline needs train/val/test splits");

    // One topology only: same node count, type sequence, and output count.
    const GraphRecord& ref = train.front();
    auto same_topology = [&ref](const GraphRecord& r) {
        return r.n_nodes == ref.n_nodes && r.node_types == ref.node_types &&
               r.edges == ref.edges && r.output_nodes == ref.output_nodes;
    };
    for (const auto* split : {&train, &val, &test})
        for (const GraphRecord& r : *split)
            if (!same_topology(r))
                throw std::runtime_error("fixed-topology dataset mixes topologies at record " +
                                         std::to_string(r.id));

    DatasetManifest manifest = load_manifest(cfg.dataset_dir);
    FixedBaselineResult res;
    uint64_t config_hash = 0;
    if (cfg.arch == FixedArch::Gnn) {
        ModelConfig mc = cfg.model;
        mc.n_layers = cfg.gnn_layers;
        mc.with_pool_head = false;
        GnnModel model(mc, cfg.hyper.seed);
        res.history = train_model(model, train, val, cfg.hyper);
        res.test = evaluate_model(model, test, {cfg.hyper.acc_k});
        config_hash = config_hash_of(mc.to_json() + "|" + hyper_string(cfg.hyper));
    } else {
        MlpModel model(ref.n_nodes, static_cast<int>(ref.output_nodes.size()), 5, 512,
                       cfg.hyper.seed);
        res.history = train_model(model, train, val, cfg.hyper);
        res.test = evaluate_model(model, test, {cfg.hyper.acc_k});
        config_hash = config_hash_of(std::string("mlp5x512|") + hyper_string(cfg.hyper));
    }

    if (!cfg.out_csv.empty()) {
        bool fresh = !std::filesystem::exists(cfg.out_csv);
        std::ofstream out(cfg.out_csv, std::ios::binary | std::ios::app);
        if (fresh)
            out << "arch,n_examples,acc,mse,range_min,range_max,seed,config_hash,dataset_hash\n";
        out << (cfg.arch == FixedArch::Gnn ? "gnn-" + std::to_string(cfg.gnn_layers) : "mlp-5")
            << ',' << res.test.n_examples << ',' << format_double(res.test.acc_at_k.at(cfg.hyper.acc_k))
            << ',' << format_double(res.test.mse) << ',' << format_double(res.test.range_min) << ','
            << format_double(res.test.range_max) << ',' << cfg.hyper.seed << ','
            << hash_hex(config_hash) << ',' << hash_hex(manifest.content_hash) << '\n';
    }
    return res;
}

CurveTable run_finetune_curve(const FinetuneCurveConfig& cfg) {
    std::vector<GraphRecord> train = load_split(cfg.dataset_dir, Split::Train);
    std::vector<GraphRecord> val = load_split(cfg.dataset_dir, Split::Val);
    std::vector<GraphRecord> test = load_split(cfg.dataset_dir, Split::Test);
    if (train.empty() || val.empty() || test.empty())
        throw std::runtime_error("fine-tune curve needs train/val/test splits");
    if (cfg.task == Task::GraphLabel) {
        apply_graph_target(train, cfg.graph_label_key, cfg.log_transform_label);
        apply_graph_target(val, cfg.graph_label_key, cfg.log_transform_label);
        apply_graph_target(test, cfg.graph_label_key, cfg.log_transform_label);
    }
    DatasetManifest manifest = load_manifest(cfg.dataset_dir);

    std::ofstream out;
    if (!cfg.out_csv.empty()) {
        out.open(cfg.out_csv, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + cfg.out_csv);
        out << "task,fraction,mode,pooling,seed,n_train,acc,mse,steps_run,config_hash,dataset_hash\n";
    }

    std::vector<Pooling> poolings =
        cfg.task == Task::GraphLabel ? cfg.poolings : std::vector<Pooling>{Pooling::CrossAttention};

    CurveTable table;
    for (double fraction : cfg.fractions) {
        int64_t n_sub = std::llround(fraction * static_cast<double>(train.size()));
        if (n_sub < 1)
            throw std::invalid_argument("fraction " + format_double(fraction) +
                                        " leaves no training example");
        n_sub = std::min<int64_t>(n_sub, static_cast<int64_t>(train.size()));
        for (FineTuneMode mode : cfg.modes) {
            for (Pooling pooling : poolings) {
                for (uint64_t seed : cfg.seeds) {
                    // Subset = leading n_sub of a seed-shuffled index order,
                    // so smaller fractions nest inside larger ones per seed.
                    std::vector<int> order(train.size());
                    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
                    Rng sub_rng = Rng::derive(seed, 0x53554253);
                    sub_rng.shuffle(order);
                    std::vector<GraphRecord> sub;
                    sub.reserve(static_cast<size_t>(n_sub));
                    for (int64_t i = 0; i < n_sub; ++i)
                        sub.push_back(train[static_cast<size_t>(order[static_cast<size_t>(i)])]);

                    ModelConfig mc = cfg.model;
                    mc.with_pool_head = cfg.task == Task::GraphLabel;
                    mc.pooling = pooling;
                    Hyper hy = cfg.hyper;
                    hy.seed = seed;
                    auto model = configure_fine_tune(cfg.checkpoint_path, mc, mode, seed);
                    TrainHistory hist = train_model(*model, sub, val, hy);
                    MetricReport rep = evaluate_model(*model, test, {hy.acc_k});

                    CurvePoint pt;
                    pt.fraction = fraction;
                    pt.mode = mode;
                    pt.pooling = pooling;
                    pt.seed = seed;
                    pt.acc = rep.acc_at_k.at(hy.acc_k);
                    pt.mse = rep.mse;
                    pt.steps_run = hist.steps_run;
                    table.rows.push_back(pt);

                    if (out.is_open()) {
                        uint64_t config_hash = config_hash_of(
                            mc.to_json() + "|" + hyper_string(hy) + "|" +
                            fine_tune_mode_name(mode) + "|" + format_double(fraction));
                        out << (cfg.task == Task::GraphLabel ? "graph" : "node") << ','
                            << format_double(fraction) << ',' << fine_tune_mode_name(mode) << ','
                            << pooling_name(pooling) << ',' << seed << ',' << n_sub << ','
                            << format_double(pt.acc) << ',' << format_double(pt.mse) << ','
                            << pt.steps_run << ',' << hash_hex(config_hash) << ','
                            << hash_hex(manifest.content_hash) << '\n';
                    }
                }
            }
        }
    }
    return table;
}

std::vector<CurveSummaryRow> summarize_curve(const CurveTable& table) {
    std::vector<CurveSummaryRow> rows;
    for (const CurvePoint& p : table.rows) {
        auto it = std::find_if(rows.begin(), rows.end(), [&p](const CurveSummaryRow& r) {
            return r.fraction == p.fraction && r.mode == p.mode && r.pooling == p.pooling;
        });
        if (it == rows.end()) {
            rows.push_back(CurveSummaryRow{p.fraction, p.mode, p.pooling, 0.0, 0.0, 0.0, 0});
            it = rows.end() - 1;
        }
        ++it->n;
    }
    for (CurveSummaryRow& r : rows) {
        std::vector<double> accs;
        for (const CurvePoint& p : table.rows)
            if (p.fraction == r.fraction && p.mode == r.mode && p.pooling == r.pooling)
                accs.push_back(p.acc);
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        r.mean_acc = mean;
        r.stderr_acc = accs.size() > 1
                           ? std::sqrt(var / static_cast<double>(accs.size() - 1)) /
                                 std::sqrt(static_cast<double>(accs.size()))
                           : 0.0;
        r.median_acc = median_of(accs);
    }
    return rows;
}

void write_curve_summary_csv(const std::vector<CurveSummaryRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "fraction,mode,pooling,mean_acc,stderr_acc,median_acc,n_seeds\n";
    for (const CurveSummaryRow& r : rows)
        out << format_double(r.fraction) << ',' << fine_tune_mode_name(r.mode) << ','
            << pooling_name(r.pooling) << ',' << format_double(r.mean_acc) << ','
            << format_double(r.stderr_acc) << ',' << format_double(r.median_acc) << ',' << r.n
            << '\n';
}

}  // namespace voltgraph
