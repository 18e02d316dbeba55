// Command-line front end: dataset generation, DC solving, training runs,
// evaluation sweeps, and design optimization. Every run is deterministic
// given its --seed, and all metric outputs are CSV.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voltgraph/designopt.hpp"
#include "voltgraph/experiments.hpp"
#include "voltgraph/netlist.hpp"
#include "voltgraph/solve.hpp"

namespace {

using namespace voltgraph;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const std::string& t : split_list(s)) out.push_back(std::stod(t));
    return out;
}

std::vector<uint64_t> parse_seeds(const std::string& s) {
    std::vector<uint64_t> out;
    for (const std::string& t : split_list(s)) out.push_back(std::stoull(t));
    return out;
}

void parse_branch_range(const std::string& s, int& lo, int& hi) {
    auto colon = s.find(':');
    if (colon == std::string::npos) {
        lo = hi = std::stoi(s);
    } else {
        lo = std::stoi(s.substr(0, colon));
        hi = std::stoi(s.substr(colon + 1));
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_gen_data(const std::string& family, const std::string& branches,
                 const std::string& variant, int64_t count, const std::string& label,
                 uint64_t seed, const std::string& out_dir, const std::string& name,
                 const std::string& splits) {
    if (family != "ladder") throw CLI::ValidationError("--family", "only 'ladder' is supported");
    LadderSpec spec;
    parse_branch_range(branches, spec.n_lo, spec.n_hi);
    spec.variant = ladder_variant_from_name(variant);
    spec.seed = seed;
    std::vector<double> f = parse_doubles(splits);
    if (f.size() != 3) throw CLI::ValidationError("--splits", "expected train,val,test");
    bool label_rout = false;
    if (label == "rout")
        label_rout = true;
    else if (!label.empty())
        throw CLI::ValidationError("--label", "only 'rout' is supported");
    DatasetManifest m = generate_dataset(spec, count, SplitFractions{f[0], f[1], f[2]}, out_dir,
                                         name.empty() ? "ladder" : name, label_rout);
    std::cout << "wrote " << m.record_count << " records (" << m.n_train << "/" << m.n_val << "/"
              << m.n_test << " splits, " << m.rejected << " rejected) to " << out_dir
              << "  hash=" << hash_hex(m.content_hash) << "\n";
    return 0;
}

int cmd_solve(const std::string& netlist_path, const std::string& metrics_nets) {
    Circuit c = parse_netlist(read_file(netlist_path));
    std::vector<Violation> violations = validate(c);
    if (!violations.empty()) {
        for (const Violation& v : violations) std::cerr << "invalid: " << v.message << "\n";
        return 1;
    }
    SolveResult r = solve_dc(c);
    for (const auto& [net, v] : r.voltages) std::cout << "v(" << net << ") = " << format_double(v) << "\n";
    for (const auto& [src, i] : r.source_currents)
        std::cout << "i(" << src << ") = " << format_double(i) << "\n";
    std::cout << "residual = " << format_double(r.residual)
              << (r.ill_conditioned ? "  (ill-conditioned)" : "") << "\n";
    if (!metrics_nets.empty()) {
        auto metrics = evaluate_design_metrics(c, split_list(metrics_nets));
        for (const auto& [k, v] : metrics) std::cout << k << " = " << format_double(v) << "\n";
    }
    return 0;
}

int cmd_pretrain(const std::string& data, const std::string& out, int layers, int steps,
                 int batch, uint64_t seed, int eval_interval, double lr0, double lr1,
                 int patience) {
    PretrainConfig cfg;
    cfg.dataset_dir = data;
    cfg.out_dir = out;
    cfg.model.n_layers = layers;
    cfg.hyper.total_steps = steps;
    cfg.hyper.batch_size = batch;
    cfg.hyper.seed = seed;
    cfg.hyper.eval_interval = eval_interval;
    cfg.hyper.lr0 = lr0;
    cfg.hyper.lr1 = lr1;
    cfg.hyper.patience = patience;
    PretrainResult res = run_pretrain(cfg);
    std::cout << "best val Acc@" << cfg.hyper.acc_k << " = " << format_double(res.final_val_acc)
              << " at step " << res.history.best_step << " (" << res.history.steps_run
              << " steps run)\ncheckpoint: " << res.checkpoint_path << "\n";
    return 0;
}

int cmd_eval_zero_shot(const std::string& checkpoint, const std::vector<std::string>& datasets,
                       const std::string& out_csv, int k) {
    auto results = run_zero_shot(checkpoint, datasets, out_csv, k);
    for (const auto& r : results)
        std::cout << r.dataset_dir << ": Acc@" << k << " = "
                  << format_double(r.report.acc_at_k.at(k)) << " over " << r.report.n_examples
                  << " outputs\n";
    return 0;
}

int cmd_baseline_fixed(const std::string& data, const std::string& arch, int layers,
                       const std::string& out_csv, int steps, int batch, uint64_t seed) {
    FixedBaselineConfig cfg;
    cfg.dataset_dir = data;
    if (arch == "gnn")
        cfg.arch = FixedArch::Gnn;
    else if (arch == "mlp")
        cfg.arch = FixedArch::Mlp5;
    else
        throw CLI::ValidationError("--arch", "expected gnn or mlp");
    cfg.gnn_layers = layers;
    cfg.out_csv = out_csv;
    cfg.hyper.total_steps = steps;
    cfg.hyper.batch_size = batch;
    cfg.hyper.seed = seed;
    FixedBaselineResult res = run_fixed_baseline(cfg);
    std::cout << arch << " test Acc@" << cfg.hyper.acc_k << " = "
              << format_double(res.test.acc_at_k.at(cfg.hyper.acc_k)) << "\n";
    return 0;
}

int cmd_finetune_curve(const std::string& checkpoint, const std::string& data,
                       const std::string& task, const std::string& fractions,
                       const std::string& modes, const std::string& poolings,
                       const std::string& seeds, const std::string& out_csv, int steps, int batch,
                       const std::string& label_key) {
    FinetuneCurveConfig cfg;
    cfg.checkpoint_path = checkpoint;
    cfg.dataset_dir = data;
    if (task == "node")
        cfg.task = Task::NodeVoltage;
    else if (task == "graph")
        cfg.task = Task::GraphLabel;
    else
        throw CLI::ValidationError("--task", "expected node or graph");
    cfg.graph_label_key = label_key;
    cfg.fractions = parse_doubles(fractions);
    cfg.modes.clear();
    for (const std::string& m : split_list(modes)) cfg.modes.push_back(fine_tune_mode_from_name(m));
    cfg.poolings.clear();
    for (const std::string& p : split_list(poolings)) cfg.poolings.push_back(pooling_from_name(p));
    cfg.seeds = parse_seeds(seeds);
    cfg.out_csv = out_csv;
    cfg.hyper.total_steps = steps;
    cfg.hyper.batch_size = batch;
    CurveTable table = run_finetune_curve(cfg);
    for (const CurveSummaryRow& r : summarize_curve(table))
        std::cout << "fraction " << format_double(r.fraction) << " " << fine_tune_mode_name(r.mode)
                  << " " << pooling_name(r.pooling) << ": mean Acc = " << format_double(r.mean_acc)
                  << " (median " << format_double(r.median_acc) << ", n=" << r.n << ")\n";
    return 0;
}

int cmd_report(const std::string& curve_csv, const std::string& out_csv) {
    std::ifstream in(curve_csv, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + curve_csv);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + curve_csv);
    std::vector<std::string> cols = split_list(line);
    std::map<std::string, size_t> col;
    for (size_t i = 0; i < cols.size(); ++i) col[cols[i]] = i;
    for (const char* need : {"fraction", "mode", "pooling", "seed", "acc"})
        if (!col.count(need))
            throw std::runtime_error(std::string("curve CSV lacks column: ") + need);
    CurveTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f = split_list(line);
        CurvePoint p;
        p.fraction = std::stod(f.at(col["fraction"]));
        p.mode = fine_tune_mode_from_name(f.at(col["mode"]));
        p.pooling = pooling_from_name(f.at(col["pooling"]));
        p.seed = std::stoull(f.at(col["seed"]));
        p.acc = std::stod(f.at(col["acc"]));
        table.rows.push_back(p);
    }
    write_curve_summary_csv(summarize_curve(table), out_csv);
    std::cout << "summarized " << table.rows.size() << " rows into " << out_csv << "\n";
    return 0;
}

int cmd_optimize(const std::string& variant, const std::string& specs_file, int budget,
                 uint64_t seed, const std::string& out_csv, const std::string& checkpoint,
                 int population, int offspring, bool no_screening, double disc_lr,
                 int pair_budget, double head_warmup) {
    DesignSpace space = DesignSpace::desk_default();
    SpecSet specs = specs_file.empty() ? desk_default_specs() : SpecSet::from_json(read_file(specs_file));
    OptimizeConfig cfg;
    cfg.variant = opt_variant_from_name(variant);
    cfg.sim_budget = budget;
    cfg.seed = seed;
    cfg.population = population;
    cfg.offspring = offspring;
    cfg.screening_enabled = !no_screening;
    cfg.disc.checkpoint_path = checkpoint;
    cfg.disc.lr = disc_lr;
    cfg.disc.pair_budget = pair_budget;
    cfg.disc.head_warmup = head_warmup;
    OptimizeResult res = optimize(space, specs, cfg);
    if (!out_csv.empty()) write_ledger_csv(res.ledger, out_csv);
    std::cout << variant << ": sims=" << res.ledger.n_sims << " queries=" << res.ledger.n_queries
              << " iterations=" << (res.ledger.rows.empty() ? 0 : res.ledger.rows.back().iteration)
              << " final top-20 cost="
              << format_double(res.ledger.rows.empty()
                                   ? std::numeric_limits<double>::infinity()
                                   : res.ledger.rows.back().top20_mean_cost)
              << (res.ledger.reached_zero ? " (feasible)" : "") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Circuit-graph learning and design-optimization toolkit"};
    app.require_subcommand(1);

    // gen-data
    std::string family = "ladder", branches = "2:6", variant = "canonical", label, name, splits = "0.9,0.1,0";
    std::string out_dir;
    int64_t count = 1000;
    uint64_t seed = 1;
    auto* gen = app.add_subcommand("gen-data", "Generate a ladder dataset with DC targets");
    gen->add_option("--family", family, "circuit family")->capture_default_str();
    gen->add_option("--branches", branches, "branch count or lo:hi range")->capture_default_str();
    gen->add_option("--variant", variant, "canonical|series-shunt|parallel-series|mixed")->capture_default_str();
    gen->add_option("--count", count, "records to generate")->capture_default_str();
    gen->add_option("--label", label, "optional graph label (rout)");
    gen->add_option("--seed", seed, "rng seed")->capture_default_str();
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--name", name, "dataset name");
    gen->add_option("--splits", splits, "train,val,test fractions")->capture_default_str();

    // solve
    std::string netlist_path, metrics_nets;
    auto* solve = app.add_subcommand("solve", "DC operating point of a netlist");
    solve->add_option("netlist", netlist_path, "netlist file")->required();
    solve->add_option("--metrics", metrics_nets, "also print design metrics for these nets");

    // pretrain
    std::string data, out;
    int layers = 10, steps = 4000, batch = 64, eval_interval = 100, patience = 20;
    double lr0 = 1e-3, lr1 = 5e-5;
    auto* pre = app.add_subcommand("pretrain", "Train the node-voltage model");
    pre->add_option("--data", data, "dataset directory")->required();
    pre->add_option("--out", out, "output directory")->required();
    pre->add_option("--layers", layers)->capture_default_str();
    pre->add_option("--steps", steps)->capture_default_str();
    pre->add_option("--batch", batch)->capture_default_str();
    pre->add_option("--seed", seed)->capture_default_str();
    pre->add_option("--eval-interval", eval_interval)->capture_default_str();
    pre->add_option("--lr0", lr0)->capture_default_str();
    pre->add_option("--lr1", lr1)->capture_default_str();
    pre->add_option("--patience", patience)->capture_default_str();

    // eval-zero-shot
    std::string checkpoint, out_csv;
    std::vector<std::string> datasets;
    int k = 100;
    auto* zs = app.add_subcommand("eval-zero-shot", "Score a checkpoint on held-out datasets");
    zs->add_option("--checkpoint", checkpoint)->required();
    zs->add_option("--data", datasets, "dataset directories")->required()->expected(-1);
    zs->add_option("--out", out_csv, "CSV path")->required();
    zs->add_option("--k", k, "accuracy divisor")->capture_default_str();

    // baseline-fixed
    std::string arch = "gnn";
    auto* bf = app.add_subcommand("baseline-fixed", "Fixed-topology specialized baseline");
    bf->add_option("--data", data)->required();
    bf->add_option("--arch", arch, "gnn|mlp")->capture_default_str();
    bf->add_option("--layers", layers)->capture_default_str();
    bf->add_option("--out", out_csv, "CSV path (appended)")->required();
    bf->add_option("--steps", steps)->capture_default_str();
    bf->add_option("--batch", batch)->capture_default_str();
    bf->add_option("--seed", seed)->capture_default_str();

    // finetune-curve
    std::string task = "node", fractions = "0.1,0.25,0.5,1.0", modes = "ft-pt,scratch";
    std::string poolings = "cross-attention", seeds = "1,2,3", label_key = "rout_ohms";
    auto* fc = app.add_subcommand("finetune-curve", "Data-fraction fine-tuning sweep");
    fc->add_option("--checkpoint", checkpoint, "pretrained checkpoint (ft-pt/fpt modes)");
    fc->add_option("--data", data)->required();
    fc->add_option("--task", task, "node|graph")->capture_default_str();
    fc->add_option("--fractions", fractions)->capture_default_str();
    fc->add_option("--modes", modes, "fpt,ft-pt,scratch")->capture_default_str();
    fc->add_option("--poolings", poolings, "cross-attention,mean")->capture_default_str();
    fc->add_option("--seeds", seeds)->capture_default_str();
    fc->add_option("--out", out_csv, "CSV path")->required();
    fc->add_option("--steps", steps)->capture_default_str();
    fc->add_option("--batch", batch)->capture_default_str();
    fc->add_option("--label-key", label_key)->capture_default_str();

    // report
    std::string curve_csv;
    auto* rep = app.add_subcommand("report", "Summarize a fine-tune curve CSV");
    rep->add_option("--curve", curve_csv, "curve CSV from finetune-curve")->required();
    rep->add_option("--out", out_csv, "summary CSV path")->required();

    // optimize
    std::string opt_variant = "evo", specs_file;
    int budget = 4000, population = 100, offspring = 100;
    DiscriminatorConfig disc_defaults;
    double disc_lr = disc_defaults.lr;
    int pair_budget = disc_defaults.pair_budget;
    double head_warmup = disc_defaults.head_warmup;
    bool no_screening = false;
    auto* op = app.add_subcommand("optimize", "Discriminator-gated evolutionary sizing");
    op->add_option("--variant", opt_variant, "evo|oracle|fc|randinit-gnn|fpt-gnn|ftpt-gnn")
        ->capture_default_str();
    op->add_option("--specs", specs_file, "spec set JSON (default: built-in desk task)");
    op->add_option("--budget", budget, "simulation budget")->capture_default_str();
    op->add_option("--seed", seed)->capture_default_str();
    op->add_option("--out", out_csv, "ledger CSV path");
    op->add_option("--checkpoint", checkpoint, "pretrained checkpoint for fpt/ftpt");
    op->add_option("--population", population)->capture_default_str();
    op->add_option("--offspring", offspring)->capture_default_str();
    op->add_option("--disc-lr", disc_lr, "discriminator learning rate")->capture_default_str();
    op->add_option("--pair-budget", pair_budget, "training pairs per discriminator retrain")
        ->capture_default_str();
    op->add_option("--head-warmup", head_warmup,
                   "fraction of each retrain spent head-only before a pretrained trainable "
                   "backbone unfreezes")
        ->capture_default_str();
    op->add_flag("--no-screening", no_screening, "simulate every offspring (Evo behaviour)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_data(family, branches, variant, count, label, seed, out_dir, name, splits);
        if (solve->parsed()) return cmd_solve(netlist_path, metrics_nets);
        if (pre->parsed())
            return cmd_pretrain(data, out, layers, steps, batch, seed, eval_interval, lr0, lr1, patience);
        if (zs->parsed()) return cmd_eval_zero_shot(checkpoint, datasets, out_csv, k);
        if (bf->parsed()) return cmd_baseline_fixed(data, arch, layers, out_csv, steps, batch, seed);
        if (fc->parsed())
            return cmd_finetune_curve(checkpoint, data, task, fractions, modes, poolings, seeds,
                                      out_csv, steps, batch, label_key);
        if (rep->parsed()) return cmd_report(curve_csv, out_csv);
        if (op->parsed())
            return cmd_optimize(opt_variant, specs_file, budget, seed, out_csv, checkpoint,
                                population, offspring, no_screening, disc_lr, pair_budget,
                                head_warmup);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
