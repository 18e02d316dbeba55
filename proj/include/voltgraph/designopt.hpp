#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "voltgraph/ladder.hpp"
#include "voltgraph/model.hpp"
#include "voltgraph/rng.hpp"
#include "voltgraph/train.hpp"

namespace voltgraph {

// Discrete sizing task over one ladder topology: each gene selects a grid
// resistance for one resistor (device order); source values are fixed.
struct DesignSpace {
    LadderVariant variant = LadderVariant::Canonical;
    int n_branches = 4;
    std::vector<double> grid;           // ohms, strictly increasing
    std::vector<double> source_values;  // V0..Vn, volts

    int n_genes() const;
    // Throws std::invalid_argument on a bad gene count or index.
    Circuit instantiate(const std::vector<int>& genes) const;
    std::vector<int> random_genes(Rng& rng) const;
    void check() const;

    // Four-branch ladder over a 64-point log-spaced grid on [100 Ω, 10 kΩ].
    static DesignSpace desk_default();
};

enum class SpecDirection { AtLeast, AtMost };

struct SpecItem {
    std::string metric;
    SpecDirection direction = SpecDirection::AtLeast;
    double threshold = 0.0;
    double weight = 1.0;
};

struct SpecSet {
    std::vector<SpecItem> items;
    std::vector<std::string> spec_nets;  // nets whose voltages the metrics need

    std::string to_json() const;
    static SpecSet from_json(const std::string& text);
};

// Thresholds pinned from a Monte-Carlo calibration of desk_default() at
// ~0.5% joint feasibility (see the feasibility test for the measured rate).
SpecSet desk_default_specs();

// Σ_j w_j · max(0, sign_j·(threshold_j − metric_j)) / (|threshold_j| + |metric_j|)
// with sign +1 for ≥-specs and −1 for ≤-specs; exactly 0 iff every spec is
// met. Throws std::invalid_argument on a missing metric.
double spec_cost(const std::map<std::string, double>& metrics, const SpecSet& specs);

struct DesignCandidate {
    std::vector<int> genes;
    bool simulated = false;
    // Present when simulated and the solve succeeded.
    std::optional<std::map<std::string, double>> metrics;
    // Present iff simulated; +inf when the solve failed.
    std::optional<double> cost;
};

// 1 / 0 / 0.5 (tie): does A beat B on the item's metric, in its direction?
// A design without metrics loses to any design that has them.
double spec_win(const SpecItem& item, const std::map<std::string, double>* a,
                const std::map<std::string, double>* b);

// Tournament parent selection (with replacement, lowest cost wins, ties to
// the earlier archive entry) over the simulated members, uniform crossover,
// then per-gene mutation to a uniformly random grid index. Throws
// std::invalid_argument with fewer than two simulated members.
std::vector<std::vector<int>> evolve_step(const std::vector<DesignCandidate>& archive,
                                          const DesignSpace& space, int n_offspring,
                                          int tournament, double mutation_rate, Rng& rng);

// Indices of the k lowest-cost simulated members (ties to earlier entries).
std::vector<size_t> top_k_by_cost(const std::vector<DesignCandidate>& archive, int k);
double top_k_mean_cost(const std::vector<DesignCandidate>& archive, int k);

enum class OptVariant { Evo, Oracle, Fc, RandinitGnn, FptGnn, FtptGnn };

const char* opt_variant_name(OptVariant v);
OptVariant opt_variant_from_name(const std::string& name);

struct DiscriminatorConfig {
    int fc_layers = 5;        // FC feature extractor: hidden layers ...
    int fc_width = 512;       // ... of this width on the normalized genes
    int trunk_hidden = 128;   // pair-comparator trunk
    double lr = 1e-3;
    int design_chunk = 16;    // designs per training minibatch
    int pair_budget = 4000;   // ordered pairs consumed per retrain
    // Fraction of each retrain's pair budget spent training the comparator
    // head alone before the backbone unfreezes. Applies only to a variant
    // with a pretrained, trainable backbone (FT-PT): gradients from a
    // freshly initialized head otherwise distort the pretrained features
    // before the head has learned anything (linear-probe-then-fine-tune).
    double head_warmup = 0.75;
    std::string checkpoint_path;  // backbone source for FPT / FT-PT
    ModelConfig gnn;              // backbone geometry for the GNN variants
};

// Learned pairwise comparator: per-spec probability that design A beats
// design B on that spec's metric. Features come from the variant's
// extractor; the head is antisymmetric by construction,
// logit(A,B) = u([fA,fB]) − u([fB,fA]), so logit(A,A) == 0 exactly.
// Trained with BCE on ordered pairs of simulated designs.
class Discriminator {
public:
    Discriminator(OptVariant variant, const DesignSpace& space, const SpecSet& specs,
                  const DiscriminatorConfig& cfg, uint64_t seed);

    // Row-major (cands × refs) matrix of avg-over-specs beat probability.
    std::vector<double> beat_probabilities(const std::vector<const DesignCandidate*>& cands,
                                           const std::vector<const DesignCandidate*>& refs);

    // Minibatches of design chunks; all ordered pairs within a chunk (both
    // orders of every unordered pair) until pair_budget is consumed.
    void retrain(const std::vector<DesignCandidate>& archive, Rng& rng);

    bool trained() const { return trained_; }
    std::vector<Param>& params() { return params_; }

private:
    OptVariant variant_;
    const DesignSpace& space_;
    SpecSet specs_;
    DiscriminatorConfig cfg_;
    bool trained_ = false;

    std::unique_ptr<GnnModel> backbone_;  // GNN variants
    std::vector<Param> params_;           // FC extractor + pair trunk
    int feature_dim_ = 0;

    Tensor features_for(const std::vector<const DesignCandidate*>& designs);
    Tensor pair_logits(const Tensor& feats, const std::vector<int>& idx_a,
                       const std::vector<int>& idx_b);
    Tensor trunk(const Tensor& pair_feats);
    std::vector<Param> all_trainable();
};

struct OptimizeConfig {
    OptVariant variant = OptVariant::Evo;
    int population = 100;
    int offspring = 100;
    int tournament = 4;
    double mutation_rate = 0.1;
    int n_refs = 20;               // reference designs per screening
    double accept_fraction = 0.75;  // share of references to beat
    int sim_budget = 4000;
    int max_iterations = 200;
    // Off ⇒ every offspring is simulated; the trajectory is then
    // bit-identical to the Evo variant for the same seed.
    bool screening_enabled = true;
    uint64_t seed = 1;
    DiscriminatorConfig disc;
};

struct IterationRow {
    int iteration = 0;
    double top20_mean_cost = std::numeric_limits<double>::infinity();
    int64_t n_sims = 0;
    int64_t n_queries = 0;
};

struct RunLedger {
    std::vector<IterationRow> rows;
    int64_t n_sims = 0;
    int64_t n_queries = 0;
    bool reached_zero = false;
    double wall_seconds = 0.0;  // informational; never serialized
};

struct OptimizeResult {
    RunLedger ledger;
    std::vector<DesignCandidate> archive;  // simulated designs, admission order
};

// Evolutionary loop with discriminator-gated simulation. Per iteration:
// breed offspring, screen each against the current top-`n_refs` (Oracle
// compares true metrics, computed once and carried over on acceptance;
// learned variants query the comparator; every pairwise check counts one
// query), simulate accepted candidates, retrain the comparator, record the
// top-20 mean cost. Stops at top-20 cost 0, the sim budget, or
// max_iterations. Solver failures become +inf-cost candidates.
OptimizeResult optimize(const DesignSpace& space, const SpecSet& specs,
                        const OptimizeConfig& cfg);

// CSV: iteration, top-20 mean cost, sims, queries. No timing columns, so
// reruns are byte-comparable.
void write_ledger_csv(const RunLedger& ledger, const std::string& path);

// Share of uniformly random gene vectors meeting every spec.
double feasible_fraction(const DesignSpace& space, const SpecSet& specs, int n_samples,
                         uint64_t seed);

}  // namespace voltgraph
