#include "voltgraph/designopt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>
#include "voltgraph/graph.hpp"
#include "voltgraph/netlist.hpp"
#include "voltgraph/solve.hpp"

namespace voltgraph {

int DesignSpace::n_genes() const {
    switch (variant) {
        case LadderVariant::Canonical: return 2 * n_branches;
        case LadderVariant::SeriesShunt: return 3 * n_branches;
        case LadderVariant::ParallelSeries: return 3 * n_branches;
        case LadderVariant::Mixed: return 3 * n_branches;  // both variants add one
    }
    return 0;
}

void DesignSpace::check() const {
    if (n_branches < 1) throw std::invalid_argument("design space needs at least one branch");
    if (grid.size() < 2) throw std::invalid_argument("resistance grid needs at least two points");
    for (size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("resistance grid must be strictly increasing");
    if (!(grid.front() > 0.0)) throw std::invalid_argument("grid resistances must be positive");
    if (source_values.size() != static_cast<size_t>(n_branches) + 1)
        throw std::invalid_argument("need one source value per branch plus the driver");
}

Circuit DesignSpace::instantiate(const std::vector<int>& genes) const {
    check();
    if (genes.size() != static_cast<size_t>(n_genes()))
        throw std::invalid_argument("expected " + std::to_string(n_genes()) + " genes, got " +
                                    std::to_string(genes.size()));
    size_t cursor = 0;
    auto next_r = [&] {
        int g = genes.at(cursor++);
        if (g < 0 || g >= static_cast<int>(grid.size()))
            throw std::invalid_argument("gene " + std::to_string(cursor - 1) +
                                        " is outside the grid");
        return grid[static_cast<size_t>(g)];
    };

    // Same wiring and device order as make_ladder_n, values from the genes.
    Circuit c;
    c.ensure_net(kGroundName);
    c.add_vsource("V0", "a0", kGroundName, source_values.at(0));
    std::string prev = "a0";
    for (int i = 1; i <= n_branches; ++i) {
        std::string vi = "v" + std::to_string(i);
        std::string bi = "b" + std::to_string(i);
        std::string idx = std::to_string(i);
        bool split_shunt = variant == LadderVariant::SeriesShunt ||
                           (variant == LadderVariant::Mixed && i % 2 == 1);
        bool parallel_series = variant == LadderVariant::ParallelSeries ||
                               (variant == LadderVariant::Mixed && i % 2 == 0);
        if (parallel_series) {
            c.add_resistor("RsA" + idx, prev, vi, next_r());
            c.add_resistor("RsB" + idx, prev, vi, next_r());
        } else {
            c.add_resistor("Rs" + idx, prev, vi, next_r());
        }
        if (split_shunt) {
            std::string mi = "m" + std::to_string(i);
            c.add_resistor("RshA" + idx, vi, mi, next_r());
            c.add_resistor("RshB" + idx, mi, bi, next_r());
        } else {
            c.add_resistor("Rsh" + idx, vi, bi, next_r());
        }
        c.add_vsource("V" + idx, bi, kGroundName, source_values.at(static_cast<size_t>(i)));
        c.add_output(vi);
        prev = vi;
    }
    return c;
}

std::vector<int> DesignSpace::random_genes(Rng& rng) const {
    std::vector<int> g(static_cast<size_t>(n_genes()));
    for (int& x : g) x = static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(grid.size()) - 1));
    return g;
}

DesignSpace DesignSpace::desk_default() {
    DesignSpace s;
    s.variant = LadderVariant::Canonical;
    s.n_branches = 4;
    s.grid.resize(64);
    for (int k = 0; k < 64; ++k)
        s.grid[static_cast<size_t>(k)] = 100.0 * std::pow(10.0, 2.0 * k / 63.0);
    s.source_values = {1.0, 0.2, 0.4, 0.6, 0.8};
    return s;
}

namespace {

const char* direction_name(SpecDirection d) {
    return d == SpecDirection::AtLeast ? "at_least" : "at_most";
}

SpecDirection direction_from_name(const std::string& s) {
    if (s == "at_least") return SpecDirection::AtLeast;
    if (s == "at_most") return SpecDirection::AtMost;
    throw std::invalid_argument("unknown spec direction: " + s);
}

}  // namespace

std::string SpecSet::to_json() const {
    nlohmann::json j;
    j["spec_nets"] = spec_nets;
    j["items"] = nlohmann::json::array();
    for (const SpecItem& it : items)
        j["items"].push_back({{"metric", it.metric},
                              {"direction", direction_name(it.direction)},
                              {"threshold", it.threshold},
                              {"weight", it.weight}});
    return j.dump(2);
}

SpecSet SpecSet::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SpecSet s;
    s.spec_nets = j.at("spec_nets").get<std::vector<std::string>>();
    for (const auto& it : j.at("items"))
        s.items.push_back(SpecItem{it.at("metric").get<std::string>(),
                                   direction_from_name(it.at("direction").get<std::string>()),
                                   it.at("threshold").get<double>(),
                                   it.at("weight").get<double>()});
    for (const SpecItem& it : s.items)
        if (!(it.weight > 0.0)) throw std::invalid_argument("spec weights must be positive");
    return s;
}

SpecSet desk_default_specs() {
    // Thresholds pinned after Monte-Carlo calibration of desk_default():
    // 0.461% of 100k uniformly random gene vectors satisfy all three, each
    // constraint is individually active (marginal pass rates 18.0%, 7.0%,
    // 5.7%), and the three metrics are mutually reinforcing — a stiff ladder
    // (low resistances, series much smaller than shunt) raises v4, lowers
    // rout, and raises total conductance together. Aligned specs keep
    // pairwise "better on most specs" comparisons correlated with cost, so
    // reference-screening stays meaningful all the way to feasibility.
    SpecSet s;
    s.spec_nets = {"v4"};
    s.items = {
        SpecItem{"v_v4", SpecDirection::AtLeast, 0.78, 1.0},
        SpecItem{"rout", SpecDirection::AtMost, 120.0, 1.0},
        SpecItem{"total_conductance", SpecDirection::AtLeast, 0.030, 1.0},
    };
    return s;
}

double spec_cost(const std::map<std::string, double>& metrics, const SpecSet& specs) {
    double total = 0.0;
    for (const SpecItem& it : specs.items) {
        auto m = metrics.find(it.metric);
        if (m == metrics.end()) throw std::invalid_argument("metric missing: " + it.metric);
        double sign = it.direction == SpecDirection::AtLeast ? 1.0 : -1.0;
        double num = sign * (it.threshold - m->second);
        if (num <= 0.0) continue;
        double den = std::abs(it.threshold) + std::abs(m->second);
        if (den > 0.0) total += it.weight * num / den;
    }
    return total;
}

double spec_win(const SpecItem& item, const std::map<std::string, double>* a,
                const std::map<std::string, double>* b) {
    if (!a && !b) return 0.5;
    if (!a) return 0.0;
    if (!b) return 1.0;
    auto ma = a->find(item.metric);
    auto mb = b->find(item.metric);
    if (ma == a->end() || mb == b->end())
        throw std::invalid_argument("metric missing: " + item.metric);
    double sign = item.direction == SpecDirection::AtLeast ? 1.0 : -1.0;
    double da = sign * ma->second;
    double db = sign * mb->second;
    if (da > db) return 1.0;
    if (da < db) return 0.0;
    return 0.5;
}

std::vector<std::vector<int>> evolve_step(const std::vector<DesignCandidate>& archive,
                                          const DesignSpace& space, int n_offspring,
                                          int tournament, double mutation_rate, Rng& rng) {
    std::vector<size_t> pool;
    for (size_t i = 0; i < archive.size(); ++i)
        if (archive[i].simulated && archive[i].cost) pool.push_back(i);
    if (pool.size() < 2)
        throw std::invalid_argument("evolution needs at least two simulated designs");
    if (tournament < 1) throw std::invalid_argument("tournament size must be positive");

    auto pick = [&]() -> const DesignCandidate& {
        size_t best = pool[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))];
        for (int t = 1; t < tournament; ++t) {
            size_t c = pool[static_cast<size_t>(
                rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))];
            if (*archive[c].cost < *archive[best].cost ||
                (*archive[c].cost == *archive[best].cost && c < best))
                best = c;
        }
        return archive[best];
    };

    int64_t grid_max = static_cast<int64_t>(space.grid.size()) - 1;
    std::vector<std::vector<int>> offspring;
    offspring.reserve(static_cast<size_t>(n_offspring));
    for (int k = 0; k < n_offspring; ++k) {
        const DesignCandidate& a = pick();
        const DesignCandidate& b = pick();
        std::vector<int> genes(a.genes.size());
        for (size_t i = 0; i < genes.size(); ++i) {
            genes[i] = rng.uniform() < 0.5 ? a.genes[i] : b.genes[i];
            if (rng.uniform() < mutation_rate)
                genes[i] = static_cast<int>(rng.uniform_int(0, grid_max));
        }
        offspring.push_back(std::move(genes));
    }
    return offspring;
}

std::vector<size_t> top_k_by_cost(const std::vector<DesignCandidate>& archive, int k) {
    std::vector<size_t> idx;
    for (size_t i = 0; i < archive.size(); ++i)
        if (archive[i].simulated && archive[i].cost) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&archive](size_t a, size_t b) {
        if (*archive[a].cost != *archive[b].cost) return *archive[a].cost < *archive[b].cost;
        return a < b;
    });
    if (static_cast<int>(idx.size()) > k) idx.resize(static_cast<size_t>(k));
    return idx;
}

double top_k_mean_cost(const std::vector<DesignCandidate>& archive, int k) {
    std::vector<size_t> idx = top_k_by_cost(archive, k);
    if (idx.empty()) return std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (size_t i : idx) sum += *archive[i].cost;
    return sum / static_cast<double>(idx.size());
}

const char* opt_variant_name(OptVariant v) {
    switch (v) {
        case OptVariant::Evo: return "evo";
        case OptVariant::Oracle: return "oracle";
        case OptVariant::Fc: return "fc";
        case OptVariant::RandinitGnn: return "randinit-gnn";
        case OptVariant::FptGnn: return "fpt-gnn";
        case OptVariant::FtptGnn: return "ftpt-gnn";
    }
    return "?";
}

OptVariant opt_variant_from_name(const std::string& name) {
    if (name == "evo") return OptVariant::Evo;
    if (name == "oracle") return OptVariant::Oracle;
    if (name == "fc") return OptVariant::Fc;
    if (name == "randinit-gnn") return OptVariant::RandinitGnn;
    if (name == "fpt-gnn") return OptVariant::FptGnn;
    if (name == "ftpt-gnn") return OptVariant::FtptGnn;
    throw std::invalid_argument("unknown optimizer variant: " + name);
}

Discriminator::Discriminator(OptVariant variant, const DesignSpace& space, const SpecSet& specs,
                             const DiscriminatorConfig& cfg, uint64_t seed)
    : variant_(variant), space_(space), specs_(specs), cfg_(cfg) {
    if (variant == OptVariant::Evo || variant == OptVariant::Oracle)
        throw std::invalid_argument("no learned comparator for this variant");
    space_.check();

    Rng rng = Rng::derive(seed, 0x64697363);
    auto add = [this, &rng](const std::string& name, int rows, int cols, bool he) {
        std::vector<double> w(static_cast<size_t>(rows) * static_cast<size_t>(cols));
        double sigma = he ? std::sqrt(2.0 / rows) : 0.0;
        for (double& x : w) x = sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0;
        params_.push_back(Param{name, Tensor::from_data({rows, cols}, std::move(w), true)});
    };

    if (variant == OptVariant::Fc) {
        int in = space_.n_genes();
        for (int l = 0; l < cfg_.fc_layers; ++l) {
            std::string p = "fc." + std::to_string(l) + ".";
            add(p + "w", in, cfg_.fc_width, true);
            add(p + "b", 1, cfg_.fc_width, false);
            in = cfg_.fc_width;
        }
        feature_dim_ = cfg_.fc_width;
    } else {
        ModelConfig mc = cfg_.gnn;
        mc.with_pool_head = true;
        mc.pooling = Pooling::CrossAttention;
        backbone_ = std::make_unique<GnnModel>(mc, seed);
        if (variant == OptVariant::FptGnn || variant == OptVariant::FtptGnn) {
            if (cfg_.checkpoint_path.empty())
                throw std::invalid_argument("pretrained variants need a checkpoint path");
            backbone_->load_backbone_from(cfg_.checkpoint_path);
        }
        if (variant == OptVariant::FptGnn) backbone_->freeze_backbone();
        feature_dim_ = mc.graph_embed_dim();
    }

    int n_specs = static_cast<int>(specs_.items.size());
    add("pair.w1", 2 * feature_dim_, cfg_.trunk_hidden, true);
    add("pair.b1", 1, cfg_.trunk_hidden, false);
    add("pair.w2", cfg_.trunk_hidden, n_specs, true);
    add("pair.b2", 1, n_specs, false);
}

std::vector<Param> Discriminator::all_trainable() {
    std::vector<Param> all = params_;
    if (backbone_)
        for (Param& p : backbone_->params()) all.push_back(p);
    return all;
}

Tensor Discriminator::features_for(const std::vector<const DesignCandidate*>& designs) {
    if (variant_ == OptVariant::Fc) {
        int n_genes = space_.n_genes();
        double scale = static_cast<double>(space_.grid.size()) - 1.0;
        std::vector<double> x;
        x.reserve(designs.size() * static_cast<size_t>(n_genes));
        for (const DesignCandidate* d : designs)
            for (int g : d->genes) x.push_back(static_cast<double>(g) / scale);
        Tensor h = Tensor::from_data({static_cast<int>(designs.size()), n_genes}, std::move(x));
        for (int l = 0; l < cfg_.fc_layers; ++l) {
            std::string p = "fc." + std::to_string(l) + ".";
            Tensor* w = nullptr;
            Tensor* b = nullptr;
            for (Param& q : params_) {
                if (q.name == p + "w") w = &q.value;
                if (q.name == p + "b") b = &q.value;
            }
            h = relu(add_bias(matmul(h, *w), *b));
        }
        return h;
    }
    std::vector<GraphRecord> records;
    records.reserve(designs.size());
    std::vector<int> which(designs.size());
    for (size_t i = 0; i < designs.size(); ++i) {
        Circuit c = space_.instantiate(designs[i]->genes);
        records.push_back(to_record(static_cast<int64_t>(i), circuit_to_graph(c)));
        which[i] = static_cast<int>(i);
    }
    BatchData batch = make_batch(records, which);
    Tensor h = backbone_->forward_nodes(batch);
    return backbone_->pool_graphs(h, batch);
}

Tensor Discriminator::trunk(const Tensor& pair_feats) {
    Tensor *w1 = nullptr, *b1 = nullptr, *w2 = nullptr, *b2 = nullptr;
    for (Param& q : params_) {
        if (q.name == "pair.w1") w1 = &q.value;
        if (q.name == "pair.b1") b1 = &q.value;
        if (q.name == "pair.w2") w2 = &q.value;
        if (q.name == "pair.b2") b2 = &q.value;
    }
    Tensor h = relu(add_bias(matmul(pair_feats, *w1), *b1));
    return add_bias(matmul(h, *w2), *b2);
}

Tensor Discriminator::pair_logits(const Tensor& feats, const std::vector<int>& idx_a,
                                  const std::vector<int>& idx_b) {
    Tensor fa = gather_rows(feats, idx_a);
    Tensor fb = gather_rows(feats, idx_b);
    // u([fA,fB]) − u([fB,fA]): swapping inputs flips the logit's sign, so a
    // design never beats itself.
    return sub(trunk(concat_cols(fa, fb)), trunk(concat_cols(fb, fa)));
}

std::vector<double> Discriminator::beat_probabilities(
    const std::vector<const DesignCandidate*>& cands,
    const std::vector<const DesignCandidate*>& refs) {
    size_t nc = cands.size(), nr = refs.size();
    std::vector<double> probs(nc * nr, 0.5);
    if (!trained_ || nc == 0 || nr == 0) return probs;

    NoGradGuard guard;
    std::vector<const DesignCandidate*> all = cands;
    all.insert(all.end(), refs.begin(), refs.end());
    Tensor feats = features_for(all);

    std::vector<int> idx_a, idx_b;
    idx_a.reserve(nc * nr);
    idx_b.reserve(nc * nr);
    for (size_t c = 0; c < nc; ++c)
        for (size_t r = 0; r < nr; ++r) {
            idx_a.push_back(static_cast<int>(c));
            idx_b.push_back(static_cast<int>(nc + r));
        }
    Tensor logits = pair_logits(feats, idx_a, idx_b);
    const std::vector<double>& v = logits.data();
    size_t n_specs = specs_.items.size();
    for (size_t p = 0; p < nc * nr; ++p) {
        double avg = 0.0;
        for (size_t s = 0; s < n_specs; ++s)
            avg += 1.0 / (1.0 + std::exp(-v[p * n_specs + s]));
        probs[p] = avg / static_cast<double>(n_specs);
    }
    return probs;
}

void Discriminator::retrain(const std::vector<DesignCandidate>& archive, Rng& rng) {
    std::vector<const DesignCandidate*> sims;
    for (const DesignCandidate& c : archive)
        if (c.simulated && c.cost) sims.push_back(&c);
    if (sims.size() < 2) return;
    trained_ = true;

    // A pretrained trainable backbone (FT-PT) is fine-tuned in two phases:
    // head-only while the freshly initialized comparator settles, then
    // end-to-end for the remainder of the budget. Other variants have no
    // pretrained features to protect and train end-to-end throughout.
    bool two_phase = variant_ == OptVariant::FtptGnn && cfg_.head_warmup > 0.0;
    int64_t head_pairs = two_phase ? static_cast<int64_t>(std::min(1.0, cfg_.head_warmup) *
                                                          static_cast<double>(cfg_.pair_budget))
                                   : 0;

    std::vector<Param> head_only = params_;
    std::vector<Param> trainable = all_trainable();
    Adam adam_head, adam_full;
    size_t n = sims.size();
    size_t chunk = std::min<size_t>(static_cast<size_t>(std::max(2, cfg_.design_chunk)), n);

    int64_t pairs_done = 0;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    size_t pos = n;  // forces a reshuffle on first use
    while (pairs_done < cfg_.pair_budget) {
        if (pos + chunk > n) {
            rng.shuffle(order);
            pos = 0;
        }
        std::vector<const DesignCandidate*> group(chunk);
        for (size_t i = 0; i < chunk; ++i) group[i] = sims[static_cast<size_t>(order[pos + i])];
        pos += chunk;

        std::vector<int> idx_a, idx_b;
        std::vector<double> labels;
        for (size_t i = 0; i < chunk; ++i)
            for (size_t j = 0; j < chunk; ++j) {
                if (i == j) continue;
                idx_a.push_back(static_cast<int>(i));
                idx_b.push_back(static_cast<int>(j));
                const auto* ma = group[i]->metrics ? &*group[i]->metrics : nullptr;
                const auto* mb = group[j]->metrics ? &*group[j]->metrics : nullptr;
                for (const SpecItem& item : specs_.items)
                    labels.push_back(spec_win(item, ma, mb));
            }
        if (idx_a.empty()) break;

        bool head_phase = pairs_done < head_pairs;
        Tensor feats;
        if (head_phase) {
            // Features as constants: no tape through the backbone.
            NoGradGuard guard;
            feats = features_for(group);
        } else {
            feats = features_for(group);
        }
        Tensor logits = pair_logits(feats, idx_a, idx_b);
        Tensor loss = bce_with_logits_loss(logits, labels);
        std::vector<Param>& active = head_phase ? head_only : trainable;
        Adam& adam = head_phase ? adam_head : adam_full;
        adam.zero_grad(active);
        loss.backward();
        adam.step(active, cfg_.lr);
        pairs_done += static_cast<int64_t>(idx_a.size());
    }
}

OptimizeResult optimize(const DesignSpace& space, const SpecSet& specs,
                        const OptimizeConfig& cfg) {
    space.check();
    if (specs.items.empty()) throw std::invalid_argument("empty spec set");
    for (const SpecItem& it : specs.items)
        if (!(it.weight > 0.0)) throw std::invalid_argument("spec weights must be positive");
    if (cfg.sim_budget < 1) throw std::invalid_argument("sim budget must be positive");
    if (cfg.population < 2) throw std::invalid_argument("population must be at least 2");

    bool screening = cfg.screening_enabled && cfg.variant != OptVariant::Evo;
    bool learned = screening && cfg.variant != OptVariant::Oracle;

    Rng evo_rng = Rng::derive(cfg.seed, 0x65766f);
    Rng disc_rng = Rng::derive(cfg.seed, 0x7363726e);
    std::unique_ptr<Discriminator> disc;
    if (learned)
        disc = std::make_unique<Discriminator>(cfg.variant, space, specs, cfg.disc,
                                               Rng::derive(cfg.seed, 0x6d6f64).next_u64());

    auto wall_start = std::chrono::steady_clock::now();
    OptimizeResult res;
    RunLedger& ledger = res.ledger;
    std::vector<DesignCandidate>& archive = res.archive;

    auto simulate = [&](std::vector<int> genes,
                        std::optional<std::map<std::string, double>> known) {
        DesignCandidate c;
        c.genes = std::move(genes);
        c.simulated = true;
        if (known) {
            c.cost = spec_cost(*known, specs);
            c.metrics = std::move(known);
        } else {
            try {
                auto metrics = evaluate_design_metrics(space.instantiate(c.genes), specs.spec_nets);
                c.cost = spec_cost(metrics, specs);
                c.metrics = std::move(metrics);
            } catch (const UnsolvableError&) {
                c.cost = std::numeric_limits<double>::infinity();
            }
        }
        archive.push_back(std::move(c));
        ++ledger.n_sims;
    };

    for (int i = 0; i < cfg.population && ledger.n_sims < cfg.sim_budget; ++i)
        simulate(space.random_genes(evo_rng), std::nullopt);
    if (learned) disc->retrain(archive, disc_rng);

    auto record = [&](int iteration) {
        double c = top_k_mean_cost(archive, 20);
        ledger.rows.push_back(IterationRow{iteration, c, ledger.n_sims, ledger.n_queries});
        if (c == 0.0) ledger.reached_zero = true;
    };
    record(0);

    int need = static_cast<int>(
        std::ceil(cfg.accept_fraction * static_cast<double>(cfg.n_refs) - 1e-12));
    for (int iter = 1; !ledger.reached_zero && ledger.n_sims < cfg.sim_budget &&
                       iter <= cfg.max_iterations;
         ++iter) {
        std::vector<std::vector<int>> offspring = evolve_step(
            archive, space, cfg.offspring, cfg.tournament, cfg.mutation_rate, evo_rng);

        std::vector<bool> accepted(offspring.size(), true);
        // Oracle carries each accepted candidate's metrics into the archive
        // so admission charges exactly one sim and never re-solves.
        std::vector<std::optional<std::map<std::string, double>>> oracle_metrics(offspring.size());

        if (screening) {
            std::vector<size_t> ref_idx = top_k_by_cost(archive, cfg.n_refs);
            size_t n_refs = ref_idx.size();
            int threshold = std::min<int>(need, static_cast<int>(n_refs));
            bool cold = [&] {
                size_t sim_count = 0;
                for (const DesignCandidate& c : archive)
                    if (c.simulated) ++sim_count;
                return sim_count < 2;
            }();
            if (!cold && n_refs > 0) {
                if (cfg.variant == OptVariant::Oracle) {
                    for (size_t k = 0; k < offspring.size(); ++k) {
                        std::optional<std::map<std::string, double>> m;
                        try {
                            m = evaluate_design_metrics(space.instantiate(offspring[k]),
                                                        specs.spec_nets);
                        } catch (const UnsolvableError&) {
                        }
                        ledger.n_queries += static_cast<int64_t>(n_refs);
                        int wins = 0;
                        for (size_t r : ref_idx) {
                            const auto* mr =
                                archive[r].metrics ? &*archive[r].metrics : nullptr;
                            double avg = 0.0;
                            for (const SpecItem& item : specs.items)
                                avg += spec_win(item, m ? &*m : nullptr, mr);
                            if (avg / static_cast<double>(specs.items.size()) > 0.5) ++wins;
                        }
                        accepted[k] = wins >= threshold;
                        if (accepted[k]) oracle_metrics[k] = std::move(m);
                    }
                } else {
                    std::vector<DesignCandidate> tmp(offspring.size());
                    std::vector<const DesignCandidate*> cand_ptrs(offspring.size());
                    for (size_t k = 0; k < offspring.size(); ++k) {
                        tmp[k].genes = offspring[k];
                        cand_ptrs[k] = &tmp[k];
                    }
                    std::vector<const DesignCandidate*> ref_ptrs;
                    for (size_t r : ref_idx) ref_ptrs.push_back(&archive[r]);
                    std::vector<double> probs = disc->beat_probabilities(cand_ptrs, ref_ptrs);
                    ledger.n_queries +=
                        static_cast<int64_t>(offspring.size()) * static_cast<int64_t>(n_refs);
                    for (size_t k = 0; k < offspring.size(); ++k) {
                        int wins = 0;
                        for (size_t r = 0; r < n_refs; ++r)
                            if (probs[k * n_refs + r] > 0.5) ++wins;
                        accepted[k] = wins >= threshold;
                    }
                }
            }
        }

        for (size_t k = 0; k < offspring.size() && ledger.n_sims < cfg.sim_budget; ++k)
            if (accepted[k]) simulate(std::move(offspring[k]), std::move(oracle_metrics[k]));

        if (learned) disc->retrain(archive, disc_rng);
        record(iter);
    }

    ledger.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return res;
}

void write_ledger_csv(const RunLedger& ledger, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "iteration,top20_mean_cost,n_sims,n_queries\n";
    for (const IterationRow& r : ledger.rows)
        out << r.iteration << ',' << format_double(r.top20_mean_cost) << ',' << r.n_sims << ','
            << r.n_queries << '\n';
}

double feasible_fraction(const DesignSpace& space, const SpecSet& specs, int n_samples,
                         uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("need at least one sample");
    Rng rng(seed);
    int feasible = 0;
    for (int i = 0; i < n_samples; ++i) {
        try {
            auto metrics = evaluate_design_metrics(space.instantiate(space.random_genes(rng)),
                                                   specs.spec_nets);
            if (spec_cost(metrics, specs) == 0.0) ++feasible;
        } catch (const UnsolvableError&) {
        }
    }
    return static_cast<double>(feasible) / static_cast<double>(n_samples);
}

}  // namespace voltgraph
