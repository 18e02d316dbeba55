#pragma once

#include "voltgraph/circuit.hpp"
#include "voltgraph/rng.hpp"

namespace voltgraph {

// Canonical: per branch, one series resistor into the output net and one
// shunt resistor to a per-branch source. SeriesShunt splits each shunt
// resistor in two (one extra net per branch); ParallelSeries doubles each
// series resistor in parallel; Mixed uses SeriesShunt on odd branches and
// ParallelSeries on even ones.
enum class LadderVariant { Canonical, SeriesShunt, ParallelSeries, Mixed };

const char* ladder_variant_name(LadderVariant v);
LadderVariant ladder_variant_from_name(const std::string& name);

struct LadderSpec {
    int n_lo = 2;  // branch-count range, inclusive
    int n_hi = 6;
    double r_lo = 100.0;  // ohms, drawn log-uniform
    double r_hi = 10000.0;
    double v_lo = 0.0;  // volts, drawn uniform
    double v_hi = 1.0;
    LadderVariant variant = LadderVariant::Canonical;
    uint64_t seed = 0;
};

// Throws std::invalid_argument on nonsense ranges.
void check_ladder_spec(const LadderSpec& s);

// Wiring for n branches: V0 drives net a0; branch i adds the series path
// into output net v<i>, a shunt path to net b<i>, and source V<i> from b<i>
// to ground. Canonical counts: 2n resistors, n+1 sources, n outputs,
// 2n+2 nets. Values drawn from rng in device order.
Circuit make_ladder_n(const LadderSpec& s, int n, Rng& rng);

// Draws the branch count uniformly from [n_lo, n_hi] first.
Circuit make_ladder(const LadderSpec& s, Rng& rng);

}  // namespace voltgraph
