#include "voltgraph/ladder.hpp"

#include <stdexcept>
#include <string>

namespace voltgraph {

const char* ladder_variant_name(LadderVariant v) {
    switch (v) {
        case LadderVariant::Canonical: return "canonical";
        case LadderVariant::SeriesShunt: return "series-shunt";
        case LadderVariant::ParallelSeries: return "parallel-series";
        case LadderVariant::Mixed: return "mixed";
    }
    return "?";
}

LadderVariant ladder_variant_from_name(const std::string& name) {
    if (name == "canonical") return LadderVariant::Canonical;
    if (name == "series-shunt") return LadderVariant::SeriesShunt;
    if (name == "parallel-series") return LadderVariant::ParallelSeries;
    if (name == "mixed") return LadderVariant::Mixed;
    throw std::invalid_argument("unknown ladder variant: " + name);
}

void check_ladder_spec(const LadderSpec& s) {
    if (s.n_lo < 1 || s.n_hi < s.n_lo)
        throw std::invalid_argument("branch-count range must satisfy 1 <= lo <= hi");
    if (!(s.r_lo > 0.0) || !(s.r_hi > s.r_lo))
        throw std::invalid_argument("resistance range must satisfy 0 < lo < hi");
    if (!(s.v_lo >= 0.0) || !(s.v_hi > s.v_lo))
        throw std::invalid_argument("source range must satisfy 0 <= lo < hi");
}

Circuit make_ladder_n(const LadderSpec& s, int n, Rng& rng) {
    check_ladder_spec(s);
    if (n < 1) throw std::invalid_argument("ladder needs at least one branch");

    auto draw_r = [&] { return rng.log_uniform(s.r_lo, s.r_hi); };
    auto draw_v = [&] { return rng.uniform(s.v_lo, s.v_hi); };

    Circuit c;
    c.ensure_net(kGroundName);
    c.add_vsource("V0", "a0", kGroundName, draw_v());

    std::string prev = "a0";
    for (int i = 1; i <= n; ++i) {
        std::string vi = "v" + std::to_string(i);
        std::string bi = "b" + std::to_string(i);
        std::string idx = std::to_string(i);
        bool split_shunt = s.variant == LadderVariant::SeriesShunt ||
                           (s.variant == LadderVariant::Mixed && i % 2 == 1);
        bool parallel_series = s.variant == LadderVariant::ParallelSeries ||
                               (s.variant == LadderVariant::Mixed && i % 2 == 0);

        if (parallel_series) {
            c.add_resistor("RsA" + idx, prev, vi, draw_r());
            c.add_resistor("RsB" + idx, prev, vi, draw_r());
        } else {
            c.add_resistor("Rs" + idx, prev, vi, draw_r());
        }

        if (split_shunt) {
            std::string mi = "m" + std::to_string(i);
            c.add_resistor("RshA" + idx, vi, mi, draw_r());
            c.add_resistor("RshB" + idx, mi, bi, draw_r());
        } else {
            c.add_resistor("Rsh" + idx, vi, bi, draw_r());
        }

        c.add_vsource("V" + idx, bi, kGroundName, draw_v());
        c.add_output(vi);
        prev = vi;
    }
    return c;
}

Circuit make_ladder(const LadderSpec& s, Rng& rng) {
    check_ladder_spec(s);
    int n = s.n_lo == s.n_hi
                ? s.n_lo
                : static_cast<int>(rng.uniform_int(s.n_lo, s.n_hi));
    return make_ladder_n(s, n, rng);
}

}  // namespace voltgraph
