#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "voltgraph/ladder.hpp"
#include "voltgraph/solve.hpp"

using namespace voltgraph;

namespace {

int count_kind(const Circuit& c, DeviceKind k) {
    int n = 0;
    for (const Device& d : c.devices)
        if (d.kind == k) ++n;
    return n;
}

}  // namespace

TEST_CASE("canonical ladder has the documented counts for every n") {
    LadderSpec spec;
    for (int n = 1; n <= 12; ++n) {
        Rng rng(42);
        Circuit c = make_ladder_n(spec, n, rng);
        CHECK(count_kind(c, DeviceKind::Resistor) == 2 * n);
        CHECK(count_kind(c, DeviceKind::VSource) == n + 1);
        CHECK(c.nets.size() == static_cast<size_t>(2 * n + 2));
        CHECK(c.outputs.size() == static_cast<size_t>(n));
        CHECK(is_valid(c));
        CHECK_NOTHROW(solve_dc(c));
    }
}

TEST_CASE("variant counts: split shunts and doubled series arms") {
    Rng rng(42);
    LadderSpec spec;
    int n = 4;

    spec.variant = LadderVariant::SeriesShunt;
    Circuit ss = make_ladder_n(spec, n, rng);
    CHECK(count_kind(ss, DeviceKind::Resistor) == 3 * n);       // Rs + RshA + RshB
    CHECK(ss.nets.size() == static_cast<size_t>(3 * n + 2));    // extra m<i> per branch

    spec.variant = LadderVariant::ParallelSeries;
    Circuit ps = make_ladder_n(spec, n, rng);
    CHECK(count_kind(ps, DeviceKind::Resistor) == 3 * n);       // RsA + RsB + Rsh
    CHECK(ps.nets.size() == static_cast<size_t>(2 * n + 2));    // no extra nets

    spec.variant = LadderVariant::Mixed;
    Circuit mx = make_ladder_n(spec, n, rng);
    // Odd branches split the shunt (adds a net), even ones double the series.
    CHECK(count_kind(mx, DeviceKind::Resistor) == 3 * n);
    CHECK(mx.nets.size() == static_cast<size_t>(2 * n + 2 + (n + 1) / 2));
    for (const Circuit* c : {&ss, &ps, &mx}) {
        CHECK(is_valid(*c));
        CHECK_NOTHROW(solve_dc(*c));
    }
}

TEST_CASE("device order is source first, then per-branch series, shunt, source") {
    Rng rng(3);
    LadderSpec spec;
    Circuit c = make_ladder_n(spec, 2, rng);
    REQUIRE(c.devices.size() == 7);
    CHECK(c.devices[0].name == "V0");
    CHECK(c.devices[1].name == "Rs1");
    CHECK(c.devices[2].name == "Rsh1");
    CHECK(c.devices[3].name == "V1");
    CHECK(c.devices[4].name == "Rs2");
    CHECK(c.devices[5].name == "Rsh2");
    CHECK(c.devices[6].name == "V2");
    CHECK(c.outputs == std::vector<std::string>{"v1", "v2"});
}

TEST_CASE("drawn values respect the configured ranges") {
    LadderSpec spec;
    spec.r_lo = 200.0;
    spec.r_hi = 300.0;
    spec.v_lo = 0.25;
    spec.v_hi = 0.5;
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
        Circuit c = make_ladder(spec, rng);
        for (const Device& d : c.devices) {
            if (d.kind == DeviceKind::Resistor) {
                CHECK(d.value >= 200.0);
                CHECK(d.value <= 300.0);
            } else {
                CHECK(d.value >= 0.25);
                CHECK(d.value <= 0.5);
            }
        }
    }
}

TEST_CASE("branch counts cover the whole range uniformly enough") {
    LadderSpec spec;
    spec.n_lo = 2;
    spec.n_hi = 6;
    Rng rng(5);
    std::set<size_t> seen;
    for (int i = 0; i < 200; ++i) seen.insert(make_ladder(spec, rng).outputs.size());
    CHECK(seen == std::set<size_t>{2, 3, 4, 5, 6});
}

TEST_CASE("generation is deterministic in the rng state") {
    LadderSpec spec;
    Rng a(123), b(123);
    for (int i = 0; i < 10; ++i) CHECK(make_ladder(spec, a) == make_ladder(spec, b));
}

TEST_CASE("bad ladder specs are rejected") {
    LadderSpec s;
    s.n_lo = 0;
    CHECK_THROWS_AS(check_ladder_spec(s), std::invalid_argument);
    s = LadderSpec{};
    s.n_hi = 1;  // below n_lo = 2
    CHECK_THROWS_AS(check_ladder_spec(s), std::invalid_argument);
    s = LadderSpec{};
    s.r_lo = -5.0;
    CHECK_THROWS_AS(check_ladder_spec(s), std::invalid_argument);
    s = LadderSpec{};
    s.v_hi = s.v_lo;
    CHECK_THROWS_AS(check_ladder_spec(s), std::invalid_argument);
    CHECK_THROWS_AS([] {
        LadderSpec ok;
        Rng r(1);
        return make_ladder_n(ok, 0, r);
    }(), std::invalid_argument);
}

TEST_CASE("variant names round-trip") {
    for (LadderVariant v : {LadderVariant::Canonical, LadderVariant::SeriesShunt,
                            LadderVariant::ParallelSeries, LadderVariant::Mixed})
        CHECK(ladder_variant_from_name(ladder_variant_name(v)) == v);
    CHECK_THROWS_AS(ladder_variant_from_name("spiral"), std::invalid_argument);
}
