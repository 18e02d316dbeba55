#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracle.hpp"
#include "voltgraph/ladder.hpp"
#include "voltgraph/solve.hpp"

using namespace voltgraph;

TEST_CASE("equal divider: hand-derived node voltage and source current") {
    SolveResult r = solve_dc(testing::make_divider());
    CHECK(r.voltages.at("out") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.voltages.at("in") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.voltages.at("0") == 0.0);
    // 1 V across 2 kΩ; current enters the source's plus terminal, so the
    // plus-to-minus branch current is negative while delivering power.
    CHECK(r.source_currents.at("V1") == doctest::Approx(-5e-4).epsilon(1e-12));
    CHECK(r.residual <= 1e-12);
    CHECK_FALSE(r.ill_conditioned);
    CHECK(kcl_residual(testing::make_divider(), r) <= 1e-12);
}

TEST_CASE("unequal divider matches the closed form out = r2/(r1+r2)") {
    for (auto [r1, r2] : {std::pair{100.0, 300.0}, {4700.0, 1000.0}, {10.0, 990.0}}) {
        Circuit c = testing::make_divider(r1, r2);
        SolveResult r = solve_dc(c);
        CHECK(r.voltages.at("out") == doctest::Approx(r2 / (r1 + r2)).epsilon(1e-12));
    }
}

TEST_CASE("two-branch unit ladder: v1 = 0.4, v2 = 0.2 by hand KCL") {
    SolveResult r = solve_dc(testing::make_two_branch_unit_ladder());
    CHECK(r.voltages.at("v1") == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r.voltages.at("v2") == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("balanced bridge holds both midpoints at half the source") {
    Circuit c = testing::make_bridge(1000, 1000, 1000, 1000, 1000);
    SolveResult r = solve_dc(c);
    CHECK(r.voltages.at("l") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.voltages.at("r") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("current source convention: value leaves the plus net") {
    Circuit c;
    c.add_isource("I1", "a", "0", 0.001);
    c.add_resistor("R1", "a", "0", 1000.0);
    SolveResult r = solve_dc(c);
    CHECK(r.voltages.at("a") == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("superposition: response to two sources is the sum of responses") {
    Circuit both = testing::make_two_branch_unit_ladder();
    both.devices[3].value = 0.7;  // V1
    both.devices[6].value = 0.3;  // V2

    Circuit only_v0 = both, only_rest = both;
    only_v0.devices[3].value = 0.0;
    only_v0.devices[6].value = 0.0;
    only_rest.devices[0].value = 0.0;

    SolveResult rb = solve_dc(both), r0 = solve_dc(only_v0), rr = solve_dc(only_rest);
    for (const auto& [net, v] : rb.voltages)
        CHECK(v == doctest::Approx(r0.voltages.at(net) + rr.voltages.at(net)).epsilon(1e-9));
}

TEST_CASE("scaling every source scales every voltage linearly") {
    Circuit base = testing::make_bridge(220, 1500, 3300, 470, 910, 1.0);
    Circuit scaled = base;
    for (Device& d : scaled.devices)
        if (d.kind == DeviceKind::VSource) d.value *= 2.5;
    SolveResult rb = solve_dc(base), rs = solve_dc(scaled);
    for (const auto& [net, v] : rb.voltages)
        CHECK(rs.voltages.at(net) == doctest::Approx(2.5 * v).epsilon(1e-9));
}

TEST_CASE("solver agrees with the independent full-pivot reference") {
    LadderSpec spec;
    spec.n_lo = 1;
    spec.n_hi = 8;
    Rng rng(90210);
    int checked = 0;
    for (int variant = 0; variant < 4; ++variant) {
        spec.variant = static_cast<LadderVariant>(variant);
        for (int i = 0; i < 15; ++i) {
            Circuit c = make_ladder(spec, rng);
            SolveResult r = solve_dc(c);
            auto ref = testing::reference_dc(c);
            for (const auto& [net, v] : r.voltages) {
                double expect = ref.at(net);
                double scale = std::max(std::fabs(expect), 1e-9);
                CHECK(std::fabs(v - expect) / scale <= 1e-9);
            }
            CHECK(kcl_residual(c, r) <= 1e-9);
            ++checked;
        }
    }
    CHECK(checked == 60);
}

TEST_CASE("voltage-source loop with disagreeing values is rejected") {
    Circuit c;
    c.add_vsource("V1", "a", "0", 1.0);
    c.add_vsource("V2", "a", "0", 2.0);
    c.add_resistor("R1", "a", "0", 1000.0);
    CHECK_THROWS_AS(solve_dc(c), UnsolvableError);
}

TEST_CASE("a net reachable only through a current source is rejected") {
    // KCL at "b" has no conductance term: the matrix row is all zeros.
    Circuit c;
    c.add_isource("I1", "a", "b", 0.001);
    c.add_resistor("R1", "a", "0", 1000.0);
    CHECK_THROWS_AS(solve_dc(c), UnsolvableError);
}

TEST_CASE("output resistance: divider looks like the parallel pair") {
    Circuit c = testing::make_divider();
    CHECK(output_resistance(c, "out") == doctest::Approx(500.0).epsilon(1e-12));
    CHECK(testing::reference_rout(c, "out") == doctest::Approx(500.0).epsilon(1e-12));
}

TEST_CASE("output resistance: three-branch unit ladder gives 8000/13 ohms") {
    // Nested series/parallel reduction with every resistor at 1 kΩ and all
    // sources shorted: ((1k ∥ 1k + 1k) ∥ 1k + 1k) ∥ 1k = 8000/13.
    Circuit c;
    c.add_vsource("V0", "a0", "0", 1.0);
    std::string prev = "a0";
    for (int i = 1; i <= 3; ++i) {
        std::string vi = "v" + std::to_string(i), bi = "b" + std::to_string(i);
        c.add_resistor("Rs" + std::to_string(i), prev, vi, 1000.0);
        c.add_resistor("Rsh" + std::to_string(i), vi, bi, 1000.0);
        c.add_vsource("V" + std::to_string(i), bi, "0", 0.5);
        prev = vi;
    }
    c.add_output("v3");
    double want = 8000.0 / 13.0;
    CHECK(output_resistance(c, "v3") == doctest::Approx(want).epsilon(1e-12));
    CHECK(testing::reference_rout(c, "v3") == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("output resistance rejects ground and unknown nets") {
    Circuit c = testing::make_divider();
    CHECK_THROWS_AS(output_resistance(c, "0"), UnsolvableError);
    CHECK_THROWS_AS(output_resistance(c, "nope"), UnsolvableError);
}

TEST_CASE("design metrics carry prefixed voltages, rout, and conductance") {
    Circuit c = testing::make_divider();
    auto m = evaluate_design_metrics(c, {"out", "in"});
    CHECK(m.at("v_out") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.at("v_in") == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.at("rout") == doctest::Approx(500.0).epsilon(1e-12));
    CHECK(m.at("total_conductance") == doctest::Approx(0.002).epsilon(1e-12));
    CHECK(m.size() == 4);

    CHECK_THROWS_AS(evaluate_design_metrics(c, {"ghost"}), UnsolvableError);
    Circuit no_out = testing::make_divider();
    no_out.outputs.clear();
    CHECK_THROWS_AS(evaluate_design_metrics(no_out, {"out"}), UnsolvableError);
}
