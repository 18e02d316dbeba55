#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "voltgraph/circuit.hpp"
#include "voltgraph/dataset.hpp"
#include "voltgraph/ladder.hpp"
#include "voltgraph/solve.hpp"
#include "voltgraph/tensor.hpp"

namespace voltgraph::testing {

// 1 V source across two equal 1 kΩ resistors; v(out) = 0.5 V exactly.
inline Circuit make_divider(double r1 = 1000.0, double r2 = 1000.0, double volts = 1.0) {
    Circuit c;
    c.add_vsource("V1", "in", "0", volts);
    c.add_resistor("R1", "in", "out", r1);
    c.add_resistor("R2", "out", "0", r2);
    c.add_output("out");
    return c;
}

// Two-branch ladder, every resistor 1 kΩ, branch sources at 0 V:
// v1 = 0.4 V, v2 = 0.2 V by hand-solved KCL.
inline Circuit make_two_branch_unit_ladder() {
    Circuit c;
    c.add_vsource("V0", "a0", "0", 1.0);
    c.add_resistor("Rs1", "a0", "v1", 1000.0);
    c.add_resistor("Rsh1", "v1", "b1", 1000.0);
    c.add_vsource("V1", "b1", "0", 0.0);
    c.add_resistor("Rs2", "v1", "v2", 1000.0);
    c.add_resistor("Rsh2", "v2", "b2", 1000.0);
    c.add_vsource("V2", "b2", "0", 0.0);
    c.add_output("v1");
    c.add_output("v2");
    return c;
}

// Wheatstone-style bridge with a galvanometer resistor across the middle.
inline Circuit make_bridge(double ra, double rb, double rc, double rd, double rg,
                           double volts = 1.0) {
    Circuit c;
    c.add_vsource("V1", "top", "0", volts);
    c.add_resistor("Ra", "top", "l", ra);
    c.add_resistor("Rb", "l", "0", rb);
    c.add_resistor("Rc", "top", "r", rc);
    c.add_resistor("Rd", "r", "0", rd);
    c.add_resistor("Rg", "l", "r", rg);
    c.add_output("l");
    c.add_output("r");
    return c;
}

// Central finite-difference gradient check: perturbs every entry of each
// input tensor and compares d(scalar)/d(input) against the tape. Returns the
// worst relative error, where relative error uses max(|fd|, |ad|, floor).
inline double fd_check(const std::function<Tensor()>& forward, std::vector<Tensor> inputs,
                       double h = 1e-4, double floor_ = 1e-6) {
    Tensor out = forward();
    out.backward();
    std::vector<std::vector<double>> grads;
    for (Tensor& t : inputs) grads.push_back(t.grad());

    double worst = 0.0;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        std::vector<double>& data = inputs[ti].data();
        for (size_t i = 0; i < data.size(); ++i) {
            double keep = data[i];
            data[i] = keep + h;
            double up = forward().item();
            data[i] = keep - h;
            double down = forward().item();
            data[i] = keep;
            double fd = (up - down) / (2.0 * h);
            double ad = grads[ti][i];
            double denom = std::max({std::fabs(fd), std::fabs(ad), floor_});
            worst = std::max(worst, std::fabs(fd - ad) / denom);
        }
    }
    return worst;
}

// Unique per-process scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() /
                 ("voltgraph-test-" + tag + "-" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p.string();
}

inline std::vector<GraphRecord> solved_ladder_records(int count, uint64_t seed, int n_lo = 2,
                                                      int n_hi = 4) {
    LadderSpec spec;
    spec.n_lo = n_lo;
    spec.n_hi = n_hi;
    spec.seed = seed;
    Rng rng(seed);
    std::vector<GraphRecord> out;
    for (int i = 0; i < count; ++i) {
        Circuit c = make_ladder(spec, rng);
        SolveResult r = solve_dc(c);
        out.push_back(to_record(i, circuit_to_graph(c, &r)));
    }
    return out;
}

}  // namespace voltgraph::testing
