#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "voltgraph/circuit.hpp"

namespace voltgraph {

class UnsolvableError : public std::runtime_error {
public:
    explicit UnsolvableError(const std::string& what) : std::runtime_error(what) {}
};

struct SolveResult {
    // Includes ground, fixed at exactly 0.
    std::map<std::string, double> voltages;
    // Current through each voltage source from its plus terminal to its
    // minus terminal (negative when the source delivers power).
    std::map<std::string, double> source_currents;
    double residual = 0.0;       // ‖Ax−b‖∞ of the solved system
    bool ill_conditioned = false;  // residual above 1e-6
};

// Nodal analysis: unknowns are non-ground net voltages plus one branch
// current per voltage source. Dense LU with partial pivoting.
// Throws UnsolvableError naming the failed pivot (voltage-source loops,
// floating subnetworks).
SolveResult solve_dc(const Circuit& c);

// Thevenin resistance seen at `net`: all sources zeroed, 1 A pushed into the
// net, resulting voltage is the resistance.
double output_resistance(const Circuit& c, const std::string& net);

// Metrics used by design optimization: "v_<net>" for each requested net,
// "rout" at the last declared output net, and "total_conductance" over all
// resistors.
std::map<std::string, double> evaluate_design_metrics(const Circuit& c,
                                                      const std::vector<std::string>& spec_nets);

// Largest KCL imbalance over nets (amps), computed from a solution; an
// independent consistency probe, not used by the solver itself.
double kcl_residual(const Circuit& c, const SolveResult& r);

}  // namespace voltgraph
