#pragma once

#include <map>
#include <string>

#include "voltgraph/circuit.hpp"

namespace voltgraph::testing {

// Reference DC solution computed by a deliberately different route from
// solve_dc: one KCL equation per net (ground included, so one row is
// redundant), an explicit ground-pin equation, and voltage-source branch
// currents as unknowns; the rectangular system is reduced by Gauss-Jordan
// elimination with full pivoting. Throws std::runtime_error when the system
// is inconsistent or underdetermined.
std::map<std::string, double> reference_dc(const Circuit& c);

// Thevenin resistance at `net` through reference_dc: sources zeroed, 1 A in.
double reference_rout(const Circuit& c, const std::string& net);

}  // namespace voltgraph::testing
