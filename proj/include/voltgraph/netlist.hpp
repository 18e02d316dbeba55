#pragma once

#include <stdexcept>
#include <string>

#include "voltgraph/circuit.hpp"

namespace voltgraph {

class NetlistError : public std::runtime_error {
public:
    NetlistError(int line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

// Grammar (one statement per line, '#' starts a comment):
//   R<name> <net+> <net-> <ohms>
//   V<name> <net+> <net-> <volts>
//   I<name> <net+> <net-> <amps>
//   .out <net> [<net> ...]
//   .end
// Ground is the net "0"; common aliases (gnd, ground) are rejected so a
// circuit cannot silently carry two grounds. `.end` is mandatory and final.
Circuit parse_netlist(const std::string& text);

// Deterministic canonical text: devices in insertion order, one `.out` line
// when outputs exist, `.end` last, no trailing newline.
// parse_netlist(serialize_netlist(c)) == c for every valid circuit.
std::string serialize_netlist(const Circuit& c);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace voltgraph
