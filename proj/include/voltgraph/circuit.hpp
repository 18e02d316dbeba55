#pragma once

#include <string>
#include <vector>

namespace voltgraph {

// The ground net is always spelled "0".
inline constexpr const char* kGroundName = "0";

enum class DeviceKind { Resistor, VSource, ISource };

const char* device_kind_name(DeviceKind k);

struct Net {
    std::string name;
    bool is_ground = false;

    bool operator==(const Net&) const = default;
};

// Every device is a two-terminal element. For sources, net_a is the plus
// terminal and net_b the minus one; for resistors the order carries no
// electrical meaning but is preserved verbatim. Both terminals may land on
// the same net.
struct Device {
    DeviceKind kind = DeviceKind::Resistor;
    std::string name;
    std::string net_a;
    std::string net_b;
    double value = 0.0;  // ohms, volts, or amps

    bool operator==(const Device&) const = default;
};

// Terminal roles: resistors expose {p, n}, sources {plus, minus}.
const char* terminal_role(DeviceKind kind, int slot);

enum class ViolationKind {
    NoGround,              // no net flagged as ground
    BadGround,             // ground flag and the name "0" disagree, or several grounds
    DuplicateNet,
    DuplicateDevice,
    UnknownNet,            // device terminal references a net not in the circuit
    FloatingNet,           // net with no device terminal attached
    NonpositiveResistance,
    NonfiniteValue,
    BadOutput,             // output net missing or ground
};

const char* violation_kind_name(ViolationKind k);

struct Violation {
    ViolationKind kind;
    std::string subject;  // offending net/device name, may be empty
    std::string message;
};

struct Circuit {
    std::vector<Net> nets;             // insertion order
    std::vector<Device> devices;       // insertion order
    std::vector<std::string> outputs;  // nets whose voltage is supervised

    // -1 when absent
    int net_index(const std::string& name) const;

    // Adds the net if it is new; returns its index either way.
    int ensure_net(const std::string& name);

    void add_resistor(const std::string& name, const std::string& a,
                      const std::string& b, double ohms);
    void add_vsource(const std::string& name, const std::string& plus,
                     const std::string& minus, double volts);
    void add_isource(const std::string& name, const std::string& plus,
                     const std::string& minus, double amps);
    void add_output(const std::string& net);

    bool operator==(const Circuit&) const = default;
};

// Structural checks: ground present, unique, and named "0"; net and device
// names unique; terminals resolve; every net touched by at least one
// terminal; resistances positive; values finite; outputs are existing
// non-ground nets. DC solvability is not checked here; the solver reports it.
std::vector<Violation> validate(const Circuit& c);

// True when validate(c) is empty.
bool is_valid(const Circuit& c);

}  // namespace voltgraph
