#include "voltgraph/circuit.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

namespace voltgraph {

const char* device_kind_name(DeviceKind k) {
    switch (k) {
        case DeviceKind::Resistor: return "Resistor";
        case DeviceKind::VSource: return "VSource";
        case DeviceKind::ISource: return "ISource";
    }
    return "?";
}

const char* terminal_role(DeviceKind kind, int slot) {
    if (kind == DeviceKind::Resistor) return slot == 0 ? "p" : "n";
    return slot == 0 ? "plus" : "minus";
}

const char* violation_kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::NoGround: return "NoGround";
        case ViolationKind::BadGround: return "BadGround";
        case ViolationKind::DuplicateNet: return "DuplicateNet";
        case ViolationKind::DuplicateDevice: return "DuplicateDevice";
        case ViolationKind::UnknownNet: return "UnknownNet";
        case ViolationKind::FloatingNet: return "FloatingNet";
        case ViolationKind::NonpositiveResistance: return "NonpositiveResistance";
        case ViolationKind::NonfiniteValue: return "NonfiniteValue";
        case ViolationKind::BadOutput: return "BadOutput";
    }
    return "?";
}

int Circuit::net_index(const std::string& name) const {
    for (size_t i = 0; i < nets.size(); ++i)
        if (nets[i].name == name) return static_cast<int>(i);
    return -1;
}

int Circuit::ensure_net(const std::string& name) {
    int idx = net_index(name);
    if (idx >= 0) return idx;
    nets.push_back(Net{name, name == kGroundName});
    return static_cast<int>(nets.size()) - 1;
}

void Circuit::add_resistor(const std::string& name, const std::string& a,
                           const std::string& b, double ohms) {
    ensure_net(a);
    ensure_net(b);
    devices.push_back(Device{DeviceKind::Resistor, name, a, b, ohms});
}

void Circuit::add_vsource(const std::string& name, const std::string& plus,
                          const std::string& minus, double volts) {
    ensure_net(plus);
    ensure_net(minus);
    devices.push_back(Device{DeviceKind::VSource, name, plus, minus, volts});
}

void Circuit::add_isource(const std::string& name, const std::string& plus,
                          const std::string& minus, double amps) {
    ensure_net(plus);
    ensure_net(minus);
    devices.push_back(Device{DeviceKind::ISource, name, plus, minus, amps});
}

void Circuit::add_output(const std::string& net) { outputs.push_back(net); }

std::vector<Violation> validate(const Circuit& c) {
    std::vector<Violation> out;
    auto flag = [&out](ViolationKind k, std::string subject, std::string msg) {
        out.push_back(Violation{k, std::move(subject), std::move(msg)});
    };

    int ground_count = 0;
    std::unordered_set<std::string> net_names;
    for (const Net& n : c.nets) {
        if (!net_names.insert(n.name).second)
            flag(ViolationKind::DuplicateNet, n.name, "net declared twice: " + n.name);
        if (n.is_ground) {
            ++ground_count;
            if (n.name != kGroundName)
                flag(ViolationKind::BadGround, n.name,
                     "ground net must be named \"0\", got: " + n.name);
        } else if (n.name == kGroundName) {
            flag(ViolationKind::BadGround, n.name, "net \"0\" is not flagged as ground");
        }
    }
    if (ground_count == 0)
        flag(ViolationKind::NoGround, "", "circuit has no ground net");
    else if (ground_count > 1)
        flag(ViolationKind::BadGround, "", "circuit has several ground nets");

    std::unordered_set<std::string> device_names;
    std::unordered_map<std::string, int> touch_count;
    for (const Device& d : c.devices) {
        if (!device_names.insert(d.name).second)
            flag(ViolationKind::DuplicateDevice, d.name, "device declared twice: " + d.name);
        for (const std::string* net : {&d.net_a, &d.net_b}) {
            if (c.net_index(*net) < 0)
                flag(ViolationKind::UnknownNet, d.name,
                     "device " + d.name + " references unknown net: " + *net);
            else
                ++touch_count[*net];
        }
        if (!std::isfinite(d.value))
            flag(ViolationKind::NonfiniteValue, d.name, "device " + d.name + " has non-finite value");
        else if (d.kind == DeviceKind::Resistor && d.value <= 0.0)
            flag(ViolationKind::NonpositiveResistance, d.name,
                 "resistor " + d.name + " must have positive resistance");
    }

    for (const Net& n : c.nets)
        if (touch_count.find(n.name) == touch_count.end())
            flag(ViolationKind::FloatingNet, n.name, "net has no device terminal: " + n.name);

    for (const std::string& o : c.outputs) {
        int idx = c.net_index(o);
        if (idx < 0)
            flag(ViolationKind::BadOutput, o, "output references unknown net: " + o);
        else if (c.nets[static_cast<size_t>(idx)].is_ground)
            flag(ViolationKind::BadOutput, o, "output may not be the ground net");
    }
    return out;
}

bool is_valid(const Circuit& c) { return validate(c).empty(); }

}  // namespace voltgraph
