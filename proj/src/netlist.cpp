#include "voltgraph/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <vector>

namespace voltgraph {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

bool is_ground_alias(const std::string& name) {
    std::string low;
    low.reserve(name.size());
    for (char ch : name) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    return low == "gnd" || low == "ground";
}

double parse_value(const std::string& tok, int line_no, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw NetlistError(line_no, std::string("bad ") + what + ": " + tok);
    return v;
}

void check_net_token(const std::string& tok, int line_no) {
    if (is_ground_alias(tok))
        throw NetlistError(line_no, "ground must be spelled \"0\", got: " + tok);
}

}  // namespace

Circuit parse_netlist(const std::string& text) {
    Circuit c;
    std::unordered_set<std::string> device_names;
    bool ended = false;
    int line_no = 0;

    std::istringstream stream(text);
    std::string raw;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::vector<std::string> tok = split_ws(raw);
        if (tok.empty()) continue;
        if (ended) throw NetlistError(line_no, "statement after .end");

        const std::string& head = tok[0];
        if (head == ".end") {
            if (tok.size() != 1) throw NetlistError(line_no, ".end takes no arguments");
            ended = true;
        } else if (head == ".out") {
            if (tok.size() < 2) throw NetlistError(line_no, ".out needs at least one net");
            for (size_t i = 1; i < tok.size(); ++i) {
                check_net_token(tok[i], line_no);
                c.add_output(tok[i]);
            }
        } else if (head[0] == 'R' || head[0] == 'V' || head[0] == 'I') {
            if (head.size() < 2)
                throw NetlistError(line_no, "device needs a name after its type letter: " + head);
            if (tok.size() != 4)
                throw NetlistError(line_no, "device statement needs: name net+ net- value");
            if (!device_names.insert(head).second)
                throw NetlistError(line_no, "duplicate device name: " + head);
            check_net_token(tok[1], line_no);
            check_net_token(tok[2], line_no);
            switch (head[0]) {
                case 'R':
                    c.add_resistor(head, tok[1], tok[2], parse_value(tok[3], line_no, "resistance"));
                    break;
                case 'V':
                    c.add_vsource(head, tok[1], tok[2], parse_value(tok[3], line_no, "voltage"));
                    break;
                default:
                    c.add_isource(head, tok[1], tok[2], parse_value(tok[3], line_no, "current"));
                    break;
            }
        } else {
            throw NetlistError(line_no, "unknown statement: " + head);
        }
    }
    if (!ended) throw NetlistError(line_no + 1, "missing .end");
    return c;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

namespace {

// Sources always show a decimal point so voltage/current values read as
// analog quantities; resistances keep the shortest form.
std::string format_source_value(double v) {
    std::string s = format_double(v);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

}  // namespace

std::string serialize_netlist(const Circuit& c) {
    std::string out;
    for (const Device& d : c.devices) {
        out += d.name;
        out += ' ';
        out += d.net_a;
        out += ' ';
        out += d.net_b;
        out += ' ';
        out += d.kind == DeviceKind::Resistor ? format_double(d.value)
                                              : format_source_value(d.value);
        out += '\n';
    }
    if (!c.outputs.empty()) {
        out += ".out";
        for (const std::string& o : c.outputs) {
            out += ' ';
            out += o;
        }
        out += '\n';
    }
    out += ".end";
    return out;
}

}  // namespace voltgraph
