#include "voltgraph/solve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace voltgraph {

namespace {

// Row-major dense LU with partial pivoting, in place. Returns the column of
// the failed pivot, or -1 on success.
int lu_factor(std::vector<double>& a, std::vector<int>& perm, int n) {
    perm.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(a[static_cast<size_t>(k) * n + k]);
        for (int i = k + 1; i < n; ++i) {
            double cand = std::fabs(a[static_cast<size_t>(i) * n + k]);
            if (cand > best) {
                best = cand;
                piv = i;
            }
        }
        if (best < 1e-13) return k;
        if (piv != k) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<size_t>(piv) * n + j], a[static_cast<size_t>(k) * n + j]);
            std::swap(perm[static_cast<size_t>(piv)], perm[static_cast<size_t>(k)]);
        }
        double diag = a[static_cast<size_t>(k) * n + k];
        for (int i = k + 1; i < n; ++i) {
            double f = a[static_cast<size_t>(i) * n + k] / diag;
            a[static_cast<size_t>(i) * n + k] = f;
            for (int j = k + 1; j < n; ++j)
                a[static_cast<size_t>(i) * n + j] -= f * a[static_cast<size_t>(k) * n + j];
        }
    }
    return -1;
}

void lu_solve(const std::vector<double>& lu, const std::vector<int>& perm, int n,
              const std::vector<double>& b, std::vector<double>& x) {
    x.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<size_t>(i)] = b[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            x[static_cast<size_t>(i)] -= lu[static_cast<size_t>(i) * n + j] * x[static_cast<size_t>(j)];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j)
            x[static_cast<size_t>(i)] -= lu[static_cast<size_t>(i) * n + j] * x[static_cast<size_t>(j)];
        x[static_cast<size_t>(i)] /= lu[static_cast<size_t>(i) * n + i];
    }
}

struct MnaSystem {
    int n_unknowns = 0;
    std::vector<int> net_unknown;        // net index → unknown index, -1 for ground
    std::vector<int> vsource_unknown;    // unknown index per VSource (device order)
    std::vector<std::string> unknown_names;
    std::vector<double> a;               // n×n row-major
    std::vector<double> b;
};

MnaSystem assemble(const Circuit& c) {
    MnaSystem s;
    s.net_unknown.assign(c.nets.size(), -1);
    for (size_t i = 0; i < c.nets.size(); ++i) {
        if (c.nets[i].is_ground) continue;
        s.net_unknown[i] = s.n_unknowns++;
        s.unknown_names.push_back("v(" + c.nets[i].name + ")");
    }
    for (const Device& d : c.devices) {
        if (d.kind != DeviceKind::VSource) continue;
        s.vsource_unknown.push_back(s.n_unknowns++);
        s.unknown_names.push_back("i(" + d.name + ")");
    }

    int n = s.n_unknowns;
    s.a.assign(static_cast<size_t>(n) * n, 0.0);
    s.b.assign(static_cast<size_t>(n), 0.0);
    auto at = [&s, n](int r, int col) -> double& { return s.a[static_cast<size_t>(r) * n + col]; };

    int vs_seen = 0;
    for (const Device& d : c.devices) {
        int ia = s.net_unknown[static_cast<size_t>(c.net_index(d.net_a))];
        int ib = s.net_unknown[static_cast<size_t>(c.net_index(d.net_b))];
        switch (d.kind) {
            case DeviceKind::Resistor: {
                double g = 1.0 / d.value;
                if (ia >= 0) at(ia, ia) += g;
                if (ib >= 0) at(ib, ib) += g;
                if (ia >= 0 && ib >= 0) {
                    at(ia, ib) -= g;
                    at(ib, ia) -= g;
                }
                break;
            }
            case DeviceKind::ISource: {
                // d.value flows from plus to minus inside the source, so it
                // leaves net_a and arrives at net_b.
                if (ia >= 0) s.b[static_cast<size_t>(ia)] -= d.value;
                if (ib >= 0) s.b[static_cast<size_t>(ib)] += d.value;
                break;
            }
            case DeviceKind::VSource: {
                int j = s.vsource_unknown[static_cast<size_t>(vs_seen++)];
                if (ia >= 0) {
                    at(ia, j) += 1.0;
                    at(j, ia) += 1.0;
                }
                if (ib >= 0) {
                    at(ib, j) -= 1.0;
                    at(j, ib) -= 1.0;
                }
                s.b[static_cast<size_t>(j)] = d.value;
                break;
            }
        }
    }
    return s;
}

}  // namespace

SolveResult solve_dc(const Circuit& c) {
    MnaSystem s = assemble(c);
    int n = s.n_unknowns;

    std::vector<double> lu = s.a;
    std::vector<int> perm;
    if (int bad = lu_factor(lu, perm, n); bad >= 0)
        throw UnsolvableError("singular system: no usable pivot for unknown " +
                              s.unknown_names[static_cast<size_t>(bad)] +
                              " (voltage-source loop or floating subnetwork)");
    std::vector<double> x;
    lu_solve(lu, perm, n, s.b, x);

    double residual = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = -s.b[static_cast<size_t>(i)];
        for (int j = 0; j < n; ++j) row += s.a[static_cast<size_t>(i) * n + j] * x[static_cast<size_t>(j)];
        residual = std::max(residual, std::fabs(row));
    }

    SolveResult r;
    r.residual = residual;
    r.ill_conditioned = residual > 1e-6;
    for (size_t i = 0; i < c.nets.size(); ++i) {
        int u = s.net_unknown[i];
        r.voltages[c.nets[i].name] = u < 0 ? 0.0 : x[static_cast<size_t>(u)];
    }
    int vs_seen = 0;
    for (const Device& d : c.devices)
        if (d.kind == DeviceKind::VSource)
            r.source_currents[d.name] = x[static_cast<size_t>(s.vsource_unknown[static_cast<size_t>(vs_seen++)])];
    return r;
}

double output_resistance(const Circuit& c, const std::string& net) {
    if (int idx = c.net_index(net); idx < 0 || c.nets[static_cast<size_t>(idx)].is_ground)
        throw UnsolvableError("output resistance requested at invalid net: " + net);
    Circuit probe = c;
    for (Device& d : probe.devices)
        if (d.kind != DeviceKind::Resistor) d.value = 0.0;
    // 1 A from ground into the net; its voltage is then the resistance.
    probe.ensure_net(kGroundName);
    probe.devices.push_back(Device{DeviceKind::ISource, "__itest", kGroundName, net, 1.0});
    SolveResult r = solve_dc(probe);
    return r.voltages.at(net);
}

std::map<std::string, double> evaluate_design_metrics(const Circuit& c,
                                                      const std::vector<std::string>& spec_nets) {
    SolveResult r = solve_dc(c);
    std::map<std::string, double> m;
    for (const std::string& net : spec_nets) {
        auto it = r.voltages.find(net);
        if (it == r.voltages.end())
            throw UnsolvableError("spec net not present in circuit: " + net);
        m["v_" + net] = it->second;
    }
    if (c.outputs.empty())
        throw UnsolvableError("design metrics need at least one declared output net");
    m["rout"] = output_resistance(c, c.outputs.back());
    double g = 0.0;
    for (const Device& d : c.devices)
        if (d.kind == DeviceKind::Resistor) g += 1.0 / d.value;
    m["total_conductance"] = g;
    return m;
}

double kcl_residual(const Circuit& c, const SolveResult& r) {
    // Sum of currents leaving each net; voltage-source branches use the
    // solved source currents.
    std::map<std::string, double> leave;
    for (const Net& n : c.nets) leave[n.name] = 0.0;
    for (const Device& d : c.devices) {
        double va = r.voltages.at(d.net_a);
        double vb = r.voltages.at(d.net_b);
        switch (d.kind) {
            case DeviceKind::Resistor: {
                double i = (va - vb) / d.value;
                leave[d.net_a] += i;
                leave[d.net_b] -= i;
                break;
            }
            case DeviceKind::ISource:
                leave[d.net_a] += d.value;
                leave[d.net_b] -= d.value;
                break;
            case DeviceKind::VSource: {
                double i = r.source_currents.at(d.name);
                leave[d.net_a] += i;
                leave[d.net_b] -= i;
                break;
            }
        }
    }
    double worst = 0.0;
    for (const Net& n : c.nets) {
        if (n.is_ground) continue;  // ground absorbs the reference current
        worst = std::max(worst, std::fabs(leave[n.name]));
    }
    return worst;
}

}  // namespace voltgraph
