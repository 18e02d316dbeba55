#include "oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace voltgraph::testing {

namespace {

// Reduced row echelon form with full pivoting on an R×C system with one
// augmented column. Returns the unique solution or throws.
std::vector<double> solve_full_pivot(std::vector<double> a, int rows, int cols) {
    int width = cols + 1;  // augmented
    std::vector<int> col_of(cols);
    for (int j = 0; j < cols; ++j) col_of[j] = j;

    int rank = 0;
    for (int k = 0; k < cols && rank < rows; ++k) {
        int pr = -1, pc = -1;
        double best = 1e-12;
        for (int i = rank; i < rows; ++i)
            for (int j = k; j < cols; ++j) {
                double cand = std::fabs(a[static_cast<size_t>(i) * width + j]);
                if (cand > best) {
                    best = cand;
                    pr = i;
                    pc = j;
                }
            }
        if (pr < 0) break;
        for (int j = 0; j <= cols; ++j)
            std::swap(a[static_cast<size_t>(pr) * width + j], a[static_cast<size_t>(rank) * width + j]);
        if (pc != k) {
            for (int i = 0; i < rows; ++i)
                std::swap(a[static_cast<size_t>(i) * width + pc], a[static_cast<size_t>(i) * width + k]);
            std::swap(col_of[pc], col_of[k]);
        }
        double piv = a[static_cast<size_t>(rank) * width + k];
        for (int j = k; j <= cols; ++j) a[static_cast<size_t>(rank) * width + j] /= piv;
        for (int i = 0; i < rows; ++i) {
            if (i == rank) continue;
            double f = a[static_cast<size_t>(i) * width + k];
            if (f == 0.0) continue;
            for (int j = k; j <= cols; ++j)
                a[static_cast<size_t>(i) * width + j] -= f * a[static_cast<size_t>(rank) * width + j];
        }
        ++rank;
    }

    if (rank < cols) throw std::runtime_error("reference solver: underdetermined system");
    for (int i = rank; i < rows; ++i)
        if (std::fabs(a[static_cast<size_t>(i) * width + cols]) > 1e-7)
            throw std::runtime_error("reference solver: inconsistent system");

    std::vector<double> x(static_cast<size_t>(cols));
    for (int i = 0; i < cols; ++i) x[static_cast<size_t>(col_of[i])] = a[static_cast<size_t>(i) * width + cols];
    return x;
}

}  // namespace

std::map<std::string, double> reference_dc(const Circuit& c) {
    int n_nets = static_cast<int>(c.nets.size());
    int n_vs = 0;
    for (const Device& d : c.devices)
        if (d.kind == DeviceKind::VSource) ++n_vs;

    int cols = n_nets + n_vs;        // all net voltages + source currents
    int rows = n_nets + 1 + n_vs;    // KCL everywhere + ground pin + constraints
    int width = cols + 1;
    std::vector<double> a(static_cast<size_t>(rows) * width, 0.0);
    auto at = [&a, width](int r, int col) -> double& { return a[static_cast<size_t>(r) * width + col]; };

    int ground = -1;
    for (int i = 0; i < n_nets; ++i)
        if (c.nets[static_cast<size_t>(i)].is_ground) ground = i;
    if (ground < 0) throw std::runtime_error("reference solver: no ground");

    int vs_seen = 0;
    for (const Device& d : c.devices) {
        int ia = c.net_index(d.net_a);
        int ib = c.net_index(d.net_b);
        switch (d.kind) {
            case DeviceKind::Resistor: {
                double g = 1.0 / d.value;
                at(ia, ia) += g;
                at(ia, ib) -= g;
                at(ib, ib) += g;
                at(ib, ia) -= g;
                break;
            }
            case DeviceKind::ISource:
                at(ia, cols) -= d.value;
                at(ib, cols) += d.value;
                break;
            case DeviceKind::VSource: {
                int j = n_nets + vs_seen;
                at(ia, j) += 1.0;  // current leaves net_a into the source
                at(ib, j) -= 1.0;
                int cr = n_nets + 1 + vs_seen;
                at(cr, ia) += 1.0;
                at(cr, ib) -= 1.0;
                at(cr, cols) = d.value;
                ++vs_seen;
                break;
            }
        }
    }
    at(n_nets, ground) = 1.0;  // v(ground) = 0

    std::vector<double> x = solve_full_pivot(std::move(a), rows, cols);
    std::map<std::string, double> out;
    for (int i = 0; i < n_nets; ++i) out[c.nets[static_cast<size_t>(i)].name] = x[static_cast<size_t>(i)];
    out[kGroundName] = 0.0;  // pinned exactly, independent of round-off
    return out;
}

double reference_rout(const Circuit& c, const std::string& net) {
    Circuit probe = c;
    for (Device& d : probe.devices)
        if (d.kind != DeviceKind::Resistor) d.value = 0.0;
    probe.ensure_net(kGroundName);
    probe.devices.push_back(Device{DeviceKind::ISource, "__itest_ref", kGroundName, net, 1.0});
    return reference_dc(probe).at(net);
}

}  // namespace voltgraph::testing
