#include "voltgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "voltgraph/model.hpp"

namespace voltgraph {

double acc_at_k(const std::vector<double>& y, const std::vector<double>& y_hat, int k) {
    if (y.empty() || y.size() != y_hat.size())
        throw std::invalid_argument("acc_at_k: arrays must be nonempty and equal length");
    if (k < 1) throw std::invalid_argument("acc_at_k: K must be at least 1");
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    if (*hi <= *lo) throw std::invalid_argument("acc_at_k: degenerate target range");
    double tol = (*hi - *lo) / static_cast<double>(k);
    int64_t hits = 0;
    for (size_t i = 0; i < y.size(); ++i)
        if (std::fabs(y[i] - y_hat[i]) <= tol) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

MetricReport make_report(const std::vector<double>& y, const std::vector<double>& y_hat,
                         const std::vector<int>& ks) {
    MetricReport r;
    r.n_examples = static_cast<int64_t>(y.size());
    for (int k : ks) r.acc_at_k[k] = acc_at_k(y, y_hat, k);
    double acc = 0.0;
    for (size_t i = 0; i < y.size(); ++i) acc += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    r.mse = acc / static_cast<double>(y.size());
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    r.range_min = *lo;
    r.range_max = *hi;
    return r;
}

std::vector<double> predict_all(PredictModel& model, const std::vector<GraphRecord>& records,
                                int batch_size) {
    NoGradGuard ng;
    std::vector<double> out;
    for (size_t lo = 0; lo < records.size(); lo += static_cast<size_t>(batch_size)) {
        size_t hi = std::min(records.size(), lo + static_cast<size_t>(batch_size));
        std::vector<int> which(hi - lo);
        for (size_t i = lo; i < hi; ++i) which[i - lo] = static_cast<int>(i);
        Tensor pred = model.predict(make_batch(records, which));
        out.insert(out.end(), pred.data().begin(), pred.data().end());
    }
    return out;
}

MetricReport evaluate_model(PredictModel& model, const std::vector<GraphRecord>& records,
                            const std::vector<int>& ks, int batch_size) {
    std::vector<double> y;
    for (const GraphRecord& r : records) {
        if (model.task() == Task::NodeVoltage)
            y.insert(y.end(), r.targets.begin(), r.targets.end());
        else if (r.graph_target)
            y.push_back(*r.graph_target);
        else
            throw std::invalid_argument("record lacks a graph-level target");
    }
    return make_report(y, predict_all(model, records, batch_size), ks);
}

}  // namespace voltgraph
