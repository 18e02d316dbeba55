#pragma once

#include <map>
#include <vector>

namespace voltgraph {

class PredictModel;
struct GraphRecord;

// Fraction of predictions within (max y − min y)/K of the truth, the range
// taken over the evaluation set itself. Throws on empty input, K < 1, or a
// degenerate range.
double acc_at_k(const std::vector<double>& y, const std::vector<double>& y_hat, int k);

struct MetricReport {
    std::map<int, double> acc_at_k;  // K → fraction
    double mse = 0.0;
    int64_t n_examples = 0;
    double range_min = 0.0;
    double range_max = 0.0;
};

MetricReport make_report(const std::vector<double>& y, const std::vector<double>& y_hat,
                         const std::vector<int>& ks);

// Inference over records in fixed-size batches; no parameter updates.
MetricReport evaluate_model(PredictModel& model, const std::vector<GraphRecord>& records,
                            const std::vector<int>& ks, int batch_size = 64);

// Predictions only, in record order.
std::vector<double> predict_all(PredictModel& model, const std::vector<GraphRecord>& records,
                                int batch_size = 64);

}  // namespace voltgraph
