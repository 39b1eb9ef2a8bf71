#include "denfuse/metrics.hpp"

#include "denfuse/assignment.hpp"
#include "denfuse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace denfuse {

void GospaParams::validate() const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ConfigError("GOSPA order p must be >= 1");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("GOSPA alpha must lie in (0, 2]");
    if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw ConfigError("GOSPA cut-off must be positive");
}

GospaBreakdown gospa_from_assignment(std::span<const MeasVector> estimates, std::span<const MeasVector> truth,
                                     const std::vector<int>& truth_to_estimate, const GospaParams& params) {
    const double penalty = std::pow(params.cutoff, params.p) / params.alpha;
    GospaBreakdown out;
    std::vector<bool> estimate_used(estimates.size(), false);
    int missed = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int j = truth_to_estimate[i];
        if (j >= 0) {
            const double d = (truth[i] - estimates[j]).norm();
            if (d < params.cutoff) {
                out.localisation += std::pow(d, params.p);
                out.assignment.emplace_back(static_cast<int>(i), j);
                estimate_used[j] = true;
                continue;
            }
        }
        ++missed;
    }
    const auto unused = std::count(estimate_used.begin(), estimate_used.end(), false);
    out.missed = penalty * missed;
    out.false_ = penalty * static_cast<double>(unused);
    out.total = std::pow(out.localisation + out.missed + out.false_, 1.0 / params.p);
    return out;
}

GospaBreakdown gospa(std::span<const MeasVector> estimates, std::span<const MeasVector> truth,
                     const GospaParams& params) {
    params.validate();
    const double unmatched_pair = 2.0 * std::pow(params.cutoff, params.p) / params.alpha;
    Eigen::MatrixXd cost(truth.size(), estimates.size());
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (std::size_t j = 0; j < estimates.size(); ++j) {
            const double d = (truth[i] - estimates[j]).norm();
            cost(i, j) = d < params.cutoff ? std::pow(d, params.p) : unmatched_pair;
        }
    return gospa_from_assignment(estimates, truth, solve_assignment(cost), params);
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n)};
}

MethodSummary aggregate(const MethodRecord& record) {
    if (record.gospa.empty() || record.gospa.front().empty() || record.gospa.front().front().empty())
        throw ConfigError("aggregate: no GOSPA values for method '" + record.method + "'");
    const std::size_t steps = record.gospa.front().size();
    const std::size_t sensors = record.gospa.front().front().size();

    MethodSummary out;
    out.method = record.method;
    out.runs = static_cast<int>(record.gospa.size());
    std::vector<double> total, loc, missed, false_;
    std::vector<std::vector<double>> by_step(steps);
    for (const auto& run : record.gospa) {
        if (run.size() != steps) throw ConfigError("aggregate: runs have different step counts");
        double t = 0.0, l = 0.0, m = 0.0, f = 0.0;
        for (std::size_t n = 0; n < steps; ++n) {
            if (run[n].size() != sensors) throw ConfigError("aggregate: steps have different sensor counts");
            for (const auto& g : run[n]) {
                t += g.total;
                l += g.localisation;
                m += g.missed;
                f += g.false_;
                by_step[n].push_back(g.total);
            }
        }
        const double count = static_cast<double>(steps * sensors);
        total.push_back(t / count);
        loc.push_back(l / count);
        missed.push_back(m / count);
        false_.push_back(f / count);
    }
    out.mgospa = mean_std(total);
    out.localisation = mean_std(loc);
    out.missed = mean_std(missed);
    out.false_ = mean_std(false_);
    for (const auto& v : by_step) out.per_step.push_back(mean_std(v));

    if (!record.communication.empty()) {
        double ci = 0.0;
        for (auto c : record.communication) ci += static_cast<double>(c) / static_cast<double>(steps);
        out.communication_iterations = ci / static_cast<double>(record.communication.size());
    }
    return out;
}

}  // namespace denfuse
