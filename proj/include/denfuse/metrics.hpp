#pragma once

#include "denfuse/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace denfuse {

struct GospaParams {
    double p = 1.0;
    double alpha = 2.0;
    double cutoff = 50.0;

    void validate() const;
};

/// Components are in the p-th power domain, so for p = 1 they add up to the
/// total. assignment holds (truth index, estimate index) pairs closer than
/// the cut-off.
struct GospaBreakdown {
    double total = 0.0;
    double localisation = 0.0;
    double missed = 0.0;
    double false_ = 0.0;
    std::vector<std::pair<int, int>> assignment;
};

[[nodiscard]] GospaBreakdown gospa(std::span<const MeasVector> estimates, std::span<const MeasVector> truth,
                                   const GospaParams& params = {});

/// Sums a breakdown from a given assignment in truth-index order. Both the
/// solver path and external oracles use it so totals are comparable bit-wise.
[[nodiscard]] GospaBreakdown gospa_from_assignment(std::span<const MeasVector> estimates,
                                                   std::span<const MeasVector> truth,
                                                   const std::vector<int>& truth_to_estimate,
                                                   const GospaParams& params);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Population mean and standard deviation.
[[nodiscard]] MeanStd mean_std(std::span<const double> values);

/// Scores of one method: gospa[run][step][sensor] plus total communication
/// iterations per run.
struct MethodRecord {
    std::string method;
    std::vector<std::vector<std::vector<GospaBreakdown>>> gospa;
    std::vector<std::int64_t> communication;
};

struct MethodSummary {
    std::string method;
    int runs = 0;
    MeanStd mgospa;  // across runs of the per-run mean over sensors and steps
    MeanStd localisation;
    MeanStd missed;
    MeanStd false_;
    double communication_iterations = 0.0;  // per time step, averaged over runs
    std::vector<MeanStd> per_step;          // pooled over sensors and runs
};

/// Throws ConfigError on empty input or ragged shapes.
[[nodiscard]] MethodSummary aggregate(const MethodRecord& record);

}  // namespace denfuse
