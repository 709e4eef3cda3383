#pragma once

#include <string>
#include <vector>

#include "mpt/core.hpp"

namespace mpt::evaluation {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
};

struct EvalReport {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<ClassMetrics> per_class;  // aligned to label indices
    std::int64_t n = 0;
};

// Accuracy plus per-class precision/recall/F1 with 0/0 defined as 0.
// macro_f1 averages over every class in the space; classes with zero support
// and zero predictions contribute 0 unless include_empty_classes is false,
// which drops them from the mean.
EvalReport evaluate(const std::vector<core::Label>& predictions,
                    const std::vector<core::Label>& gold, const core::LabelSpace& space,
                    bool include_empty_classes = true);

// Metrics CSV row shape shared by run outputs and reports.
std::string metrics_csv_header(const core::LabelSpace& space);
std::string metrics_csv_row(const std::string& run, const std::string& split,
                            std::uint64_t seed, const EvalReport& report);

}  // namespace mpt::evaluation
