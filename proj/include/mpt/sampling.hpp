#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "mpt/core.hpp"

namespace mpt::sampling {

enum class SampleMode { BalancedK, Proportional };

struct SamplePlan {
    SampleMode mode = SampleMode::BalancedK;
    int k = 16;        // per-class count in balanced mode
    int total = 0;     // overall count in proportional mode; 0 means k * |Y|
    std::uint64_t seed = 1;
    bool validation_equal_size = true;
};

struct SampledSplit {
    core::Dataset train;
    core::Dataset validation;
    std::vector<std::string> warnings;
};

// Exactly K train and K validation examples per class, disjoint,
// deterministic under the seed. Requires >= 2K examples per class (K when
// with_validation is off).
SampledSplit balanced_kshot(const core::Dataset& source, int k, std::uint64_t seed,
                            bool with_validation = true);

// Largest-remainder apportionment of the source class proportions to `total`;
// validation drawn identically from the remainder. A class whose quota rounds
// to zero produces a warning (or InsufficientClass when hard_zero_quota).
SampledSplit proportional_sample(const core::Dataset& source, int total, std::uint64_t seed,
                                 bool hard_zero_quota = false, bool with_validation = true);

SampledSplit sample(const core::Dataset& source, const SamplePlan& plan);

// Per-class counts from largest-remainder apportionment, exposed for tests.
core::CountVector apportion(const core::CountVector& class_sizes, std::int64_t total);

// n instances outside exclude_ids, deterministic under the seed.
core::UnlabeledPool sample_pool(const std::vector<core::Instance>& source, int n,
                                const std::unordered_set<std::string>& exclude_ids,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Split record files: mode, parameters, seed, and explicit id lists, so any
// split reloads without recomputation.

struct SplitRecord {
    SamplePlan plan;
    std::vector<std::string> train_ids;
    std::vector<std::string> validation_ids;
};

SplitRecord to_record(const SamplePlan& plan, const SampledSplit& split);
void save_split(const SplitRecord& record, const std::string& path);
SplitRecord load_split(const std::string& path);

// Rebuilds the datasets from a record against the source it was drawn from.
SampledSplit apply_split(const core::Dataset& source, const SplitRecord& record);

}  // namespace mpt::sampling
