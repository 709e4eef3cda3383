#pragma once

#include <optional>
#include <vector>

#include "mpt/backend.hpp"
#include "mpt/core.hpp"
#include "mpt/prompting.hpp"

namespace mpt::pseudolabel {

// One pool instance scored by an ensemble: full distribution, argmax label
// (ties to the lowest index), and the argmax probability as confidence.
// override_label is set only when the shortage fallback claimed the instance
// for a class other than its argmax; duplicate marks cyclic copies.
struct ScoredPseudoExample {
    core::Instance instance;
    prompting::LabelDistribution distribution;
    core::Label argmax_label;
    double score = 0.0;
    std::optional<core::Label> override_label;
    bool duplicate = false;

    const core::Label& assigned_label() const {
        return override_label ? *override_label : argmax_label;
    }
};

// Per-class growth targets: c_j(y) = d^j * c_0(y).
struct GrowthSchedule {
    int factor = 5;  // d
    core::CountVector base_counts;
    int generations = 3;  // k
};

void require_valid(const GrowthSchedule& schedule);

// Weighted mean of simplex vectors with weights normalized by Z first; the
// arithmetic kernel behind aggregate. A singleton input returns its
// distribution unchanged.
prompting::LabelDistribution weighted_mean(const std::vector<double>& weights,
                                           const std::vector<Eigen::VectorXd>& distributions);

// Weighted ensemble mean (1/Z) * sum_i w_i * p_i over each model's own
// template wrapping; Z = sum of weights. Contributions are accumulated in
// template-id order, so the result is independent of the model list order.
prompting::LabelDistribution aggregate(const std::vector<backend::TunedPromptModel>& models,
                                       const core::Instance& instance,
                                       const backend::VocabularyProbe& probe);

// Scores every pool instance; output ordered by instance id ascending.
std::vector<ScoredPseudoExample> label_pool(const std::vector<backend::TunedPromptModel>& models,
                                            const core::UnlabeledPool& pool,
                                            const backend::VocabularyProbe& probe);

core::CountVector growth_targets(const GrowthSchedule& schedule, int generation);

// Per class (ascending label index) takes the top targets[y]-base[y] entries
// with argmax y by score; shortages fall back to the highest distribution[y]
// among unclaimed entries (override recorded), then to cyclic duplicates of
// the class's own selection. Each pool instance is claimed at most once, and
// a class stops claiming once the unclaimed count equals the number of later
// classes still needing entries, so those classes stay fillable.
std::vector<ScoredPseudoExample> select_per_class(const core::LabelSpace& space,
                                                  const std::vector<ScoredPseudoExample>& scored,
                                                  const core::CountVector& targets,
                                                  const core::CountVector& base);

// Initial set plus one hard-labeled example per selected entry. Duplicate
// copies get a "#dupN" id suffix so the dataset's unique-id invariant holds.
core::Dataset assemble_training_set(const core::Dataset& initial,
                                    const std::vector<ScoredPseudoExample>& selected);

}  // namespace mpt::pseudolabel
