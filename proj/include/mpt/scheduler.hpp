#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mpt/backend.hpp"
#include "mpt/core.hpp"
#include "mpt/evaluation.hpp"
#include "mpt/prompting.hpp"
#include "mpt/pseudolabel.hpp"
#include "mpt/rng.hpp"

namespace mpt::scheduler {

enum class OmegaMode { Uniform, SeedAccuracy };

struct MptConfig {
    std::vector<prompting::PromptTemplate> templates;  // the template set
    prompting::Verbalizer verbalizer;                  // shared by every template
    double subset_fraction = 0.25;  // lambda in (0, 1]
    int growth_factor = 5;          // d
    int generations = 3;            // k
    OmegaMode omega_mode = OmegaMode::Uniform;
    int unlabeled_count = 600;
    double distill_temperature = 1.0;
    backend::TrainingConfig training;
    std::uint64_t seed = 1;
};

void require_valid(const MptConfig& cfg);

// Provenance of one trained model, recorded into manifests.
struct ModelProvenance {
    std::string template_id;
    int generation = 0;
    double weight = 1.0;
    std::vector<std::string> labeler_template_ids;  // subset that labeled its data
    std::size_t training_set_size = 0;
    core::CountVector training_class_counts;
    std::uint64_t state_hash = 0;
};

struct RunResult {
    backend::StandardClassifier classifier;
    std::vector<std::vector<backend::TunedPromptModel>> generations;  // k+1 model sets
    std::vector<std::vector<ModelProvenance>> provenance;
    evaluation::EvalReport test_report;
    std::vector<std::string> warnings;
};

// Persistence hooks; the run directory writer implements these. Default
// implementations discard everything so in-memory runs need no writer.
class RunObserver {
  public:
    virtual ~RunObserver() = default;
    virtual void on_warning(const std::string&) {}
    virtual void on_snapshot(int /*generation*/, const std::string& /*template_id*/,
                             const std::vector<pseudolabel::ScoredPseudoExample>& /*selected*/) {}
    virtual void on_generation(int /*generation*/,
                               const std::vector<backend::TunedPromptModel>& /*models*/,
                               const std::vector<ModelProvenance>& /*provenance*/) {}
};

// max(1, nearest-even round of lambda * (n_templates - 1)).
int subset_size(double lambda, int n_templates);

// Without-replacement draw of subset_size models, never including
// exclude_index.
std::vector<backend::TunedPromptModel> sample_subset(
    const std::vector<backend::TunedPromptModel>& generation_models, int exclude_index,
    double lambda, Rng& rng);

// One model per template tuned on D; weights per omega_mode (uniform 1.0, or
// the template's untrained accuracy on D clamped to >= 0.1).
std::vector<backend::TunedPromptModel> train_generation_zero(const MptConfig& cfg,
                                                             const core::Dataset& data,
                                                             const backend::MockBackend& mock);

// Generation j: each template's new training set is D plus the per-class
// selection from a pool labeling by a sampled subset of the previous
// generation that excludes the template's own model.
std::vector<backend::TunedPromptModel> run_generation(
    int generation, const std::vector<backend::TunedPromptModel>& prev_models,
    const core::Dataset& data, const core::UnlabeledPool& pool, const MptConfig& cfg,
    const backend::MockBackend& mock, std::vector<ModelProvenance>* provenance = nullptr,
    RunObserver* observer = nullptr);

// Soft targets for the final classifier: one-hot rows for D, ensemble
// aggregate rows for every pool instance (temperature 1 keeps them raw).
std::vector<backend::SoftRow> build_distillation_set(
    const std::vector<backend::TunedPromptModel>& last_generation, const core::Dataset& data,
    const core::UnlabeledPool& pool, const backend::VocabularyProbe& probe,
    double temperature = 1.0);

// End to end: generations 0..k, distillation, final classifier, test metrics.
RunResult run(const MptConfig& cfg, const core::Dataset& data, const core::UnlabeledPool& pool,
              const core::Dataset& test, RunObserver* observer = nullptr);

// Per-template prompt-tuning baseline: each template tuned on D alone and
// evaluated directly on the test set through its own prompt distribution.
struct BaselineResult {
    std::string template_id;
    evaluation::EvalReport test_report;
};

std::vector<BaselineResult> run_prompt_baseline(const MptConfig& cfg, const core::Dataset& data,
                                                const core::Dataset& test);

}  // namespace mpt::scheduler
