#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mpt/core.hpp"
#include "mpt/prompting.hpp"
#include "mpt/vocab.hpp"

// Trainable mask-filling models and standard classifiers.
//
// The built-in implementation is a deterministic mock: a seeded additive
// count model over token bags. Per-(token, label) weight tables are updated
// in closed form from co-occurrence counts, and a seeded per-template noise
// component makes different templates disagree before (and slightly after)
// training, so the ensemble mechanics are exercised end to end on CPU in
// milliseconds.
//
// Adapting a real masked LM
// -------------------------
// A real backend replaces the mock state behind the same operations:
//   - VocabularyProbe maps words to the model tokenizer's ids and exposes the
//     mask id; soft_slot_id returns the reserved id of the trainable
//     embedding keyed by (template_id, slot_index).
//   - score_mask runs the encoder on WrappedInput.token_ids and returns the
//     mask-position logits gathered at the verbalizer layout's token ids.
//   - train_prompt fine-tunes the full encoder jointly with the soft-slot
//     embeddings (initialized by copying randomly chosen real-token
//     embeddings under the run seed), minimizing prompt_loss with AdamW at
//     TrainingConfig's defaults (lr 1e-5, batch 16, 6 epochs).
//   - train_classifier fits a dense softmax head over the sequence
//     representation against soft targets.
// The loss-improvement guarantee holds in expectation for real backends and
// is not asserted; every determinism property in the tests binds to the mock.

namespace mpt::backend {

struct TrainingConfig {
    double learning_rate = 1e-5;
    int batch_size = 16;
    int epochs = 6;
    int max_sequence_length = 128;
    std::uint64_t seed = 1;
};

// Throws ConfigError unless every field is positive.
void require_valid(const TrainingConfig& cfg);

// One row of a soft-labeled set: instance plus a simplex target.
struct SoftRow {
    core::Instance instance;
    Eigen::VectorXd target;
};

// ---------------------------------------------------------------------------
// Mock vocabulary

// Lowercases, splits on whitespace, strips edge punctuation, and splits words
// on '-'/'_' into subtokens (so hyphenated words are multi-token). Open by
// default; a closed word list can be supplied for validation fixtures.
class MockVocabulary final : public VocabularyProbe {
  public:
    MockVocabulary() = default;
    explicit MockVocabulary(std::vector<std::string> closed_words);

    std::vector<std::int64_t> token_ids(std::string_view word) const override;
    bool contains(std::string_view word) const override;
    std::int64_t mask_id() const override { return kMaskId; }

    static constexpr std::int64_t kMaskId = 3;

  private:
    bool closed_ = false;
    std::unordered_set<std::string> words_;
};

// ---------------------------------------------------------------------------
// Models

// Closed-form count state: label log-priors and per-token label
// log-likelihoods with Laplace smoothing.
struct CountModelState {
    Eigen::VectorXd log_prior;
    std::unordered_map<std::int64_t, Eigen::VectorXd> token_log_likelihood;
    Eigen::VectorXd unseen_log_likelihood;

    double token_ll(std::int64_t token, int label) const {
        auto it = token_log_likelihood.find(token);
        return it == token_log_likelihood.end() ? unseen_log_likelihood[label]
                                                : it->second[label];
    }
};

// A backend model bound to one template and one verbalizer, with a scalar
// ensemble weight. Immutable once trained; cheap to copy (state is shared).
class TunedPromptModel {
  public:
    prompting::PromptTemplate tmpl;
    std::shared_ptr<const prompting::Verbalizer> verbalizer;
    prompting::VerbalizerLayout layout;
    double weight = 1.0;
    int generation = 0;
    int max_sequence_length = 128;
    std::uint64_t seed = 0;
    std::shared_ptr<const MockVocabulary> vocab;     // backend handle
    std::shared_ptr<const CountModelState> state;    // null until trained

    const std::string& template_id() const { return tmpl.id; }
    bool trained() const { return state != nullptr; }
};

class StandardClassifier {
  public:
    core::LabelSpace space;
    std::shared_ptr<const MockVocabulary> vocab;
    std::shared_ptr<const CountModelState> state;
};

// ---------------------------------------------------------------------------
// Backend

class MockBackend {
  public:
    explicit MockBackend(std::uint64_t seed);

    const VocabularyProbe& vocabulary() const { return *vocab_; }
    std::shared_ptr<const MockVocabulary> shared_vocabulary() const { return vocab_; }
    std::uint64_t seed() const { return seed_; }

    // Untrained model; scores are pure seeded noise over the token bag.
    TunedPromptModel untrained_prompt_model(const prompting::PromptTemplate& tmpl,
                                            std::shared_ptr<const prompting::Verbalizer> verbalizer,
                                            int max_sequence_length) const;

  private:
    std::uint64_t seed_;
    std::shared_ptr<const MockVocabulary> vocab_;
};

// ---------------------------------------------------------------------------
// Operations

// One logit per verbalizer constituent token, deterministic given model state.
// Throws IncompatibleTemplate when the input was wrapped with another template.
Eigen::VectorXd score_mask(const TunedPromptModel& model, const prompting::WrappedInput& wrapped);

// Closed-form retraining on hard-labeled data. The returned model's training
// loss never exceeds the input model's on the same data.
TunedPromptModel train_prompt(const TunedPromptModel& model, const core::Dataset& data,
                              const TrainingConfig& cfg);

// Soft-target variant; one-hot rows behave exactly like hard labels.
TunedPromptModel train_prompt(const TunedPromptModel& model, const std::vector<SoftRow>& rows,
                              const TrainingConfig& cfg);

StandardClassifier train_classifier(const MockBackend& backend, const std::vector<SoftRow>& rows,
                                    const core::LabelSpace& space, const TrainingConfig& cfg);

prompting::LabelDistribution classify(const StandardClassifier& classifier,
                                      const core::Instance& instance);

// Wrap + score + restricted softmax in one step.
prompting::LabelDistribution prompt_distribution(const TunedPromptModel& model,
                                                 const core::Instance& instance,
                                                 const VocabularyProbe& probe);

// Fraction of examples whose prompt argmax matches gold.
double prompt_accuracy(const TunedPromptModel& model, const core::Dataset& data,
                       const VocabularyProbe& probe);

double classifier_accuracy(const StandardClassifier& classifier, const core::Dataset& data);

// Plain-text state blob (sorted, fixed float format) used for checkpoints and
// state hashing.
std::string serialize_state(const TunedPromptModel& model);
std::string serialize_state(const StandardClassifier& classifier);

std::uint64_t state_hash(const TunedPromptModel& model);

}  // namespace mpt::backend
