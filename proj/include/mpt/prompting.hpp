#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mpt/core.hpp"
#include "mpt/vocab.hpp"

namespace mpt::prompting {

// ---------------------------------------------------------------------------
// Templates

struct LiteralSegment {
    std::string text;
};

// Resolves a named instance field. Slots with lower truncation_priority are
// truncated first when the token budget is tight; protected slots (e.g. the
// keyword in the keyword task) are never truncated.
struct InstanceSlot {
    std::string field;
    int truncation_priority = 0;
    bool never_truncate = false;
};

struct SoftSlot {
    int slot_index = 0;
};

struct MaskSlot {};

// Renders the template's task_description at this position. Table-layout
// templates put the description at the front for sentence-level tasks and at
// the end for the keyword task, so position is part of the segment list.
struct DescriptionSlot {};

using Segment = std::variant<LiteralSegment, InstanceSlot, SoftSlot, MaskSlot, DescriptionSlot>;

enum class TemplateKind { Hard, Soft };

struct PromptTemplate {
    std::string id;
    TemplateKind kind = TemplateKind::Hard;
    std::vector<Segment> segments;
    std::optional<std::string> task_description;
};

// Checks structural invariants: exactly one mask slot, at least one instance
// slot, soft templates have soft slots and hard ones none, distinct soft
// indices, description slots only with a description set.
core::ValidationReport validate_template(const PromptTemplate& tmpl);

// Throwing form of validate_template for load paths.
void require_valid(const PromptTemplate& tmpl);

// ---------------------------------------------------------------------------
// Verbalizer

// Maps each label to a non-empty list of label words; word sets must be
// pairwise disjoint across labels.
struct Verbalizer {
    core::LabelSpace space;
    std::vector<std::vector<std::string>> words;  // aligned to label indices

    const std::vector<std::string>& words_for(int label_index) const {
        return words.at(static_cast<std::size_t>(label_index));
    }
};

core::ValidationReport validate_verbalizer(const Verbalizer& verbalizer,
                                           const backend::VocabularyProbe& probe);

// Verbalizer bound to a backend vocabulary: one entry per constituent token
// of every label word, in (label, word, token) order. Mask logits are laid
// out over these entries.
struct VerbalizerLayout {
    struct Entry {
        int label = 0;
        int word = 0;
        std::int64_t token_id = 0;
    };
    std::vector<Entry> entries;
    std::vector<std::vector<std::pair<int, int>>> word_spans;  // [label][word] -> (first, count)
    int n_labels = 0;

    int size() const { return static_cast<int>(entries.size()); }
};

VerbalizerLayout bind_layout(const Verbalizer& verbalizer,
                             const backend::VocabularyProbe& probe);

// ---------------------------------------------------------------------------
// Wrapping

struct WrappedInput {
    std::vector<std::int64_t> token_ids;
    int mask_position = -1;
    std::string origin;       // instance id
    std::string template_id;
    std::vector<std::pair<int, int>> soft_slot_positions;  // (slot index, position)
};

// Renders the template around the instance within `budget` tokens. Template
// tokens (literals, soft slots, mask, description) are never truncated;
// instance-slot text is truncated from the tail, lowest-priority slot first.
WrappedInput wrap(const PromptTemplate& tmpl, const core::Instance& instance,
                  int budget, const backend::VocabularyProbe& probe);

// ---------------------------------------------------------------------------
// Scoring

// Probability vector over a label space.
class LabelDistribution {
  public:
    explicit LabelDistribution(Eigen::VectorXd probs);

    const Eigen::VectorXd& probs() const { return probs_; }
    double operator[](int label_index) const { return probs_[label_index]; }
    int size() const { return static_cast<int>(probs_.size()); }

    // Ties broken toward the lowest label index.
    int argmax() const;

  private:
    Eigen::VectorXd probs_;
};

// Softmax restricted to the verbalizer token set; multi-token words score as
// the mean of their constituent-token probabilities; per-label scores are the
// sum over the label's words, renormalized to a simplex.
LabelDistribution restricted_mask_distribution(const Eigen::VectorXd& raw_logits,
                                               const VerbalizerLayout& layout);

// Mean negative log of the gold label's word-probability mass under the
// restricted softmax (no per-label renormalization). Finite for finite logits.
double prompt_loss(const std::vector<std::pair<WrappedInput, core::Label>>& batch,
                   const std::vector<Eigen::VectorXd>& model_outputs,
                   const VerbalizerLayout& layout);

// Log of the gold label's word mass for one output; prompt_loss is the mean
// of -log_label_mass over a batch.
double log_label_mass(const Eigen::VectorXd& raw_logits, const VerbalizerLayout& layout,
                      int label_index);

// ---------------------------------------------------------------------------
// Template pack files

// A task bundle: label space, shared verbalizer, templates, task description.
struct TemplatePack {
    std::string task;
    core::LabelSpace space;
    Verbalizer verbalizer;
    std::vector<PromptTemplate> templates;
};

TemplatePack load_template_pack(const std::string& path);
void save_template_pack(const TemplatePack& pack, const std::string& path);

const PromptTemplate& find_template(const TemplatePack& pack, const std::string& id);

}  // namespace mpt::prompting
