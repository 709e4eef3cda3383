#include "mpt/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <unordered_map>

namespace mpt::prompting {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Template validation

core::ValidationReport validate_template(const PromptTemplate& tmpl) {
    core::ValidationReport report;
    auto add = [&](std::string code, std::string message) {
        report.findings.push_back({std::move(code), std::move(message)});
    };

    if (tmpl.id.empty()) add("empty-id", "template has an empty id");

    int masks = 0, instance_slots = 0, descriptions = 0;
    std::vector<int> soft_indices;
    for (const Segment& seg : tmpl.segments) {
        if (std::holds_alternative<MaskSlot>(seg)) ++masks;
        if (std::holds_alternative<InstanceSlot>(seg)) ++instance_slots;
        if (std::holds_alternative<DescriptionSlot>(seg)) ++descriptions;
        if (const auto* soft = std::get_if<SoftSlot>(&seg)) soft_indices.push_back(soft->slot_index);
    }

    if (masks != 1) {
        add("mask-count", "template '" + tmpl.id + "' has " + std::to_string(masks) +
                              " mask slots, needs exactly 1");
    }
    if (instance_slots == 0) {
        add("no-instance-slot", "template '" + tmpl.id + "' has no instance slot");
    }
    if (tmpl.kind == TemplateKind::Soft && soft_indices.empty()) {
        add("soft-without-slots", "soft template '" + tmpl.id + "' has no soft slots");
    }
    if (tmpl.kind == TemplateKind::Hard && !soft_indices.empty()) {
        add("hard-with-slots", "hard template '" + tmpl.id + "' has soft slots");
    }
    std::sort(soft_indices.begin(), soft_indices.end());
    if (std::adjacent_find(soft_indices.begin(), soft_indices.end()) != soft_indices.end()) {
        add("duplicate-soft-index", "template '" + tmpl.id + "' repeats a soft slot index");
    }
    if (descriptions > 0 && !tmpl.task_description) {
        add("description-unset", "template '" + tmpl.id +
                                     "' has a description slot but no task description");
    }
    return report;
}

void require_valid(const PromptTemplate& tmpl) {
    core::ValidationReport report = validate_template(tmpl);
    if (report.ok()) return;
    std::string msg = "invalid template '" + tmpl.id + "':";
    for (const core::Finding& f : report.findings) msg += "\n  " + f.code + ": " + f.message;
    throw ConfigError(msg);
}

// ---------------------------------------------------------------------------
// Verbalizer

core::ValidationReport validate_verbalizer(const Verbalizer& verbalizer,
                                           const backend::VocabularyProbe& probe) {
    core::ValidationReport report;
    auto add = [&](std::string code, std::string message) {
        report.findings.push_back({std::move(code), std::move(message)});
    };

    const int n = verbalizer.space.size();
    if (static_cast<int>(verbalizer.words.size()) != n) {
        add("missing-label-entry",
            "verbalizer covers " + std::to_string(verbalizer.words.size()) + " of " +
                std::to_string(n) + " labels");
        return report;
    }

    std::unordered_map<std::string, int> owner;
    for (int y = 0; y < n; ++y) {
        const auto& words = verbalizer.words[static_cast<std::size_t>(y)];
        const std::string& label = verbalizer.space.at(y).name;
        if (words.empty()) {
            add("missing-label-entry", "label '" + label + "' has no label words");
            continue;
        }
        for (const std::string& w : words) {
            if (w.empty()) {
                add("empty-word", "label '" + label + "' contains an empty word");
                continue;
            }
            auto [it, inserted] = owner.emplace(w, y);
            if (!inserted && it->second != y) {
                add("word-collision", "word '" + w + "' is shared by labels '" +
                                          verbalizer.space.at(it->second).name + "' and '" +
                                          label + "'");
            }
            if (!probe.contains(w)) {
                add("out-of-vocabulary", "word '" + w + "' is not in the backend vocabulary");
            } else if (int k = probe.token_count(w); k > 1) {
                add("multi-token-word", "word '" + w + "' tokenizes to " + std::to_string(k) +
                                            " subtokens (warning)");
            }
        }
    }
    return report;
}

VerbalizerLayout bind_layout(const Verbalizer& verbalizer,
                             const backend::VocabularyProbe& probe) {
    const int n = verbalizer.space.size();
    if (static_cast<int>(verbalizer.words.size()) != n) {
        throw ConfigError("verbalizer does not cover the label space");
    }
    VerbalizerLayout layout;
    layout.n_labels = n;
    layout.word_spans.resize(static_cast<std::size_t>(n));
    for (int y = 0; y < n; ++y) {
        const auto& words = verbalizer.words[static_cast<std::size_t>(y)];
        if (words.empty()) {
            throw EmptyVerbalizer("label '" + verbalizer.space.at(y).name + "' has no words");
        }
        for (int w = 0; w < static_cast<int>(words.size()); ++w) {
            const auto ids = probe.token_ids(words[static_cast<std::size_t>(w)]);
            if (ids.empty()) {
                throw ConfigError("verbalizer word '" + words[static_cast<std::size_t>(w)] +
                                  "' tokenizes to nothing");
            }
            const int first = layout.size();
            for (std::int64_t id : ids) layout.entries.push_back({y, w, id});
            layout.word_spans[static_cast<std::size_t>(y)].emplace_back(
                first, static_cast<int>(ids.size()));
        }
    }
    return layout;
}

// ---------------------------------------------------------------------------
// Wrapping

namespace {

struct ResolvedSegment {
    std::vector<std::int64_t> tokens;
    bool truncatable = false;
    int priority = 0;
    int soft_index = -1;  // >= 0 when this is a soft slot
    bool is_mask = false;
    int keep = 0;  // surviving token count, filled by allocation
};

}  // namespace

WrappedInput wrap(const PromptTemplate& tmpl, const core::Instance& instance,
                  int budget, const backend::VocabularyProbe& probe) {
    std::vector<ResolvedSegment> resolved;
    resolved.reserve(tmpl.segments.size());

    auto tokenize = [&](const std::string& text) {
        std::vector<std::int64_t> out;
        // Probe tokenization is per word; split on whitespace here so literal
        // text and field content go through the same path.
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i) {
                auto ids = probe.token_ids(std::string_view(text).substr(i, j - i));
                out.insert(out.end(), ids.begin(), ids.end());
            }
            i = j;
        }
        return out;
    };

    int fixed_count = 0;
    for (const Segment& seg : tmpl.segments) {
        ResolvedSegment r;
        if (const auto* lit = std::get_if<LiteralSegment>(&seg)) {
            r.tokens = tokenize(lit->text);
        } else if (const auto* slot = std::get_if<InstanceSlot>(&seg)) {
            r.tokens = tokenize(instance.field(slot->field));
            r.truncatable = !slot->never_truncate;
            r.priority = slot->truncation_priority;
        } else if (const auto* soft = std::get_if<SoftSlot>(&seg)) {
            r.tokens = {probe.soft_slot_id(tmpl.id, soft->slot_index)};
            r.soft_index = soft->slot_index;
        } else if (std::holds_alternative<MaskSlot>(seg)) {
            r.tokens = {probe.mask_id()};
            r.is_mask = true;
        } else {  // DescriptionSlot
            if (!tmpl.task_description) {
                throw ConfigError("template '" + tmpl.id +
                                  "' has a description slot but no task description");
            }
            r.tokens = tokenize(*tmpl.task_description);
        }
        const bool instance_content =
            std::holds_alternative<InstanceSlot>(seg);
        if (!instance_content) fixed_count += static_cast<int>(r.tokens.size());
        r.keep = static_cast<int>(r.tokens.size());
        resolved.push_back(std::move(r));
    }

    int available = budget - fixed_count;
    if (available < 1) {
        throw BudgetExhausted("template '" + tmpl.id + "' needs " + std::to_string(fixed_count) +
                              " fixed tokens; budget " + std::to_string(budget) +
                              " leaves no room for instance content");
    }

    // Protected slots consume budget first and are never cut.
    std::vector<std::pair<std::size_t, ResolvedSegment*>> truncatable;
    int total_instance_tokens = 0;
    for (std::size_t i = 0; i < tmpl.segments.size(); ++i) {
        if (!std::holds_alternative<InstanceSlot>(tmpl.segments[i])) continue;
        ResolvedSegment& r = resolved[i];
        total_instance_tokens += static_cast<int>(r.tokens.size());
        if (r.truncatable) {
            truncatable.emplace_back(i, &r);
        } else {
            available -= static_cast<int>(r.tokens.size());
        }
    }
    if (available < 0) {
        throw BudgetExhausted("protected slot content of template '" + tmpl.id +
                              "' does not fit the budget of " + std::to_string(budget));
    }

    // Allocate the remaining budget to truncatable slots, filling the slots
    // that are truncated last first: higher priority wins, ties go to the
    // earlier segment.
    std::stable_sort(truncatable.begin(), truncatable.end(),
                     [](const auto& a, const auto& b) {
                         if (a.second->priority != b.second->priority)
                             return a.second->priority > b.second->priority;
                         return a.first < b.first;
                     });
    int survivors = total_instance_tokens;
    for (auto& [idx, r] : truncatable) {
        const int take = std::min(static_cast<int>(r->tokens.size()), available);
        survivors -= static_cast<int>(r->tokens.size()) - take;
        r->keep = take;
        available -= take;
    }
    if (survivors < 1) {
        throw BudgetExhausted("no instance token of '" + instance.id +
                              "' fits template '" + tmpl.id + "' within budget " +
                              std::to_string(budget));
    }

    WrappedInput out;
    out.origin = instance.id;
    out.template_id = tmpl.id;
    for (const ResolvedSegment& r : resolved) {
        if (r.is_mask) out.mask_position = static_cast<int>(out.token_ids.size());
        if (r.soft_index >= 0) {
            out.soft_slot_positions.emplace_back(r.soft_index,
                                                 static_cast<int>(out.token_ids.size()));
        }
        out.token_ids.insert(out.token_ids.end(), r.tokens.begin(), r.tokens.begin() + r.keep);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring

LabelDistribution::LabelDistribution(Eigen::VectorXd probs) : probs_(std::move(probs)) {
    if (probs_.size() == 0) throw Error("empty label distribution");
    if (probs_.minCoeff() < 0.0) throw Error("label distribution has a negative entry");
    if (std::abs(probs_.sum() - 1.0) > 1e-9) {
        throw Error("label distribution sums to " + std::to_string(probs_.sum()));
    }
}

int LabelDistribution::argmax() const {
    int best = 0;
    for (int i = 1; i < size(); ++i) {
        if (probs_[i] > probs_[best]) best = i;
    }
    return best;
}

namespace {

double logsumexp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

Eigen::VectorXd entry_probs(const Eigen::VectorXd& raw_logits) {
    const double m = raw_logits.maxCoeff();
    Eigen::VectorXd e = (raw_logits.array() - m).exp();
    return e / e.sum();
}

}  // namespace

LabelDistribution restricted_mask_distribution(const Eigen::VectorXd& raw_logits,
                                               const VerbalizerLayout& layout) {
    if (layout.size() == 0) throw EmptyVerbalizer("verbalizer layout has no entries");
    if (raw_logits.size() != layout.size()) {
        throw LengthMismatch("got " + std::to_string(raw_logits.size()) + " logits for " +
                             std::to_string(layout.size()) + " verbalizer tokens");
    }

    const Eigen::VectorXd probs = entry_probs(raw_logits);
    Eigen::VectorXd per_label = Eigen::VectorXd::Zero(layout.n_labels);
    for (int y = 0; y < layout.n_labels; ++y) {
        for (const auto& [first, count] : layout.word_spans[static_cast<std::size_t>(y)]) {
            per_label[y] += probs.segment(first, count).mean();
        }
    }
    return LabelDistribution(per_label / per_label.sum());
}

double log_label_mass(const Eigen::VectorXd& raw_logits, const VerbalizerLayout& layout,
                      int label_index) {
    if (layout.size() == 0) throw EmptyVerbalizer("verbalizer layout has no entries");
    const double lse_all = logsumexp(raw_logits);

    // log of sum over the label's words of mean constituent-token probability,
    // computed in log space so any finite logits give a finite loss.
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> word_logs;
    for (const auto& [first, count] : layout.word_spans.at(static_cast<std::size_t>(label_index))) {
        const double lse_word = logsumexp(raw_logits.segment(first, count));
        const double w = lse_word - std::log(static_cast<double>(count)) - lse_all;
        word_logs.push_back(w);
        best = std::max(best, w);
    }
    double acc = 0.0;
    for (double w : word_logs) acc += std::exp(w - best);
    return best + std::log(acc);
}

double prompt_loss(const std::vector<std::pair<WrappedInput, core::Label>>& batch,
                   const std::vector<Eigen::VectorXd>& model_outputs,
                   const VerbalizerLayout& layout) {
    if (batch.empty()) throw EmptyTrainingSet("prompt_loss over an empty batch");
    if (batch.size() != model_outputs.size()) {
        throw LengthMismatch("batch has " + std::to_string(batch.size()) + " examples but " +
                             std::to_string(model_outputs.size()) + " outputs");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        total -= log_label_mass(model_outputs[i], layout, batch[i].second.index);
    }
    return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Template pack files

namespace {

json segment_to_json(const Segment& seg) {
    if (const auto* lit = std::get_if<LiteralSegment>(&seg)) {
        return json{{"literal", lit->text}};
    }
    if (const auto* slot = std::get_if<InstanceSlot>(&seg)) {
        json j{{"slot", slot->field}};
        if (slot->truncation_priority != 0) j["priority"] = slot->truncation_priority;
        if (slot->never_truncate) j["protected"] = true;
        return j;
    }
    if (const auto* soft = std::get_if<SoftSlot>(&seg)) {
        return json{{"soft", soft->slot_index}};
    }
    if (std::holds_alternative<MaskSlot>(seg)) return json("mask");
    return json("description");
}

Segment segment_from_json(const json& j, const std::string& path) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "mask") return MaskSlot{};
        if (s == "description") return DescriptionSlot{};
        throw ParseError(path, 0, "unknown segment marker '" + s + "'");
    }
    if (j.contains("literal")) return LiteralSegment{j.at("literal").get<std::string>()};
    if (j.contains("slot")) {
        InstanceSlot slot;
        slot.field = j.at("slot").get<std::string>();
        slot.truncation_priority = j.value("priority", 0);
        slot.never_truncate = j.value("protected", false);
        return slot;
    }
    if (j.contains("soft")) return SoftSlot{j.at("soft").get<int>()};
    throw ParseError(path, 0, "unrecognized segment: " + j.dump());
}

}  // namespace

TemplatePack load_template_pack(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }

    TemplatePack pack;
    try {
        pack.task = j.at("task").get<std::string>();
        pack.space = core::LabelSpace::of(j.at("labels").get<std::vector<std::string>>());
        pack.verbalizer.space = pack.space;
        pack.verbalizer.words = j.at("verbalizer").get<std::vector<std::vector<std::string>>>();
        for (const json& t : j.at("templates")) {
            PromptTemplate tmpl;
            tmpl.id = t.at("id").get<std::string>();
            const std::string kind = t.at("kind").get<std::string>();
            if (kind == "hard") {
                tmpl.kind = TemplateKind::Hard;
            } else if (kind == "soft") {
                tmpl.kind = TemplateKind::Soft;
            } else {
                throw ParseError(path, 0, "template '" + tmpl.id + "' has kind '" + kind + "'");
            }
            if (t.contains("task_description")) {
                tmpl.task_description = t.at("task_description").get<std::string>();
            }
            for (const json& s : t.at("segments")) {
                tmpl.segments.push_back(segment_from_json(s, path));
            }
            require_valid(tmpl);
            pack.templates.push_back(std::move(tmpl));
        }
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
    if (static_cast<int>(pack.verbalizer.words.size()) != pack.space.size()) {
        throw ParseError(path, 0, "verbalizer covers " +
                                      std::to_string(pack.verbalizer.words.size()) + " of " +
                                      std::to_string(pack.space.size()) + " labels");
    }
    return pack;
}

void save_template_pack(const TemplatePack& pack, const std::string& path) {
    json j;
    j["task"] = pack.task;
    std::vector<std::string> names;
    for (const core::Label& l : pack.space.labels()) names.push_back(l.name);
    j["labels"] = names;
    j["verbalizer"] = pack.verbalizer.words;
    j["templates"] = json::array();
    for (const PromptTemplate& tmpl : pack.templates) {
        json t;
        t["id"] = tmpl.id;
        t["kind"] = tmpl.kind == TemplateKind::Hard ? "hard" : "soft";
        if (tmpl.task_description) t["task_description"] = *tmpl.task_description;
        t["segments"] = json::array();
        for (const Segment& seg : tmpl.segments) t["segments"].push_back(segment_to_json(seg));
        j["templates"].push_back(std::move(t));
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

const PromptTemplate& find_template(const TemplatePack& pack, const std::string& id) {
    for (const PromptTemplate& t : pack.templates) {
        if (t.id == id) return t;
    }
    throw ConfigError("template pack '" + pack.task + "' has no template '" + id + "'");
}

}  // namespace mpt::prompting
