#include "mpt/backend.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "mpt/rng.hpp"

namespace mpt::backend {

void require_valid(const TrainingConfig& cfg) {
    std::vector<std::string> problems;
    if (!(cfg.learning_rate > 0)) problems.push_back("learning_rate must be > 0");
    if (cfg.batch_size <= 0) problems.push_back("batch_size must be > 0");
    if (cfg.epochs <= 0) problems.push_back("epochs must be > 0");
    if (cfg.max_sequence_length <= 0) problems.push_back("max_sequence_length must be > 0");
    if (!problems.empty()) {
        std::string msg = "invalid training config:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw ConfigError(msg);
    }
}

// ---------------------------------------------------------------------------
// Mock vocabulary

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t avalanche(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform in [-1, 1).
double unit_signed(std::uint64_t h) {
    return static_cast<double>(h >> 11) * (1.0 / 4503599627370496.0) - 1.0;
}

bool ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }

// Lowercased subtokens of one whitespace-delimited word: split on '-'/'_',
// strip edge ASCII punctuation, keep non-ASCII bytes untouched.
std::vector<std::string> subtokens(std::string_view word) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        std::size_t b = 0, e = current.size();
        while (b < e && static_cast<unsigned char>(current[b]) < 128 &&
               !ascii_alnum(static_cast<unsigned char>(current[b])))
            ++b;
        while (e > b && static_cast<unsigned char>(current[e - 1]) < 128 &&
               !ascii_alnum(static_cast<unsigned char>(current[e - 1])))
            --e;
        if (e > b) out.push_back(current.substr(b, e - b));
        current.clear();
    };
    for (char ch : word) {
        if (ch == '-' || ch == '_') {
            flush();
            continue;
        }
        unsigned char u = static_cast<unsigned char>(ch);
        current.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : ch);
    }
    flush();
    return out;
}

std::int64_t word_token_id(const std::string& subtoken) {
    std::uint64_t h = fnv1a64(subtoken) & 0x3fffffffffffffffULL;
    if (h < 16) h += 16;  // keep clear of the mask id
    return static_cast<std::int64_t>(h);
}

}  // namespace

MockVocabulary::MockVocabulary(std::vector<std::string> closed_words) : closed_(true) {
    for (const std::string& w : closed_words) {
        for (std::string& s : subtokens(w)) words_.insert(std::move(s));
    }
}

std::vector<std::int64_t> MockVocabulary::token_ids(std::string_view word) const {
    std::vector<std::int64_t> ids;
    for (const std::string& s : subtokens(word)) ids.push_back(word_token_id(s));
    return ids;
}

bool MockVocabulary::contains(std::string_view word) const {
    if (!closed_) return true;
    const auto subs = subtokens(word);
    if (subs.empty()) return false;
    return std::all_of(subs.begin(), subs.end(),
                       [&](const std::string& s) { return words_.count(s) > 0; });
}

// ---------------------------------------------------------------------------
// Count model

namespace {

constexpr double kSmoothing = 1.0;
constexpr double kTrainedNoiseScale = 0.05;

// Bags are sorted so scoring sums accumulate in a canonical order and equal
// token multisets give bit-identical outputs.
std::vector<std::int64_t> content_bag(const prompting::WrappedInput& wrapped) {
    std::vector<std::int64_t> bag;
    bag.reserve(wrapped.token_ids.size());
    for (int i = 0; i < static_cast<int>(wrapped.token_ids.size()); ++i) {
        if (i != wrapped.mask_position) bag.push_back(wrapped.token_ids[i]);
    }
    std::sort(bag.begin(), bag.end());
    return bag;
}

std::vector<std::int64_t> classifier_bag(const core::Instance& instance,
                                         const MockVocabulary& vocab) {
    std::vector<std::int64_t> bag;
    auto add = [&](const std::string& text) {
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j > i) {
                auto ids = vocab.token_ids(std::string_view(text).substr(i, j - i));
                bag.insert(bag.end(), ids.begin(), ids.end());
            }
            i = j;
        }
    };
    add(instance.text);
    for (const auto& [key, value] : instance.aux) add(value);  // std::map: key order
    std::sort(bag.begin(), bag.end());
    return bag;
}

std::shared_ptr<const CountModelState> fit_counts(
    const std::vector<std::vector<std::int64_t>>& bags,
    const std::vector<Eigen::VectorXd>& targets, int n_labels) {
    auto state = std::make_shared<CountModelState>();
    Eigen::VectorXd prior_counts = Eigen::VectorXd::Zero(n_labels);
    Eigen::VectorXd class_token_totals = Eigen::VectorXd::Zero(n_labels);
    std::unordered_map<std::int64_t, Eigen::VectorXd> counts;
    for (std::size_t i = 0; i < bags.size(); ++i) {
        prior_counts += targets[i];
        for (std::int64_t t : bags[i]) {
            auto [it, inserted] = counts.emplace(t, Eigen::VectorXd::Zero(n_labels));
            it->second += targets[i];
            class_token_totals += targets[i];
        }
    }
    const double vocab_size = static_cast<double>(counts.size()) + 1.0;
    state->log_prior =
        ((prior_counts.array() + kSmoothing) /
         (prior_counts.sum() + kSmoothing * static_cast<double>(n_labels)))
            .log();
    state->unseen_log_likelihood =
        (kSmoothing / (class_token_totals.array() + kSmoothing * vocab_size)).log();
    state->token_log_likelihood.reserve(counts.size());
    for (const auto& [token, c] : counts) {
        state->token_log_likelihood.emplace(
            token, ((c.array() + kSmoothing) /
                    (class_token_totals.array() + kSmoothing * vocab_size))
                       .log()
                       .matrix());
    }
    return state;
}

Eigen::VectorXd label_scores(const CountModelState& state,
                             const std::vector<std::int64_t>& bag) {
    Eigen::VectorXd scores = state.log_prior;
    for (std::int64_t t : bag) {
        auto it = state.token_log_likelihood.find(t);
        scores += it == state.token_log_likelihood.end() ? state.unseen_log_likelihood
                                                         : it->second;
    }
    return scores;
}

// Seeded noise over (entry, token bag); the only signal of untrained models
// and a small residual of trained ones.
Eigen::VectorXd noise_logits(const TunedPromptModel& model,
                             const std::vector<std::int64_t>& bag) {
    const std::uint64_t base = hash_mix(fnv1a64(model.tmpl.id), model.seed);
    Eigen::VectorXd out(model.layout.size());
    for (int e = 0; e < model.layout.size(); ++e) {
        const std::uint64_t he = avalanche(base ^ (static_cast<std::uint64_t>(e) + 1));
        double v = unit_signed(avalanche(he ^ 0xb1a5b1a5b1a5b1a5ULL));
        for (std::int64_t t : bag) {
            v += 0.5 * unit_signed(avalanche(he ^ (static_cast<std::uint64_t>(t) + kGolden)));
        }
        out[e] = v;
    }
    return out;
}

double soft_batch_loss(const TunedPromptModel& model,
                       const std::vector<prompting::WrappedInput>& wrapped,
                       const std::vector<Eigen::VectorXd>& targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < wrapped.size(); ++i) {
        const Eigen::VectorXd logits = score_mask(model, wrapped[i]);
        for (int y = 0; y < model.layout.n_labels; ++y) {
            if (targets[i][y] > 0.0) {
                total -= targets[i][y] * prompting::log_label_mass(logits, model.layout, y);
            }
        }
    }
    return total / static_cast<double>(wrapped.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Backend

MockBackend::MockBackend(std::uint64_t seed)
    : seed_(seed), vocab_(std::make_shared<MockVocabulary>()) {}

TunedPromptModel MockBackend::untrained_prompt_model(
    const prompting::PromptTemplate& tmpl,
    std::shared_ptr<const prompting::Verbalizer> verbalizer, int max_sequence_length) const {
    prompting::require_valid(tmpl);
    TunedPromptModel model;
    model.tmpl = tmpl;
    model.verbalizer = verbalizer;
    model.layout = prompting::bind_layout(*verbalizer, *vocab_);
    model.max_sequence_length = max_sequence_length;
    model.seed = seed_;
    model.vocab = vocab_;
    return model;
}

// ---------------------------------------------------------------------------
// Operations

Eigen::VectorXd score_mask(const TunedPromptModel& model, const prompting::WrappedInput& wrapped) {
    if (wrapped.template_id != model.tmpl.id) {
        throw IncompatibleTemplate("input wrapped with '" + wrapped.template_id +
                                   "', model uses '" + model.tmpl.id + "'");
    }
    const auto bag = content_bag(wrapped);
    const Eigen::VectorXd noise = noise_logits(model, bag);
    if (!model.state) return noise;

    const Eigen::VectorXd scores = label_scores(*model.state, bag);
    Eigen::VectorXd out(model.layout.size());
    for (int e = 0; e < model.layout.size(); ++e) {
        out[e] = scores[model.layout.entries[static_cast<std::size_t>(e)].label] +
                 kTrainedNoiseScale * noise[e];
    }
    return out;
}

TunedPromptModel train_prompt(const TunedPromptModel& model, const std::vector<SoftRow>& rows,
                              const TrainingConfig& cfg) {
    require_valid(cfg);
    if (rows.empty()) throw EmptyTrainingSet("train_prompt got an empty training set");
    const int n = model.layout.n_labels;

    std::vector<prompting::WrappedInput> wrapped;
    std::vector<std::vector<std::int64_t>> bags;
    std::vector<Eigen::VectorXd> targets;
    wrapped.reserve(rows.size());
    for (const SoftRow& row : rows) {
        if (row.target.size() != n) {
            throw LengthMismatch("soft target of '" + row.instance.id + "' has " +
                                 std::to_string(row.target.size()) + " entries for " +
                                 std::to_string(n) + " labels");
        }
        if (std::abs(row.target.sum() - 1.0) > 1e-6 || row.target.minCoeff() < 0.0) {
            throw Error("soft target of '" + row.instance.id + "' is not a distribution");
        }
        wrapped.push_back(
            prompting::wrap(model.tmpl, row.instance, cfg.max_sequence_length, *model.vocab));
        bags.push_back(content_bag(wrapped.back()));
        targets.push_back(row.target);
    }

    TunedPromptModel candidate = model;
    candidate.max_sequence_length = cfg.max_sequence_length;
    candidate.state = fit_counts(bags, targets, n);

    // Closed-form fit, then keep whichever model scores the training set
    // better, so the loss never goes up.
    if (soft_batch_loss(candidate, wrapped, targets) <=
        soft_batch_loss(model, wrapped, targets)) {
        return candidate;
    }
    return model;
}

TunedPromptModel train_prompt(const TunedPromptModel& model, const core::Dataset& data,
                              const TrainingConfig& cfg) {
    const int n = model.layout.n_labels;
    std::vector<SoftRow> rows;
    rows.reserve(data.examples.size());
    for (const core::LabeledExample& ex : data.examples) {
        if (ex.label.index < 0 || ex.label.index >= n) {
            throw UnknownLabel("label index " + std::to_string(ex.label.index) +
                               " of '" + ex.instance.id + "' is outside the verbalizer");
        }
        Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(n);
        one_hot[ex.label.index] = 1.0;
        rows.push_back({ex.instance, std::move(one_hot)});
    }
    return train_prompt(model, rows, cfg);
}

StandardClassifier train_classifier(const MockBackend& backend, const std::vector<SoftRow>& rows,
                                    const core::LabelSpace& space, const TrainingConfig& cfg) {
    require_valid(cfg);
    if (rows.empty()) throw EmptyTrainingSet("train_classifier got an empty training set");
    std::vector<std::vector<std::int64_t>> bags;
    std::vector<Eigen::VectorXd> targets;
    bags.reserve(rows.size());
    for (const SoftRow& row : rows) {
        if (row.target.size() != space.size()) {
            throw LengthMismatch("soft target of '" + row.instance.id + "' has " +
                                 std::to_string(row.target.size()) + " entries for " +
                                 std::to_string(space.size()) + " labels");
        }
        if (std::abs(row.target.sum() - 1.0) > 1e-6 || row.target.minCoeff() < 0.0) {
            throw Error("soft target of '" + row.instance.id + "' is not a distribution");
        }
        bags.push_back(classifier_bag(row.instance, *backend.shared_vocabulary()));
        targets.push_back(row.target);
    }
    StandardClassifier clf;
    clf.space = space;
    clf.vocab = backend.shared_vocabulary();
    clf.state = fit_counts(bags, targets, space.size());
    return clf;
}

prompting::LabelDistribution classify(const StandardClassifier& classifier,
                                      const core::Instance& instance) {
    const auto bag = classifier_bag(instance, *classifier.vocab);
    Eigen::VectorXd scores = label_scores(*classifier.state, bag);
    const double m = scores.maxCoeff();
    Eigen::VectorXd e = (scores.array() - m).exp();
    return prompting::LabelDistribution(e / e.sum());
}

prompting::LabelDistribution prompt_distribution(const TunedPromptModel& model,
                                                 const core::Instance& instance,
                                                 const VocabularyProbe& probe) {
    const auto wrapped = prompting::wrap(model.tmpl, instance, model.max_sequence_length, probe);
    return prompting::restricted_mask_distribution(score_mask(model, wrapped), model.layout);
}

double prompt_accuracy(const TunedPromptModel& model, const core::Dataset& data,
                       const VocabularyProbe& probe) {
    if (data.examples.empty()) throw EmptyTrainingSet("accuracy over an empty dataset");
    int hits = 0;
    for (const core::LabeledExample& ex : data.examples) {
        if (prompt_distribution(model, ex.instance, probe).argmax() == ex.label.index) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.examples.size());
}

double classifier_accuracy(const StandardClassifier& classifier, const core::Dataset& data) {
    if (data.examples.empty()) throw EmptyTrainingSet("accuracy over an empty dataset");
    int hits = 0;
    for (const core::LabeledExample& ex : data.examples) {
        if (classify(classifier, ex.instance).argmax() == ex.label.index) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.examples.size());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void append_state(std::string& out, const CountModelState& state) {
    out += "prior";
    for (int y = 0; y < state.log_prior.size(); ++y) out += " " + fmt(state.log_prior[y]);
    out += "\nunseen";
    for (int y = 0; y < state.unseen_log_likelihood.size(); ++y) {
        out += " " + fmt(state.unseen_log_likelihood[y]);
    }
    out += "\n";
    std::map<std::int64_t, const Eigen::VectorXd*> sorted;
    for (const auto& [token, ll] : state.token_log_likelihood) sorted.emplace(token, &ll);
    for (const auto& [token, ll] : sorted) {
        out += "token " + std::to_string(token);
        for (int y = 0; y < ll->size(); ++y) out += " " + fmt((*ll)[y]);
        out += "\n";
    }
}

}  // namespace

std::string serialize_state(const TunedPromptModel& model) {
    std::string out;
    out += "template " + model.tmpl.id + "\n";
    out += "generation " + std::to_string(model.generation) + "\n";
    out += "weight " + fmt(model.weight) + "\n";
    out += "seed " + std::to_string(model.seed) + "\n";
    out += "max_len " + std::to_string(model.max_sequence_length) + "\n";
    out += std::string("trained ") + (model.trained() ? "1" : "0") + "\n";
    if (model.state) append_state(out, *model.state);
    return out;
}

std::string serialize_state(const StandardClassifier& classifier) {
    std::string out = "labels";
    for (const core::Label& l : classifier.space.labels()) out += " " + l.name;
    out += "\n";
    append_state(out, *classifier.state);
    return out;
}

std::uint64_t state_hash(const TunedPromptModel& model) {
    return fnv1a64(serialize_state(model));
}

}  // namespace mpt::backend
