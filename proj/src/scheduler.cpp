#include "mpt/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <unordered_set>

namespace mpt::scheduler {

void require_valid(const MptConfig& cfg) {
    std::vector<std::string> problems;
    if (cfg.templates.size() < 2) {
        problems.push_back("need at least 2 templates, got " +
                           std::to_string(cfg.templates.size()));
    }
    if (!(cfg.subset_fraction > 0.0) || cfg.subset_fraction > 1.0) {
        problems.push_back("lambda must be in (0, 1]");
    }
    if (cfg.growth_factor < 1) problems.push_back("growth factor d must be >= 1");
    if (cfg.generations < 0) problems.push_back("generation count k must be >= 0");
    if (cfg.unlabeled_count <= 0) problems.push_back("unlabeled count must be positive");
    if (!(cfg.distill_temperature > 0.0)) problems.push_back("temperature must be positive");
    std::unordered_set<std::string> ids;
    for (const auto& tmpl : cfg.templates) {
        const auto report = prompting::validate_template(tmpl);
        for (const auto& f : report.findings) problems.push_back(f.code + ": " + f.message);
        if (!ids.insert(tmpl.id).second) problems.push_back("duplicate template id " + tmpl.id);
    }
    if (static_cast<int>(cfg.verbalizer.words.size()) != cfg.verbalizer.space.size()) {
        problems.push_back("verbalizer does not cover the label space");
    }
    try {
        backend::require_valid(cfg.training);
    } catch (const ConfigError& e) {
        problems.push_back(e.what());
    }
    if (!problems.empty()) {
        std::string msg = "invalid run config:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ConfigError(msg);
    }
}

int subset_size(double lambda, int n_templates) {
    if (n_templates < 2) throw ConfigError("subset sampling needs at least 2 templates");
    const double v = lambda * static_cast<double>(n_templates - 1);
    const double floor = std::floor(v);
    const double frac = v - floor;
    double rounded;
    if (frac > 0.5) {
        rounded = floor + 1.0;
    } else if (frac < 0.5) {
        rounded = floor;
    } else {  // exact half: to even
        rounded = std::fmod(floor, 2.0) == 0.0 ? floor : floor + 1.0;
    }
    return std::max(1, static_cast<int>(rounded));
}

std::vector<backend::TunedPromptModel> sample_subset(
    const std::vector<backend::TunedPromptModel>& generation_models, int exclude_index,
    double lambda, Rng& rng) {
    const int n = static_cast<int>(generation_models.size());
    if (n < 2) throw ConfigError("subset sampling needs at least 2 models");
    if (exclude_index < 0 || exclude_index >= n) {
        throw Error("exclude index " + std::to_string(exclude_index) + " out of range");
    }
    std::vector<int> candidates;
    candidates.reserve(static_cast<std::size_t>(n) - 1);
    for (int i = 0; i < n; ++i) {
        if (i != exclude_index) candidates.push_back(i);
    }
    const int want = subset_size(lambda, n);
    // Partial Fisher-Yates over the complement.
    for (int i = 0; i < want; ++i) {
        const auto j = static_cast<std::size_t>(i) +
                       static_cast<std::size_t>(rng.below(candidates.size() -
                                                          static_cast<std::size_t>(i)));
        std::swap(candidates[static_cast<std::size_t>(i)], candidates[j]);
    }
    candidates.resize(static_cast<std::size_t>(want));
    std::sort(candidates.begin(), candidates.end());

    std::vector<backend::TunedPromptModel> subset;
    subset.reserve(candidates.size());
    for (int i : candidates) subset.push_back(generation_models[static_cast<std::size_t>(i)]);
    return subset;
}

namespace {

ModelProvenance provenance_of(const backend::TunedPromptModel& model,
                              const std::vector<std::string>& labelers,
                              const core::Dataset& training_set) {
    ModelProvenance p;
    p.template_id = model.template_id();
    p.generation = model.generation;
    p.weight = model.weight;
    p.labeler_template_ids = labelers;
    p.training_set_size = training_set.size();
    p.training_class_counts = core::class_counts(training_set);
    p.state_hash = backend::state_hash(model);
    return p;
}

}  // namespace

std::vector<backend::TunedPromptModel> train_generation_zero(const MptConfig& cfg,
                                                             const core::Dataset& data,
                                                             const backend::MockBackend& mock) {
    if (data.examples.empty()) throw EmptyTrainingSet("generation 0 needs training data");
    auto verbalizer = std::make_shared<const prompting::Verbalizer>(cfg.verbalizer);
    std::vector<backend::TunedPromptModel> models;
    models.reserve(cfg.templates.size());
    for (const prompting::PromptTemplate& tmpl : cfg.templates) {
        backend::TunedPromptModel untrained = mock.untrained_prompt_model(
            tmpl, verbalizer, cfg.training.max_sequence_length);
        double weight = 1.0;
        if (cfg.omega_mode == OmegaMode::SeedAccuracy) {
            weight = std::max(0.1, backend::prompt_accuracy(untrained, data, mock.vocabulary()));
        }
        backend::TunedPromptModel model = backend::train_prompt(untrained, data, cfg.training);
        model.weight = weight;
        model.generation = 0;
        models.push_back(std::move(model));
    }
    return models;
}

std::vector<backend::TunedPromptModel> run_generation(
    int generation, const std::vector<backend::TunedPromptModel>& prev_models,
    const core::Dataset& data, const core::UnlabeledPool& pool, const MptConfig& cfg,
    const backend::MockBackend& mock, std::vector<ModelProvenance>* provenance,
    RunObserver* observer) {
    if (generation < 1 || generation > cfg.generations) {
        throw Error("generation " + std::to_string(generation) + " outside 1.." +
                    std::to_string(cfg.generations));
    }
    pseudolabel::GrowthSchedule schedule{cfg.growth_factor, core::class_counts(data),
                                         cfg.generations};
    const core::CountVector targets = pseudolabel::growth_targets(schedule, generation);
    auto verbalizer = std::make_shared<const prompting::Verbalizer>(cfg.verbalizer);

    // Each template's retraining is independent of the others; the subset
    // generator is sub-seeded per (generation, template), so running them
    // concurrently changes nothing. Snapshots and provenance are emitted in
    // template order afterwards.
    struct TemplateResult {
        backend::TunedPromptModel model;
        std::vector<pseudolabel::ScoredPseudoExample> selected;
        std::vector<std::string> labelers;
        core::CountVector class_counts;
        std::size_t training_set_size = 0;
    };
    auto retrain = [&](int i) {
        Rng rng(derive_seed(cfg.seed, "subset", static_cast<std::uint64_t>(generation),
                            static_cast<std::uint64_t>(i)));
        const auto subset = sample_subset(prev_models, i, cfg.subset_fraction, rng);
        auto scored = pseudolabel::label_pool(subset, pool, mock.vocabulary());
        auto selected =
            pseudolabel::select_per_class(data.space, scored, targets, schedule.base_counts);
        const core::Dataset training_set = pseudolabel::assemble_training_set(data, selected);

        TemplateResult result{
            backend::train_prompt(
                mock.untrained_prompt_model(prev_models[static_cast<std::size_t>(i)].tmpl,
                                            verbalizer, cfg.training.max_sequence_length),
                training_set, cfg.training),
            std::move(selected),
            {},
            core::class_counts(training_set),
            training_set.size()};
        result.model.weight = prev_models[static_cast<std::size_t>(i)].weight;
        result.model.generation = generation;
        for (const auto& m : subset) result.labelers.push_back(m.template_id());
        return result;
    };

    std::vector<std::future<TemplateResult>> futures;
    futures.reserve(prev_models.size());
    for (int i = 0; i < static_cast<int>(prev_models.size()); ++i) {
        futures.push_back(std::async(std::launch::async, retrain, i));
    }

    std::vector<backend::TunedPromptModel> next;
    next.reserve(prev_models.size());
    for (auto& future : futures) {
        TemplateResult result = future.get();
        if (observer) {
            observer->on_snapshot(generation, result.model.template_id(), result.selected);
        }
        if (provenance) {
            ModelProvenance p;
            p.template_id = result.model.template_id();
            p.generation = generation;
            p.weight = result.model.weight;
            p.labeler_template_ids = std::move(result.labelers);
            p.training_set_size = result.training_set_size;
            p.training_class_counts = std::move(result.class_counts);
            p.state_hash = backend::state_hash(result.model);
            provenance->push_back(std::move(p));
        }
        next.push_back(std::move(result.model));
    }
    return next;
}

std::vector<backend::SoftRow> build_distillation_set(
    const std::vector<backend::TunedPromptModel>& last_generation, const core::Dataset& data,
    const core::UnlabeledPool& pool, const backend::VocabularyProbe& probe, double temperature) {
    if (last_generation.empty()) throw EmptyEnsemble("distillation needs at least one model");
    const int n_labels = data.space.size();

    std::vector<backend::SoftRow> rows;
    rows.reserve(data.size() + pool.size());
    for (const core::LabeledExample& ex : data.examples) {
        Eigen::VectorXd one_hot = Eigen::VectorXd::Zero(n_labels);
        one_hot[ex.label.index] = 1.0;
        rows.push_back({ex.instance, std::move(one_hot)});
    }

    std::vector<const core::Instance*> ordered;
    ordered.reserve(pool.instances.size());
    for (const core::Instance& inst : pool.instances) ordered.push_back(&inst);
    std::sort(ordered.begin(), ordered.end(),
              [](const core::Instance* a, const core::Instance* b) { return a->id < b->id; });
    for (const core::Instance* inst : ordered) {
        Eigen::VectorXd target =
            pseudolabel::aggregate(last_generation, *inst, probe).probs();
        if (temperature != 1.0) {
            target = target.array().pow(1.0 / temperature);
            target /= target.sum();
        }
        rows.push_back({*inst, std::move(target)});
    }
    return rows;
}

namespace {

evaluation::EvalReport evaluate_classifier(const backend::StandardClassifier& classifier,
                                           const core::Dataset& test) {
    std::vector<core::Label> predictions;
    std::vector<core::Label> gold;
    predictions.reserve(test.size());
    gold.reserve(test.size());
    for (const core::LabeledExample& ex : test.examples) {
        const int y = backend::classify(classifier, ex.instance).argmax();
        predictions.push_back(test.space.at(y));
        gold.push_back(ex.label);
    }
    return evaluation::evaluate(predictions, gold, test.space);
}

void check_disjoint(const core::Dataset& data, const core::UnlabeledPool& pool,
                    const core::Dataset& test) {
    std::unordered_set<std::string> pool_ids;
    for (const auto& inst : pool.instances) {
        if (!pool_ids.insert(inst.id).second) {
            throw ConfigError("pool id '" + inst.id + "' is not unique");
        }
    }
    std::unordered_set<std::string> ids;
    for (const auto& ex : data.examples) ids.insert(ex.instance.id);
    for (const auto& inst : pool.instances) {
        if (ids.count(inst.id)) {
            throw ConfigError("pool instance '" + inst.id + "' is also in the training set");
        }
    }
    std::unordered_set<std::string> test_ids;
    for (const auto& ex : test.examples) test_ids.insert(ex.instance.id);
    for (const auto& inst : pool.instances) {
        if (test_ids.count(inst.id)) {
            throw ConfigError("pool instance '" + inst.id + "' is also in the test set");
        }
    }
    for (const auto& ex : data.examples) {
        if (test_ids.count(ex.instance.id)) {
            throw ConfigError("training instance '" + ex.instance.id + "' is also in the test set");
        }
    }
}

}  // namespace

RunResult run(const MptConfig& cfg, const core::Dataset& data, const core::UnlabeledPool& pool,
              const core::Dataset& test, RunObserver* observer) {
    require_valid(cfg);
    if (data.examples.empty()) throw EmptyTrainingSet("run needs labeled data");
    if (pool.instances.empty()) throw Error("run needs a non-empty unlabeled pool");
    check_disjoint(data, pool, test);

    backend::MockBackend mock(cfg.seed);
    RunResult result;

    // Growth past the pool size forces duplicate pseudo-examples; flag it.
    double final_size = static_cast<double>(data.size());
    for (int j = 0; j < cfg.generations; ++j) final_size *= cfg.growth_factor;
    if (final_size > static_cast<double>(pool.size() + data.size())) {
        const std::string warning =
            "growth d^k*|D| = " + std::to_string(static_cast<long long>(final_size)) +
            " exceeds |pool|+|D| = " + std::to_string(pool.size() + data.size()) +
            "; expect duplicate-flagged pseudo examples";
        result.warnings.push_back(warning);
        if (observer) observer->on_warning(warning);
    }

    std::vector<backend::TunedPromptModel> models = train_generation_zero(cfg, data, mock);
    {
        std::vector<ModelProvenance> gen0;
        for (const auto& m : models) gen0.push_back(provenance_of(m, {}, data));
        if (observer) observer->on_generation(0, models, gen0);
        result.provenance.push_back(std::move(gen0));
        result.generations.push_back(models);
    }

    for (int j = 1; j <= cfg.generations; ++j) {
        std::vector<ModelProvenance> provenance;
        models = run_generation(j, models, data, pool, cfg, mock, &provenance, observer);
        if (observer) observer->on_generation(j, models, provenance);
        result.provenance.push_back(std::move(provenance));
        result.generations.push_back(models);
    }

    const auto distillation = build_distillation_set(models, data, pool, mock.vocabulary(),
                                                     cfg.distill_temperature);
    result.classifier =
        backend::train_classifier(mock, distillation, data.space, cfg.training);
    result.test_report = evaluate_classifier(result.classifier, test);
    return result;
}

std::vector<BaselineResult> run_prompt_baseline(const MptConfig& cfg, const core::Dataset& data,
                                                const core::Dataset& test) {
    require_valid(cfg);
    backend::MockBackend mock(cfg.seed);
    auto verbalizer = std::make_shared<const prompting::Verbalizer>(cfg.verbalizer);

    std::vector<BaselineResult> results;
    for (const prompting::PromptTemplate& tmpl : cfg.templates) {
        backend::TunedPromptModel model = backend::train_prompt(
            mock.untrained_prompt_model(tmpl, verbalizer, cfg.training.max_sequence_length),
            data, cfg.training);
        std::vector<core::Label> predictions;
        std::vector<core::Label> gold;
        for (const core::LabeledExample& ex : test.examples) {
            const int y =
                backend::prompt_distribution(model, ex.instance, mock.vocabulary()).argmax();
            predictions.push_back(test.space.at(y));
            gold.push_back(ex.label);
        }
        results.push_back({tmpl.id, evaluation::evaluate(predictions, gold, test.space)});
    }
    return results;
}

}  // namespace mpt::scheduler
