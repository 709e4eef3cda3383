#include "mpt/pseudolabel.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <unordered_set>

namespace mpt::pseudolabel {

void require_valid(const GrowthSchedule& schedule) {
    if (schedule.factor < 1) {
        throw ConfigError("growth factor must be >= 1, got " + std::to_string(schedule.factor));
    }
    if (schedule.generations < 0) {
        throw ConfigError("generation count must be >= 0");
    }
    if (schedule.base_counts.size() == 0 || schedule.base_counts.minCoeff() < 1) {
        throw ConfigError("every class needs a base count >= 1");
    }
}

prompting::LabelDistribution weighted_mean(const std::vector<double>& weights,
                                           const std::vector<Eigen::VectorXd>& distributions) {
    if (weights.empty()) throw EmptyEnsemble("weighted mean over an empty list");
    if (weights.size() != distributions.size()) {
        throw LengthMismatch(std::to_string(weights.size()) + " weights for " +
                             std::to_string(distributions.size()) + " distributions");
    }
    double z = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw Error("ensemble weights must be positive");
        z += w;
    }
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(distributions.front().size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += (weights[i] / z) * distributions[i];
    }
    return prompting::LabelDistribution(std::move(acc));
}

prompting::LabelDistribution aggregate(const std::vector<backend::TunedPromptModel>& models,
                                       const core::Instance& instance,
                                       const backend::VocabularyProbe& probe) {
    if (models.empty()) throw EmptyEnsemble("aggregate over an empty model list");
    std::vector<const backend::TunedPromptModel*> ordered;
    ordered.reserve(models.size());
    for (const auto& m : models) ordered.push_back(&m);
    std::sort(ordered.begin(), ordered.end(),
              [](const backend::TunedPromptModel* a, const backend::TunedPromptModel* b) {
                  return a->template_id() < b->template_id();
              });
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> distributions;
    weights.reserve(models.size());
    for (const backend::TunedPromptModel* model : ordered) {
        weights.push_back(model->weight);
        distributions.push_back(backend::prompt_distribution(*model, instance, probe).probs());
    }
    return weighted_mean(weights, distributions);
}

std::vector<ScoredPseudoExample> label_pool(const std::vector<backend::TunedPromptModel>& models,
                                            const core::UnlabeledPool& pool,
                                            const backend::VocabularyProbe& probe) {
    if (pool.instances.empty()) throw Error("label_pool over an empty pool");
    if (models.empty()) throw EmptyEnsemble("label_pool with an empty model list");

    std::vector<const core::Instance*> ordered;
    ordered.reserve(pool.instances.size());
    for (const core::Instance& inst : pool.instances) ordered.push_back(&inst);
    std::sort(ordered.begin(), ordered.end(),
              [](const core::Instance* a, const core::Instance* b) { return a->id < b->id; });

    const core::LabelSpace& space = models.front().verbalizer->space;
    std::vector<ScoredPseudoExample> out;
    out.reserve(ordered.size());
    for (const core::Instance* inst : ordered) {
        auto dist = aggregate(models, *inst, probe);
        const int y = dist.argmax();
        const double score = dist[y];
        out.push_back({*inst, std::move(dist), space.at(y), score, std::nullopt, false});
    }
    return out;
}

core::CountVector growth_targets(const GrowthSchedule& schedule, int generation) {
    require_valid(schedule);
    if (generation < 0 || generation > schedule.generations) {
        throw Error("generation " + std::to_string(generation) + " outside 0.." +
                    std::to_string(schedule.generations));
    }
    std::int64_t multiplier = 1;
    for (int i = 0; i < generation; ++i) {
        if (multiplier > std::numeric_limits<std::int64_t>::max() / schedule.factor) {
            throw Error("growth multiplier overflows at generation " + std::to_string(generation));
        }
        multiplier *= schedule.factor;
    }
    core::CountVector targets = schedule.base_counts;
    for (int y = 0; y < targets.size(); ++y) {
        if (targets[y] > std::numeric_limits<std::int64_t>::max() / multiplier) {
            throw Error("growth target overflows at generation " + std::to_string(generation));
        }
        targets[y] *= multiplier;
    }
    return targets;
}

std::vector<ScoredPseudoExample> select_per_class(const core::LabelSpace& space,
                                                  const std::vector<ScoredPseudoExample>& scored,
                                                  const core::CountVector& targets,
                                                  const core::CountVector& base) {
    if (targets.size() != base.size() || targets.size() != space.size()) {
        throw LengthMismatch("targets cover " + std::to_string(targets.size()) +
                             " classes, base covers " + std::to_string(base.size()) +
                             ", space has " + std::to_string(space.size()));
    }
    const int n_labels = static_cast<int>(targets.size());
    std::vector<bool> claimed(scored.size(), false);
    std::int64_t unclaimed = static_cast<std::int64_t>(scored.size());
    std::vector<ScoredPseudoExample> out;

    for (int y = 0; y < n_labels; ++y) {
        const std::int64_t need_total = targets[y] - base[y];
        if (need_total < 0) {
            throw Error("target below base count for class index " + std::to_string(y));
        }
        if (need_total == 0) continue;
        std::int64_t need = need_total;
        std::vector<std::size_t> taken_for_class;  // indices into out

        // Every later class that still needs entries must keep at least one
        // claimable instance, or exhausting the pool here would make it
        // unfillable; it can finish through duplication, this class included.
        std::int64_t reserve = 0;
        for (int later = y + 1; later < n_labels; ++later) {
            if (targets[later] - base[later] > 0) ++reserve;
        }

        // Primary: unclaimed entries whose argmax is this class, best first.
        std::vector<std::size_t> primary;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (!claimed[i] && scored[i].argmax_label.index == y) primary.push_back(i);
        }
        std::sort(primary.begin(), primary.end(), [&](std::size_t a, std::size_t b) {
            if (scored[a].score != scored[b].score) return scored[a].score > scored[b].score;
            return scored[a].instance.id < scored[b].instance.id;
        });
        for (std::size_t i : primary) {
            if (need == 0 || unclaimed <= reserve) break;
            claimed[i] = true;
            --unclaimed;
            taken_for_class.push_back(out.size());
            out.push_back(scored[i]);
            --need;
        }

        // Fallback: any unclaimed entry, ranked by its probability of this
        // class; the argmax is overridden and recorded.
        if (need > 0) {
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < scored.size(); ++i) {
                if (!claimed[i]) rest.push_back(i);
            }
            std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
                const double pa = scored[a].distribution[y];
                const double pb = scored[b].distribution[y];
                if (pa != pb) return pa > pb;
                return scored[a].instance.id < scored[b].instance.id;
            });
            for (std::size_t i : rest) {
                if (need == 0 || unclaimed <= reserve) break;
                claimed[i] = true;
                --unclaimed;
                ScoredPseudoExample entry = scored[i];
                entry.override_label = space.at(y);
                taken_for_class.push_back(out.size());
                out.push_back(std::move(entry));
                --need;
            }
        }

        if (need > 0 && taken_for_class.empty()) {
            throw ClassUnfillable("class index " + std::to_string(y) +
                                  " has no candidates in the scored pool");
        }

        // Still short: duplicate this class's own picks cyclically, best first.
        const std::size_t cycle = taken_for_class.size();
        for (std::int64_t k = 0; need > 0; ++k, --need) {
            ScoredPseudoExample copy = out[taken_for_class[static_cast<std::size_t>(k) % cycle]];
            copy.duplicate = true;
            out.push_back(std::move(copy));
        }
    }
    return out;
}

core::Dataset assemble_training_set(const core::Dataset& initial,
                                    const std::vector<ScoredPseudoExample>& selected) {
    core::Dataset out = initial;
    out.examples.reserve(initial.examples.size() + selected.size());
    std::unordered_map<std::string, int> dup_counts;
    for (const ScoredPseudoExample& s : selected) {
        core::Label label = s.assigned_label();
        if (label.index < 0 || label.index >= out.space.size()) {
            throw UnknownLabel("pseudo label index " + std::to_string(label.index) +
                               " outside the label space");
        }
        label.name = out.space.at(label.index).name;
        core::Instance inst = s.instance;
        if (s.duplicate) {
            inst.id += "#dup" + std::to_string(++dup_counts[s.instance.id]);
        }
        out.examples.push_back({std::move(inst), std::move(label)});
    }
    return out;
}

}  // namespace mpt::pseudolabel
