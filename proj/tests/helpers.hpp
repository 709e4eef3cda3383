#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "mpt/core.hpp"
#include "mpt/pseudolabel.hpp"
#include "mpt/prompting.hpp"
#include "mpt/rng.hpp"

namespace testutil {

inline mpt::core::LabelSpace space3() {
    return mpt::core::LabelSpace::of({"A", "B", "C"});
}

inline mpt::core::Dataset make_dataset(const mpt::core::LabelSpace& space,
                                       const std::vector<std::pair<std::string, int>>& rows) {
    mpt::core::Dataset d;
    d.space = space;
    for (const auto& [text, label] : rows) {
        mpt::core::Instance inst;
        inst.id = "ex-" + std::to_string(d.examples.size());
        inst.text = text;
        d.examples.push_back({std::move(inst), space.at(label)});
    }
    return d;
}

inline Eigen::VectorXd random_simplex(mpt::Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.unit() + 1e-9;
    return v / v.sum();
}

// Scored pool entries with consistent argmax/score fields.
inline std::vector<mpt::pseudolabel::ScoredPseudoExample> random_scored_pool(
    mpt::Rng& rng, const mpt::core::LabelSpace& space, int count) {
    std::vector<mpt::pseudolabel::ScoredPseudoExample> out;
    for (int i = 0; i < count; ++i) {
        mpt::core::Instance inst;
        inst.id = "p" + std::to_string(1000 + i);
        inst.text = "pool text " + std::to_string(i);
        mpt::prompting::LabelDistribution dist(random_simplex(rng, space.size()));
        const int y = dist.argmax();
        const double score = dist[y];
        out.push_back({std::move(inst), std::move(dist), space.at(y), score, std::nullopt, false});
    }
    return out;
}

// Literal restatement of the per-class selection rule, kept independent of
// the library implementation: sort-and-slice primaries, probability-ranked
// fallback with override, cyclic duplication. A class stops claiming when
// the unclaimed count falls to the number of later classes that still need
// entries (each of those must keep one claimable instance).
inline std::vector<mpt::pseudolabel::ScoredPseudoExample> oracle_select(
    const mpt::core::LabelSpace& space,
    const std::vector<mpt::pseudolabel::ScoredPseudoExample>& scored,
    const mpt::core::CountVector& targets, const mpt::core::CountVector& base) {
    using mpt::pseudolabel::ScoredPseudoExample;
    std::vector<bool> used(scored.size(), false);
    long unclaimed = static_cast<long>(scored.size());
    std::vector<ScoredPseudoExample> result;
    for (int y = 0; y < space.size(); ++y) {
        long need = targets[y] - base[y];
        if (need <= 0) continue;
        long reserve = 0;
        for (int later = y + 1; later < space.size(); ++later) {
            if (targets[later] - base[later] > 0) ++reserve;
        }
        std::vector<ScoredPseudoExample> mine;

        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            if (!used[i] && scored[i].argmax_label.index == y) order.push_back(i);
        }
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scored[a].score != scored[b].score) return scored[a].score > scored[b].score;
            return scored[a].instance.id < scored[b].instance.id;
        });
        for (std::size_t i : order) {
            if (need == 0 || unclaimed <= reserve) break;
            used[i] = true;
            --unclaimed;
            mine.push_back(scored[i]);
            --need;
        }
        if (need > 0) {
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < scored.size(); ++i) {
                if (!used[i]) rest.push_back(i);
            }
            std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
                if (scored[a].distribution[y] != scored[b].distribution[y]) {
                    return scored[a].distribution[y] > scored[b].distribution[y];
                }
                return scored[a].instance.id < scored[b].instance.id;
            });
            for (std::size_t i : rest) {
                if (need == 0 || unclaimed <= reserve) break;
                used[i] = true;
                --unclaimed;
                ScoredPseudoExample e = scored[i];
                e.override_label = space.at(y);
                mine.push_back(e);
                --need;
            }
        }
        if (need > 0 && mine.empty()) throw mpt::ClassUnfillable("oracle: class unfillable");
        const std::size_t cycle = mine.size();
        for (long k = 0; need > 0; ++k, --need) {
            ScoredPseudoExample copy = mine[static_cast<std::size_t>(k) % cycle];
            copy.duplicate = true;
            mine.push_back(copy);
        }
        for (auto& e : mine) result.push_back(std::move(e));
    }
    return result;
}

inline bool same_selection(const std::vector<mpt::pseudolabel::ScoredPseudoExample>& a,
                           const std::vector<mpt::pseudolabel::ScoredPseudoExample>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].instance.id != b[i].instance.id) return false;
        if (a[i].duplicate != b[i].duplicate) return false;
        if (a[i].override_label.has_value() != b[i].override_label.has_value()) return false;
        if (a[i].override_label &&
            a[i].override_label->index != b[i].override_label->index) {
            return false;
        }
        if (a[i].assigned_label().index != b[i].assigned_label().index) return false;
    }
    return true;
}

}  // namespace testutil
