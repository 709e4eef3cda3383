#include "mpt/sampling.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <unordered_map>

#include "mpt/rng.hpp"

namespace mpt::sampling {

using nlohmann::json;

namespace {

// Per-class example indices, each list sorted by instance id so sampling is a
// pure function of (source ids, parameters, seed), not of file order.
std::vector<std::vector<std::size_t>> by_class_sorted(const core::Dataset& source) {
    std::vector<std::vector<std::size_t>> groups(
        static_cast<std::size_t>(source.space.size()));
    for (std::size_t i = 0; i < source.examples.size(); ++i) {
        const int label = source.examples[i].label.index;
        if (label < 0 || label >= source.space.size()) {
            throw UnknownLabel("example '" + source.examples[i].instance.id +
                               "' has label index " + std::to_string(label) +
                               " outside the space");
        }
        groups[static_cast<std::size_t>(label)].push_back(i);
    }
    for (auto& g : groups) {
        std::sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
            return source.examples[a].instance.id < source.examples[b].instance.id;
        });
    }
    return groups;
}

}  // namespace

SampledSplit balanced_kshot(const core::Dataset& source, int k, std::uint64_t seed,
                            bool with_validation) {
    if (k <= 0) throw ConfigError("K must be positive, got " + std::to_string(k));
    SampledSplit split;
    split.train.space = source.space;
    split.validation.space = source.space;

    const int per_class = with_validation ? 2 * k : k;
    auto groups = by_class_sorted(source);
    for (int y = 0; y < source.space.size(); ++y) {
        auto& group = groups[static_cast<std::size_t>(y)];
        const int have = static_cast<int>(group.size());
        if (have < per_class) {
            throw InsufficientClass("class '" + source.space.at(y).name + "' has " +
                                    std::to_string(have) + " examples, needs " +
                                    std::to_string(per_class) + " (short by " +
                                    std::to_string(per_class - have) + ")");
        }
        Rng rng(derive_seed(seed, "balanced", static_cast<std::uint64_t>(y)));
        rng.shuffle(group);
        for (int i = 0; i < k; ++i) split.train.examples.push_back(source.examples[group[i]]);
        if (with_validation) {
            for (int i = k; i < 2 * k; ++i) {
                split.validation.examples.push_back(source.examples[group[i]]);
            }
        }
    }
    return split;
}

core::CountVector apportion(const core::CountVector& class_sizes, std::int64_t total) {
    const std::int64_t n = class_sizes.sum();
    if (n <= 0) throw Error("cannot apportion over an empty source");
    const int classes = static_cast<int>(class_sizes.size());
    core::CountVector counts(classes);
    std::vector<std::pair<double, int>> remainders;  // (fraction, class)
    std::int64_t assigned = 0;
    for (int y = 0; y < classes; ++y) {
        const double quota = static_cast<double>(total) * static_cast<double>(class_sizes[y]) /
                             static_cast<double>(n);
        counts[y] = static_cast<std::int64_t>(quota);
        assigned += counts[y];
        remainders.emplace_back(quota - static_cast<double>(counts[y]), y);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::int64_t i = 0; i < total - assigned; ++i) {
        counts[remainders[static_cast<std::size_t>(i)].second] += 1;
    }
    return counts;
}

SampledSplit proportional_sample(const core::Dataset& source, int total, std::uint64_t seed,
                                 bool hard_zero_quota, bool with_validation) {
    if (total <= 0) throw ConfigError("total must be positive");
    const std::size_t copies = with_validation ? 2 : 1;
    if (static_cast<std::size_t>(total) * copies > source.examples.size()) {
        throw InsufficientClass("total " + std::to_string(total) +
                                (with_validation ? " exceeds half the source size of "
                                                 : " exceeds the source size of ") +
                                std::to_string(source.examples.size()));
    }
    SampledSplit split;
    split.train.space = source.space;
    split.validation.space = source.space;

    const core::CountVector sizes = core::class_counts(source);
    const core::CountVector counts = apportion(sizes, total);

    auto groups = by_class_sorted(source);
    for (int y = 0; y < source.space.size(); ++y) {
        const std::int64_t want = counts[y];
        if (want == 0) {
            if (sizes[y] > 0) {
                const std::string msg = "class '" + source.space.at(y).name +
                                        "' has a zero quota at total " + std::to_string(total);
                if (hard_zero_quota) throw InsufficientClass(msg);
                split.warnings.push_back(msg);
            }
            continue;
        }
        auto& group = groups[static_cast<std::size_t>(y)];
        const std::int64_t per_class = with_validation ? 2 * want : want;
        if (static_cast<std::int64_t>(group.size()) < per_class) {
            throw InsufficientClass("class '" + source.space.at(y).name + "' has " +
                                    std::to_string(group.size()) + " examples, needs " +
                                    std::to_string(per_class));
        }
        Rng rng(derive_seed(seed, "proportional", static_cast<std::uint64_t>(y)));
        rng.shuffle(group);
        for (std::int64_t i = 0; i < want; ++i) {
            split.train.examples.push_back(source.examples[group[static_cast<std::size_t>(i)]]);
        }
        if (with_validation) {
            for (std::int64_t i = want; i < 2 * want; ++i) {
                split.validation.examples.push_back(
                    source.examples[group[static_cast<std::size_t>(i)]]);
            }
        }
    }
    return split;
}

SampledSplit sample(const core::Dataset& source, const SamplePlan& plan) {
    if (plan.mode == SampleMode::BalancedK) {
        return balanced_kshot(source, plan.k, plan.seed, plan.validation_equal_size);
    }
    const int total = plan.total > 0 ? plan.total : plan.k * source.space.size();
    return proportional_sample(source, total, plan.seed, false, plan.validation_equal_size);
}

core::UnlabeledPool sample_pool(const std::vector<core::Instance>& source, int n,
                                const std::unordered_set<std::string>& exclude_ids,
                                std::uint64_t seed) {
    std::vector<const core::Instance*> available;
    available.reserve(source.size());
    for (const core::Instance& inst : source) {
        if (!exclude_ids.count(inst.id)) available.push_back(&inst);
    }
    if (static_cast<int>(available.size()) < n) {
        throw PoolTooSmall("need " + std::to_string(n) + " instances, only " +
                           std::to_string(available.size()) + " outside the exclusions");
    }
    std::sort(available.begin(), available.end(),
              [](const core::Instance* a, const core::Instance* b) { return a->id < b->id; });
    Rng rng(derive_seed(seed, "pool"));
    rng.shuffle(available);
    available.resize(static_cast<std::size_t>(n));
    std::sort(available.begin(), available.end(),
              [](const core::Instance* a, const core::Instance* b) { return a->id < b->id; });

    core::UnlabeledPool pool;
    pool.instances.reserve(available.size());
    for (const core::Instance* inst : available) pool.instances.push_back(*inst);
    return pool;
}

// ---------------------------------------------------------------------------
// Split records

SplitRecord to_record(const SamplePlan& plan, const SampledSplit& split) {
    SplitRecord record;
    record.plan = plan;
    for (const auto& ex : split.train.examples) record.train_ids.push_back(ex.instance.id);
    for (const auto& ex : split.validation.examples) {
        record.validation_ids.push_back(ex.instance.id);
    }
    return record;
}

void save_split(const SplitRecord& record, const std::string& path) {
    json j;
    j["mode"] = record.plan.mode == SampleMode::BalancedK ? "balanced" : "proportional";
    j["k"] = record.plan.k;
    j["total"] = record.plan.total;
    j["seed"] = record.plan.seed;
    j["train_ids"] = record.train_ids;
    j["validation_ids"] = record.validation_ids;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

SplitRecord load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    json j;
    try {
        in >> j;
        SplitRecord record;
        const std::string mode = j.at("mode").get<std::string>();
        if (mode == "balanced") {
            record.plan.mode = SampleMode::BalancedK;
        } else if (mode == "proportional") {
            record.plan.mode = SampleMode::Proportional;
        } else {
            throw ParseError(path, 0, "unknown split mode '" + mode + "'");
        }
        record.plan.k = j.value("k", 0);
        record.plan.total = j.value("total", 0);
        record.plan.seed = j.at("seed").get<std::uint64_t>();
        record.train_ids = j.at("train_ids").get<std::vector<std::string>>();
        record.validation_ids = j.at("validation_ids").get<std::vector<std::string>>();
        return record;
    } catch (const json::exception& e) {
        throw ParseError(path, 0, e.what());
    }
}

SampledSplit apply_split(const core::Dataset& source, const SplitRecord& record) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < source.examples.size(); ++i) {
        index.emplace(source.examples[i].instance.id, i);
    }
    auto build = [&](const std::vector<std::string>& ids) {
        core::Dataset out;
        out.space = source.space;
        for (const std::string& id : ids) {
            auto it = index.find(id);
            if (it == index.end()) {
                throw Error("split references id '" + id + "' absent from the source");
            }
            out.examples.push_back(source.examples[it->second]);
        }
        return out;
    };
    SampledSplit split;
    split.train = build(record.train_ids);
    split.validation = build(record.validation_ids);
    return split;
}

}  // namespace mpt::sampling
