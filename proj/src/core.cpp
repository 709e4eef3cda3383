#include "mpt/core.hpp"

#include <unordered_map>
#include <unordered_set>

namespace mpt::core {

LabelSpace LabelSpace::of(const std::vector<std::string>& names) {
    if (names.size() < 2) {
        throw ConfigError("label space needs at least 2 labels, got " +
                          std::to_string(names.size()));
    }
    std::unordered_set<std::string> seen;
    LabelSpace space;
    space.labels_.reserve(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].empty()) {
            throw ConfigError("label name at index " + std::to_string(i) + " is empty");
        }
        if (!seen.insert(names[i]).second) {
            throw ConfigError("duplicate label name: " + names[i]);
        }
        space.labels_.push_back(Label{static_cast<int>(i), names[i]});
    }
    return space;
}

std::optional<Label> LabelSpace::find(const std::string& name) const {
    for (const Label& l : labels_) {
        if (l.name == name) return l;
    }
    return std::nullopt;
}

const std::string& Instance::field(const std::string& name) const {
    if (name == "text") return text;
    auto it = aux.find(name);
    if (it == aux.end()) {
        throw MissingField("instance '" + id + "' has no field '" + name + "'");
    }
    return it->second;
}

ValidationReport validate_dataset(const Dataset& dataset) {
    ValidationReport report;
    auto add = [&](std::string code, std::string message) {
        report.findings.push_back({std::move(code), std::move(message)});
    };

    if (dataset.space.size() < 2) {
        add("label-space-too-small",
            "label space has " + std::to_string(dataset.space.size()) + " labels, needs >= 2");
    }

    std::unordered_map<std::string, std::size_t> first_seen;
    for (std::size_t i = 0; i < dataset.examples.size(); ++i) {
        const LabeledExample& ex = dataset.examples[i];
        if (ex.instance.id.empty()) {
            add("empty-id", "example #" + std::to_string(i) + " has an empty id");
        }
        if (ex.instance.text.empty()) {
            add("empty-text", "example '" + ex.instance.id + "' has empty text");
        }
        auto [it, inserted] = first_seen.emplace(ex.instance.id, i);
        if (!inserted) {
            add("duplicate-id", "id '" + ex.instance.id + "' appears at #" +
                                    std::to_string(it->second) + " and #" + std::to_string(i));
        }
        const int idx = ex.label.index;
        if (idx < 0 || idx >= dataset.space.size()) {
            add("label-out-of-space", "example '" + ex.instance.id + "' has label index " +
                                          std::to_string(idx) + " outside 0.." +
                                          std::to_string(dataset.space.size() - 1));
        } else if (dataset.space.at(idx).name != ex.label.name) {
            add("label-name-mismatch", "example '" + ex.instance.id + "' names label " +
                                           std::to_string(idx) + " '" + ex.label.name +
                                           "' but the space calls it '" +
                                           dataset.space.at(idx).name + "'");
        }
    }
    return report;
}

CountVector class_counts(const Dataset& dataset) {
    CountVector counts = CountVector::Zero(dataset.space.size());
    for (const LabeledExample& ex : dataset.examples) {
        if (ex.label.index < 0 || ex.label.index >= dataset.space.size()) {
            throw UnknownLabel("example '" + ex.instance.id + "' has label index " +
                               std::to_string(ex.label.index) + " outside the space");
        }
        counts[ex.label.index] += 1;
    }
    return counts;
}

}  // namespace mpt::core
