#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpt/errors.hpp"

namespace mpt::core {

using CountVector = Eigen::Vector<std::int64_t, Eigen::Dynamic>;

struct Label {
    int index = 0;
    std::string name;

    friend bool operator==(const Label&, const Label&) = default;
};

// Ordered label set; indices are 0..n-1 in declaration order.
class LabelSpace {
  public:
    LabelSpace() = default;
    static LabelSpace of(const std::vector<std::string>& names);

    int size() const { return static_cast<int>(labels_.size()); }
    const Label& at(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
    const std::vector<Label>& labels() const { return labels_; }
    std::optional<Label> find(const std::string& name) const;

    friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

  private:
    std::vector<Label> labels_;
};

struct Instance {
    std::string id;
    std::string text;
    std::map<std::string, std::string> aux;  // named fields, e.g. title/abstract

    const std::string& field(const std::string& name) const;
};

struct LabeledExample {
    Instance instance;
    Label label;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    LabelSpace space;

    std::size_t size() const { return examples.size(); }
};

struct UnlabeledPool {
    std::vector<Instance> instances;

    std::size_t size() const { return instances.size(); }
};

struct Finding {
    std::string code;  // e.g. "duplicate-id", "label-out-of-space"
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool ok() const { return findings.empty(); }
};

// Reports every violated invariant; never throws.
ValidationReport validate_dataset(const Dataset& dataset);

// Per-class example counts aligned to label indices; sums to dataset size.
CountVector class_counts(const Dataset& dataset);

}  // namespace mpt::core
