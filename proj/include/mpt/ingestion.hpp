#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpt/core.hpp"

namespace mpt::ingestion {

enum class Format { SciCiteJsonl, RctLines, KeywordTable, GenericJsonl };

Format parse_format(const std::string& name);
std::string format_name(Format format);

// field_map maps roles to source fields: "text" and "label" are required
// roles ("id" optional); any other entry becomes an aux field of that name.
// label_aliases remap source label strings onto space names; unmapped labels
// also match case-insensitively.
struct AdapterConfig {
    Format format = Format::GenericJsonl;
    core::LabelSpace space;
    std::map<std::string, std::string> field_map;
    std::map<std::string, std::string> label_aliases;
};

// Conventional field maps for each format (e.g. SciCite's string/label/
// unique_id, keyword tables' keyword/title/abstract columns).
AdapterConfig default_config(Format format, const core::LabelSpace& space);

core::Dataset load_dataset(const std::string& path, const AdapterConfig& cfg);

// Same formats with labels ignored / optional.
core::UnlabeledPool load_pool(const std::string& path, const AdapterConfig& cfg);

// Canonical generic-jsonl writers; load(save(x)) round-trips exactly.
void save_dataset(const core::Dataset& dataset, const std::string& path);
void save_pool(const core::UnlabeledPool& pool, const std::string& path);

struct Summary {
    std::size_t n = 0;
    core::CountVector per_class;
    Eigen::VectorXd distribution;
    int length_p50 = 0;
    int length_p90 = 0;
    int length_max = 0;
};

Summary summarize(const core::Dataset& dataset);
std::string to_text(const Summary& summary, const core::LabelSpace& space);

}  // namespace mpt::ingestion
