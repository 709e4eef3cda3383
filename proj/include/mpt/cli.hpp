#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mpt::cli {

// Exit statuses shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kRuntimeError = 4;

struct DataArgs {
    std::string path;
    std::string format = "generic-jsonl";
    std::string templates;                          // template pack supplying the label space
    std::vector<std::string> labels;                // or explicit label names
    std::map<std::string, std::string> field_map;   // role=field overrides
    std::map<std::string, std::string> label_aliases;
};

struct ValidateArgs {
    DataArgs data;
    bool summary = true;
};

struct SampleArgs {
    DataArgs data;
    std::string mode = "balanced";  // balanced | proportional
    int k = 16;
    int total = 0;  // proportional mode; 0 means k * |labels|
    std::uint64_t seed = 1;
    std::string out = "split.json";
    int pool_count = 0;          // also draw an unlabeled pool from the remainder
    std::string pool_out;        // where to write it (generic-jsonl)
};

// Flags override the corresponding config-file values; the resolved config
// embedded in each manifest reflects the overrides.
struct RunArgs {
    std::string config_path;
    std::string out_dir;                 // default: $MPT_RUN_ROOT or ./runs
    std::vector<std::uint64_t> seeds;    // overrides the config's seeds
    int generations = -1;                // >= 0 overrides mpt.generations
    std::string template_filter;         // "", "all", "hard-only", "soft-only"
};

struct ReportArgs {
    std::vector<std::string> run_dirs;
    std::string csv_out;
};

int cmd_validate(const ValidateArgs& args);
int cmd_sample(const SampleArgs& args);
int cmd_run(const RunArgs& args);
int cmd_report(const ReportArgs& args);

}  // namespace mpt::cli
