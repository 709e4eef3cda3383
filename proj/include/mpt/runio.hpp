#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "mpt/evaluation.hpp"
#include "mpt/scheduler.hpp"

namespace mpt::runio {

std::uint64_t digest_dataset(const core::Dataset& dataset);
std::uint64_t digest_pool(const core::UnlabeledPool& pool);
std::string hex64(std::uint64_t value);

nlohmann::json report_to_json(const evaluation::EvalReport& report,
                              const core::LabelSpace& space);

// Everything reproducible lives under `deterministic`; the manifest hash
// covers exactly that section, so identical config and seed reproduce the
// hash byte for byte. Wall clock and status sit outside it.
struct RunManifest {
    nlohmann::json deterministic;
    double wall_clock_seconds = 0.0;
    std::string status = "complete";
    std::string hash;
};

std::string manifest_hash(const nlohmann::json& deterministic);

// Persists one run directory: manifest.json, per-(generation, template)
// pseudo-label snapshots, model and classifier checkpoints, metrics.csv.
// Run directories are append-only: an existing manifest is never overwritten.
class RunWriter final : public scheduler::RunObserver {
  public:
    explicit RunWriter(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    void record_config(const nlohmann::json& resolved_config);
    void record_input_digests(std::uint64_t train, std::uint64_t pool, std::uint64_t test);
    void record_metrics(const evaluation::EvalReport& report, const core::LabelSpace& space);
    void record_extra(const std::string& key, const nlohmann::json& value);
    void write_classifier(const backend::StandardClassifier& classifier);
    void write_metrics_csv(const std::string& run, std::uint64_t seed,
                           const evaluation::EvalReport& report, const core::LabelSpace& space);

    void on_warning(const std::string& warning) override;
    void on_snapshot(int generation, const std::string& template_id,
                     const std::vector<pseudolabel::ScoredPseudoExample>& selected) override;
    void on_generation(int generation, const std::vector<backend::TunedPromptModel>& models,
                       const std::vector<scheduler::ModelProvenance>& provenance) override;

    RunManifest finalize(double wall_clock_seconds);
    void persist_failure(const std::string& error, double wall_clock_seconds);

  private:
    std::filesystem::path dir_;
    nlohmann::json det_;
    std::string config_hash_;
    RunManifest write_manifest(const std::string& status, double wall_clock_seconds);
};

RunManifest load_manifest(const std::filesystem::path& run_dir);

}  // namespace mpt::runio
