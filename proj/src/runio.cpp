#include "mpt/runio.hpp"

#include <charconv>
#include <fstream>

#include "mpt/rng.hpp"

namespace mpt::runio {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::uint64_t digest_instance(std::uint64_t h, const core::Instance& inst) {
    h = fnv1a64(inst.id, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(inst.text, h);
    for (const auto& [key, value] : inst.aux) {
        h = fnv1a64("\x1f", h);
        h = fnv1a64(key, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(value, h);
    }
    return fnv1a64("\x1e", h);
}

std::string safe_name(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    }
    return out.empty() ? "_" : out;
}

}  // namespace

std::uint64_t digest_dataset(const core::Dataset& dataset) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const core::Label& l : dataset.space.labels()) h = fnv1a64(l.name, h);
    for (const core::LabeledExample& ex : dataset.examples) {
        h = digest_instance(h, ex.instance);
        h = fnv1a64(ex.label.name, h);
    }
    return h;
}

std::uint64_t digest_pool(const core::UnlabeledPool& pool) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const core::Instance& inst : pool.instances) h = digest_instance(h, inst);
    return h;
}

std::string hex64(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

json report_to_json(const evaluation::EvalReport& report, const core::LabelSpace& space) {
    json j;
    j["accuracy"] = report.accuracy;
    j["macro_f1"] = report.macro_f1;
    j["n"] = report.n;
    j["per_class"] = json::array();
    for (int y = 0; y < space.size(); ++y) {
        const evaluation::ClassMetrics& m = report.per_class[static_cast<std::size_t>(y)];
        j["per_class"].push_back({{"label", space.at(y).name},
                                  {"precision", m.precision},
                                  {"recall", m.recall},
                                  {"f1", m.f1},
                                  {"support", m.support}});
    }
    return j;
}

std::string manifest_hash(const json& deterministic) {
    return hex64(fnv1a64(deterministic.dump()));
}

// ---------------------------------------------------------------------------
// RunWriter

RunWriter::RunWriter(fs::path dir) : dir_(std::move(dir)) {
    if (fs::exists(dir_ / "manifest.json")) {
        throw ConfigError("run directory " + dir_.string() +
                          " already holds a manifest; runs are append-only, pick a new directory");
    }
    fs::create_directories(dir_ / "snapshots");
    fs::create_directories(dir_ / "models");
    det_["warnings"] = json::array();
    det_["generations"] = json::array();
}

void RunWriter::record_config(const json& resolved_config) {
    det_["config"] = resolved_config;
    config_hash_ = hex64(fnv1a64(resolved_config.dump()));
}

void RunWriter::record_input_digests(std::uint64_t train, std::uint64_t pool,
                                     std::uint64_t test) {
    det_["dataset_digests"] = {
        {"train", hex64(train)}, {"pool", hex64(pool)}, {"test", hex64(test)}};
}

void RunWriter::record_metrics(const evaluation::EvalReport& report,
                               const core::LabelSpace& space) {
    det_["metrics"] = report_to_json(report, space);
}

void RunWriter::record_extra(const std::string& key, const json& value) { det_[key] = value; }

void RunWriter::on_warning(const std::string& warning) { det_["warnings"].push_back(warning); }

void RunWriter::on_snapshot(int generation, const std::string& template_id,
                            const std::vector<pseudolabel::ScoredPseudoExample>& selected) {
    const fs::path path = dir_ / "snapshots" /
                          ("gen" + std::to_string(generation) + "_" + safe_name(template_id) +
                           ".jsonl");
    std::string content;
    for (const pseudolabel::ScoredPseudoExample& s : selected) {
        json rec;
        rec["id"] = s.instance.id;
        rec["argmax"] = s.argmax_label.name;
        rec["score"] = s.score;
        rec["override"] = s.override_label ? json(s.override_label->name) : json(nullptr);
        rec["duplicate"] = s.duplicate;
        json dist = json::array();
        for (int y = 0; y < s.distribution.size(); ++y) dist.push_back(s.distribution[y]);
        rec["distribution"] = std::move(dist);
        content += rec.dump() + "\n";
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << content;

    det_["snapshot_digests"][path.filename().string()] = hex64(fnv1a64(content));
}

void RunWriter::on_generation(int generation,
                              const std::vector<backend::TunedPromptModel>& models,
                              const std::vector<scheduler::ModelProvenance>& provenance) {
    json gen = json::array();
    for (const scheduler::ModelProvenance& p : provenance) {
        json counts = json::array();
        for (int y = 0; y < p.training_class_counts.size(); ++y) {
            counts.push_back(p.training_class_counts[y]);
        }
        gen.push_back({{"template_id", p.template_id},
                       {"generation", p.generation},
                       {"weight", p.weight},
                       {"labelers", p.labeler_template_ids},
                       {"training_set_size", p.training_set_size},
                       {"training_class_counts", std::move(counts)},
                       {"state_hash", hex64(p.state_hash)},
                       {"checkpoint", "models/gen" + std::to_string(p.generation) + "/" +
                                          safe_name(p.template_id)}});
    }
    det_["generations"].push_back(std::move(gen));

    for (const backend::TunedPromptModel& model : models) {
        const fs::path model_dir = dir_ / "models" / ("gen" + std::to_string(generation)) /
                                   safe_name(model.template_id());
        fs::create_directories(model_dir);
        json meta;
        meta["template_id"] = model.template_id();
        meta["generation"] = model.generation;
        meta["weight"] = model.weight;
        meta["seed"] = model.seed;
        meta["max_sequence_length"] = model.max_sequence_length;
        meta["config_hash"] = config_hash_;
        meta["state_hash"] = hex64(backend::state_hash(model));
        std::ofstream meta_out(model_dir / "meta.json");
        meta_out << meta.dump(2) << "\n";
        std::ofstream state_out(model_dir / "state.txt");
        state_out << backend::serialize_state(model);
    }
}

void RunWriter::write_classifier(const backend::StandardClassifier& classifier) {
    const fs::path clf_dir = dir_ / "classifier";
    fs::create_directories(clf_dir);
    const std::string state = backend::serialize_state(classifier);
    std::ofstream state_out(clf_dir / "state.txt");
    state_out << state;
    json meta;
    meta["kind"] = "standard-classifier";
    meta["labels"] = json::array();
    for (const core::Label& l : classifier.space.labels()) meta["labels"].push_back(l.name);
    meta["state_hash"] = hex64(fnv1a64(state));
    std::ofstream meta_out(clf_dir / "meta.json");
    meta_out << meta.dump(2) << "\n";
    det_["classifier_state_hash"] = hex64(fnv1a64(state));
    det_["classifier_checkpoint"] = "classifier";
}

void RunWriter::write_metrics_csv(const std::string& run, std::uint64_t seed,
                                  const evaluation::EvalReport& report,
                                  const core::LabelSpace& space) {
    std::ofstream out(dir_ / "metrics.csv");
    out << evaluation::metrics_csv_header(space) << "\n";
    out << evaluation::metrics_csv_row(run, "test", seed, report) << "\n";
}

RunManifest RunWriter::write_manifest(const std::string& status, double wall_clock_seconds) {
    RunManifest manifest;
    manifest.deterministic = det_;
    manifest.status = status;
    manifest.wall_clock_seconds = wall_clock_seconds;
    manifest.hash = manifest_hash(det_);

    json j;
    j["deterministic"] = det_;
    j["status"] = status;
    j["wall_clock_seconds"] = fmt(wall_clock_seconds);
    j["manifest_hash"] = manifest.hash;
    std::ofstream out(dir_ / "manifest.json");
    if (!out) throw Error("cannot write " + (dir_ / "manifest.json").string());
    out << j.dump(2) << "\n";
    return manifest;
}

RunManifest RunWriter::finalize(double wall_clock_seconds) {
    return write_manifest("complete", wall_clock_seconds);
}

void RunWriter::persist_failure(const std::string& error, double wall_clock_seconds) {
    write_manifest("failed: " + error, wall_clock_seconds);
}

RunManifest load_manifest(const fs::path& run_dir) {
    const fs::path path = fs::is_directory(run_dir) ? run_dir / "manifest.json" : run_dir;
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open manifest");
    json j;
    try {
        in >> j;
        RunManifest manifest;
        manifest.deterministic = j.at("deterministic");
        manifest.status = j.at("status").get<std::string>();
        manifest.wall_clock_seconds = std::stod(j.at("wall_clock_seconds").get<std::string>());
        manifest.hash = j.at("manifest_hash").get<std::string>();
        return manifest;
    } catch (const json::exception& e) {
        throw ParseError(path.string(), 0, e.what());
    }
}

}  // namespace mpt::runio
