#include "mpt/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <unordered_set>

#include "mpt/backend.hpp"
#include "mpt/ingestion.hpp"
#include "mpt/runio.hpp"
#include "mpt/sampling.hpp"
#include "mpt/scheduler.hpp"

namespace mpt::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int classify_exit(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const UnknownLabel*>(&e) ||
        dynamic_cast<const InsufficientClass*>(&e) || dynamic_cast<const PoolTooSmall*>(&e)) {
        return kDataError;
    }
    return kRuntimeError;
}

core::LabelSpace space_from(const DataArgs& args) {
    if (!args.templates.empty()) {
        return prompting::load_template_pack(args.templates).space;
    }
    if (!args.labels.empty()) return core::LabelSpace::of(args.labels);
    throw ConfigError("provide --templates or --labels to define the label space");
}

ingestion::AdapterConfig adapter_from(const DataArgs& args) {
    const ingestion::Format format = ingestion::parse_format(args.format);
    ingestion::AdapterConfig cfg = ingestion::default_config(format, space_from(args));
    for (const auto& [role, field] : args.field_map) cfg.field_map[role] = field;
    cfg.label_aliases = args.label_aliases;
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const ValidateArgs& args) {
    try {
        const ingestion::AdapterConfig cfg = adapter_from(args.data);
        const core::Dataset dataset = ingestion::load_dataset(args.data.path, cfg);
        const core::ValidationReport report = core::validate_dataset(dataset);
        if (args.summary) {
            std::cout << ingestion::to_text(ingestion::summarize(dataset), dataset.space);
        }
        if (report.ok()) {
            std::cout << "ok: " << dataset.size() << " examples, no findings\n";
            return kOk;
        }
        for (const core::Finding& f : report.findings) {
            std::cout << f.code << ": " << f.message << "\n";
        }
        std::cout << report.findings.size() << " finding(s)\n";
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_exit(e);
    }
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const SampleArgs& args) {
    try {
        const ingestion::AdapterConfig cfg = adapter_from(args.data);
        const core::Dataset source = ingestion::load_dataset(args.data.path, cfg);

        sampling::SamplePlan plan;
        if (args.mode == "balanced") {
            plan.mode = sampling::SampleMode::BalancedK;
        } else if (args.mode == "proportional") {
            plan.mode = sampling::SampleMode::Proportional;
        } else {
            throw ConfigError("mode must be balanced or proportional, got '" + args.mode + "'");
        }
        plan.k = args.k;
        plan.total = args.total;
        plan.seed = args.seed;

        const sampling::SampledSplit split = sampling::sample(source, plan);
        for (const std::string& w : split.warnings) std::cerr << "warning: " << w << "\n";
        sampling::save_split(sampling::to_record(plan, split), args.out);

        std::cout << "train per class:";
        const core::CountVector counts = core::class_counts(split.train);
        for (int y = 0; y < counts.size(); ++y) {
            std::cout << " " << source.space.at(y).name << "=" << counts[y];
        }
        std::cout << "\ntrain " << split.train.size() << ", validation "
                  << split.validation.size() << " -> " << args.out << "\n";

        if (args.pool_count > 0) {
            if (args.pool_out.empty()) {
                throw ConfigError("--pool-out is required when --pool is given");
            }
            std::unordered_set<std::string> exclude;
            for (const auto& ex : split.train.examples) exclude.insert(ex.instance.id);
            for (const auto& ex : split.validation.examples) exclude.insert(ex.instance.id);
            std::vector<core::Instance> instances;
            instances.reserve(source.size());
            for (const auto& ex : source.examples) instances.push_back(ex.instance);
            const core::UnlabeledPool pool =
                sampling::sample_pool(instances, args.pool_count, exclude, args.seed);
            ingestion::save_pool(pool, args.pool_out);
            std::cout << "pool " << pool.size() << " -> " << args.pool_out << "\n";
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_exit(e);
    }
}

// ---------------------------------------------------------------------------
// run

namespace {

struct ResolvedRun {
    std::string name;
    std::string method = "mpt";
    int k_shot = 0;
    prompting::TemplatePack pack;
    core::Dataset source;
    json split_spec;
    json pool_spec;
    core::Dataset test;
    scheduler::MptConfig mpt;
    std::vector<std::uint64_t> seeds;
    json resolved_config;  // embedded in manifests
};

ingestion::AdapterConfig adapter_from_json(const json& spec, const core::LabelSpace& space) {
    ingestion::AdapterConfig cfg = ingestion::default_config(
        ingestion::parse_format(spec.value("format", "generic-jsonl")), space);
    if (spec.contains("field_map")) {
        for (const auto& [role, field] : spec.at("field_map").items()) {
            cfg.field_map[role] = field.get<std::string>();
        }
    }
    if (spec.contains("label_aliases")) {
        for (const auto& [from, to] : spec.at("label_aliases").items()) {
            cfg.label_aliases[from] = to.get<std::string>();
        }
    }
    return cfg;
}

// Parses and validates the whole config up front; every problem is listed
// before any work starts.
ResolvedRun resolve_config(const RunArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config " + args.config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    std::vector<std::string> problems;
    ResolvedRun run;

    run.name = j.value("name", fs::path(args.config_path).stem().string());
    run.method = j.value("method", "mpt");
    if (run.method != "mpt" && run.method != "prompt-baseline") {
        problems.push_back("method must be mpt or prompt-baseline, got '" + run.method + "'");
    }
    run.k_shot = j.value("k_shot", 0);

    const std::string backend_name = j.value("backend", "mock");
    if (backend_name != "mock") {
        problems.push_back("backend '" + backend_name +
                           "' is not built in; the real-PLM adapter contract is documented in "
                           "backend.hpp");
    }

    if (!j.contains("templates")) {
        problems.push_back("missing 'templates' (path to a template pack)");
    } else {
        try {
            run.pack = prompting::load_template_pack(j.at("templates").get<std::string>());
            if (j.contains("template_ids")) {
                std::vector<prompting::PromptTemplate> chosen;
                for (const auto& id : j.at("template_ids")) {
                    chosen.push_back(
                        prompting::find_template(run.pack, id.get<std::string>()));
                }
                run.pack.templates = std::move(chosen);
            }
            if (!args.template_filter.empty() && args.template_filter != "all") {
                if (args.template_filter != "hard-only" && args.template_filter != "soft-only") {
                    problems.push_back("--templates must be all, hard-only, or soft-only");
                } else {
                    const auto keep = args.template_filter == "hard-only"
                                          ? prompting::TemplateKind::Hard
                                          : prompting::TemplateKind::Soft;
                    std::vector<prompting::PromptTemplate> chosen;
                    for (auto& t : run.pack.templates) {
                        if (t.kind == keep) chosen.push_back(std::move(t));
                    }
                    run.pack.templates = std::move(chosen);
                }
            }
        } catch (const std::exception& e) {
            problems.push_back(std::string("templates: ") + e.what());
        }
    }

    auto check_source_spec = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).contains("path")) {
            problems.push_back(std::string("missing ") + key + ".path");
            return;
        }
        if (!fs::exists(j.at(key).at("path").get<std::string>())) {
            problems.push_back(std::string(key) + ".path does not exist: " +
                               j.at(key).at("path").get<std::string>());
        }
        try {
            ingestion::parse_format(j.at(key).value("format", "generic-jsonl"));
        } catch (const ConfigError& e) {
            problems.push_back(std::string(key) + ": " + e.what());
        }
    };
    check_source_spec("data");

    run.split_spec = j.value("split", json{{"mode", "balanced"}, {"k", 16}});
    if (run.split_spec.contains("file") &&
        !fs::exists(run.split_spec.at("file").get<std::string>())) {
        problems.push_back("split.file does not exist: " +
                           run.split_spec.at("file").get<std::string>());
    }
    if (run.split_spec.contains("mode")) {
        const std::string mode = run.split_spec.at("mode").get<std::string>();
        if (mode != "balanced" && mode != "proportional") {
            problems.push_back("split.mode must be balanced or proportional");
        }
    }

    run.pool_spec = j.value("pool", json{{"from_remainder", true}, {"count", 600}});
    if (!run.pool_spec.contains("path") && !run.pool_spec.value("from_remainder", false)) {
        problems.push_back("pool needs either a path or from_remainder=true");
    }
    if (run.pool_spec.contains("path") &&
        !fs::exists(run.pool_spec.at("path").get<std::string>())) {
        problems.push_back("pool.path does not exist: " +
                           run.pool_spec.at("path").get<std::string>());
    }

    check_source_spec("test");

    const json mpt_spec = j.value("mpt", json::object());
    run.mpt.subset_fraction = mpt_spec.value("lambda", 0.25);
    run.mpt.growth_factor = mpt_spec.value("d", 5);
    run.mpt.generations =
        args.generations >= 0 ? args.generations : mpt_spec.value("generations", 3);
    run.mpt.unlabeled_count = run.pool_spec.value("count", 600);
    run.mpt.distill_temperature = mpt_spec.value("temperature", 1.0);
    const std::string omega = mpt_spec.value("omega_mode", "uniform");
    if (omega == "uniform") {
        run.mpt.omega_mode = scheduler::OmegaMode::Uniform;
    } else if (omega == "seed-accuracy") {
        run.mpt.omega_mode = scheduler::OmegaMode::SeedAccuracy;
    } else {
        problems.push_back("mpt.omega_mode must be uniform or seed-accuracy");
    }

    const json training = j.value("training", json::object());
    run.mpt.training.learning_rate = training.value("learning_rate", 1e-5);
    run.mpt.training.batch_size = training.value("batch_size", 16);
    run.mpt.training.epochs = training.value("epochs", 6);
    // Keyword-table inputs carry title + abstract context and default longer.
    const bool keyword_data =
        j.contains("data") && j.at("data").value("format", "") == std::string("keyword-table");
    run.mpt.training.max_sequence_length =
        training.value("max_sequence_length", keyword_data ? 256 : 128);

    run.mpt.templates = run.pack.templates;
    run.mpt.verbalizer = run.pack.verbalizer;

    if (!args.seeds.empty()) {
        run.seeds = args.seeds;
    } else if (j.contains("seeds")) {
        run.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } else {
        run.seeds = {j.value("seed", std::uint64_t{1})};
    }
    if (run.seeds.empty()) problems.push_back("no seeds given");

    if (run.pack.space.size() >= 2) {
        try {
            scheduler::MptConfig probe_cfg = run.mpt;
            probe_cfg.seed = run.seeds.empty() ? 1 : run.seeds.front();
            probe_cfg.training.seed = probe_cfg.seed;
            scheduler::require_valid(probe_cfg);
        } catch (const ConfigError& e) {
            problems.push_back(e.what());
        }
    }

    if (!problems.empty()) {
        std::string msg = "config rejected:";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }

    // Config is sound; load the referenced datasets. Failures here are data
    // errors, not config errors.
    auto load_checked = [&](const json& spec) {
        const std::string path = spec.at("path").get<std::string>();
        core::Dataset dataset =
            ingestion::load_dataset(path, adapter_from_json(spec, run.pack.space));
        const auto report = core::validate_dataset(dataset);
        if (!report.ok()) {
            throw ParseError(path, 0,
                             std::to_string(report.findings.size()) +
                                 " invariant violation(s); run the validate command first");
        }
        return dataset;
    };
    run.source = load_checked(j.at("data"));
    run.test = load_checked(j.at("test"));

    run.resolved_config = j;
    run.resolved_config["name"] = run.name;
    run.resolved_config["method"] = run.method;
    json used_templates = json::array();
    for (const auto& t : run.pack.templates) used_templates.push_back(t.id);
    run.resolved_config["template_ids"] = std::move(used_templates);
    run.resolved_config["mpt"] = {{"lambda", run.mpt.subset_fraction},
                                  {"d", run.mpt.growth_factor},
                                  {"generations", run.mpt.generations},
                                  {"omega_mode", omega},
                                  {"temperature", run.mpt.distill_temperature}};
    run.resolved_config["training"] = {
        {"learning_rate", run.mpt.training.learning_rate},
        {"batch_size", run.mpt.training.batch_size},
        {"epochs", run.mpt.training.epochs},
        {"max_sequence_length", run.mpt.training.max_sequence_length}};
    return run;
}

struct SeedDatasets {
    core::Dataset train;
    core::UnlabeledPool pool;
};

SeedDatasets materialize(const ResolvedRun& run, std::uint64_t seed, bool need_pool = true) {
    SeedDatasets out;

    if (run.split_spec.contains("file")) {
        const auto record = sampling::load_split(run.split_spec.at("file").get<std::string>());
        out.train = sampling::apply_split(run.source, record).train;
    } else {
        sampling::SamplePlan plan;
        plan.mode = run.split_spec.value("mode", "balanced") == std::string("proportional")
                        ? sampling::SampleMode::Proportional
                        : sampling::SampleMode::BalancedK;
        plan.k = run.split_spec.value("k", 16);
        plan.total = run.split_spec.value("total", 0);
        plan.seed = run.split_spec.value("seed", seed);
        out.train = sampling::sample(run.source, plan).train;
    }

    if (!need_pool) return out;

    if (run.pool_spec.contains("path")) {
        ingestion::AdapterConfig cfg = ingestion::default_config(
            ingestion::parse_format(run.pool_spec.value("format", "generic-jsonl")),
            run.source.space);
        out.pool = ingestion::load_pool(run.pool_spec.at("path").get<std::string>(), cfg);
    } else {
        std::unordered_set<std::string> exclude;
        for (const auto& ex : out.train.examples) exclude.insert(ex.instance.id);
        std::vector<core::Instance> instances;
        instances.reserve(run.source.size());
        for (const auto& ex : run.source.examples) instances.push_back(ex.instance);
        out.pool = sampling::sample_pool(instances, run.pool_spec.value("count", 600), exclude,
                                         run.pool_spec.value("seed", seed));
    }
    return out;
}

int run_mpt_method(const ResolvedRun& run, const fs::path& out_root) {
    std::vector<std::string> aggregate_rows;
    for (std::uint64_t seed : run.seeds) {
        const fs::path dir = out_root / (run.name + "-seed" + std::to_string(seed));
        runio::RunWriter writer(dir);
        const auto start = std::chrono::steady_clock::now();
        try {
            const SeedDatasets data = materialize(run, seed);

            scheduler::MptConfig cfg = run.mpt;
            cfg.seed = seed;
            cfg.training.seed = seed;
            cfg.unlabeled_count = static_cast<int>(data.pool.size());

            json resolved = run.resolved_config;
            resolved["seed"] = seed;
            writer.record_config(resolved);
            writer.record_input_digests(runio::digest_dataset(data.train),
                                        runio::digest_pool(data.pool),
                                        runio::digest_dataset(run.test));

            const scheduler::RunResult result =
                scheduler::run(cfg, data.train, data.pool, run.test, &writer);

            writer.write_classifier(result.classifier);
            writer.record_metrics(result.test_report, run.test.space);
            writer.write_metrics_csv(run.name, seed, result.test_report, run.test.space);
            const runio::RunManifest manifest = writer.finalize(seconds_since(start));

            aggregate_rows.push_back(evaluation::metrics_csv_row(
                dir.filename().string(), "test", seed, result.test_report));
            std::cout << dir.string() << ": accuracy "
                      << result.test_report.accuracy << ", macro-F1 "
                      << result.test_report.macro_f1 << ", manifest " << manifest.hash << "\n";
        } catch (const std::exception& e) {
            writer.persist_failure(e.what(), seconds_since(start));
            throw;
        }
    }

    std::ofstream csv(out_root / (run.name + "-metrics.csv"));
    csv << evaluation::metrics_csv_header(run.test.space) << "\n";
    for (const std::string& row : aggregate_rows) csv << row << "\n";
    std::cout << "metrics: " << (out_root / (run.name + "-metrics.csv")).string() << "\n";
    return kOk;
}

int run_baseline_method(const ResolvedRun& run, const fs::path& out_root) {
    std::vector<std::string> aggregate_rows;
    for (std::uint64_t seed : run.seeds) {
        const fs::path dir = out_root / (run.name + "-seed" + std::to_string(seed));
        runio::RunWriter writer(dir);
        const auto start = std::chrono::steady_clock::now();
        try {
            const SeedDatasets data = materialize(run, seed, /*need_pool=*/false);
            scheduler::MptConfig cfg = run.mpt;
            cfg.seed = seed;
            cfg.training.seed = seed;

            json resolved = run.resolved_config;
            resolved["seed"] = seed;
            writer.record_config(resolved);
            writer.record_input_digests(runio::digest_dataset(data.train), 0,
                                        runio::digest_dataset(run.test));

            const auto baselines = scheduler::run_prompt_baseline(cfg, data.train, run.test);
            json per_template = json::array();
            double best = 0.0;
            for (const auto& b : baselines) {
                per_template.push_back({{"template_id", b.template_id},
                                        {"metrics",
                                         runio::report_to_json(b.test_report, run.test.space)}});
                best = std::max(best, b.test_report.macro_f1);
                aggregate_rows.push_back(evaluation::metrics_csv_row(
                    dir.filename().string() + ":" + b.template_id, "test", seed, b.test_report));
            }
            writer.record_extra("baseline_reports", per_template);
            const runio::RunManifest manifest = writer.finalize(seconds_since(start));
            std::cout << dir.string() << ": best single-template macro-F1 " << best
                      << ", manifest " << manifest.hash << "\n";
        } catch (const std::exception& e) {
            writer.persist_failure(e.what(), seconds_since(start));
            throw;
        }
    }
    std::ofstream csv(out_root / (run.name + "-metrics.csv"));
    csv << evaluation::metrics_csv_header(run.test.space) << "\n";
    for (const std::string& row : aggregate_rows) csv << row << "\n";
    return kOk;
}

}  // namespace

int cmd_run(const RunArgs& args) {
    try {
        const ResolvedRun run = resolve_config(args);
        fs::path out_root = args.out_dir;
        if (out_root.empty()) {
            const char* env = std::getenv("MPT_RUN_ROOT");
            out_root = env && *env ? fs::path(env) : fs::path("runs");
        }
        fs::create_directories(out_root);
        return run.method == "mpt" ? run_mpt_method(run, out_root)
                                   : run_baseline_method(run, out_root);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_exit(e);
    }
}

// ---------------------------------------------------------------------------
// report

namespace {

struct ReportRow {
    std::string run;
    std::string method;
    int k_shot = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    bool best = false;
};

}  // namespace

int cmd_report(const ReportArgs& args) {
    if (args.run_dirs.empty()) {
        std::cerr << "error: no run directories given\n";
        return kConfigError;
    }
    std::vector<ReportRow> rows;
    int bad = 0;
    for (const std::string& dir : args.run_dirs) {
        try {
            const runio::RunManifest manifest = runio::load_manifest(dir);
            const json& det = manifest.deterministic;
            const json cfg = det.value("config", json::object());
            ReportRow base;
            base.run = fs::path(dir).filename().string();
            base.method = cfg.value("method", "?");
            base.k_shot = cfg.value("k_shot", 0);
            base.seed = cfg.value("seed", std::uint64_t{0});
            if (det.contains("metrics")) {
                ReportRow row = base;
                row.accuracy = det.at("metrics").value("accuracy", 0.0);
                row.macro_f1 = det.at("metrics").value("macro_f1", 0.0);
                rows.push_back(row);
            } else if (det.contains("baseline_reports")) {
                for (const json& b : det.at("baseline_reports")) {
                    ReportRow row = base;
                    row.run += ":" + b.value("template_id", "?");
                    row.accuracy = b.at("metrics").value("accuracy", 0.0);
                    row.macro_f1 = b.at("metrics").value("macro_f1", 0.0);
                    rows.push_back(row);
                }
            } else {
                std::cerr << dir << ": manifest has no metrics (status: " << manifest.status
                          << ")\n";
                ++bad;
            }
        } catch (const std::exception& e) {
            std::cerr << dir << ": " << e.what() << "\n";
            ++bad;
        }
    }
    if (rows.empty()) return kDataError;

    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.k_shot != b.k_shot) return a.k_shot < b.k_shot;
        if (a.method != b.method) return a.method < b.method;
        return a.run < b.run;
    });
    // Flag the best macro-F1 within each (method, K) group; a group of one
    // gets no flag.
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        std::size_t best = i;
        while (j < rows.size() && rows[j].method == rows[i].method &&
               rows[j].k_shot == rows[i].k_shot) {
            if (rows[j].macro_f1 > rows[best].macro_f1) best = j;
            ++j;
        }
        if (j - i > 1) rows[best].best = true;
        i = j;
    }

    std::cout << "run,method,K,seed,accuracy,macro_f1,best\n";
    for (const ReportRow& r : rows) {
        std::cout << r.run << "," << r.method << "," << r.k_shot << "," << r.seed << ","
                  << r.accuracy << "," << r.macro_f1 << "," << (r.best ? "*" : "") << "\n";
    }
    if (!args.csv_out.empty()) {
        std::ofstream csv(args.csv_out);
        csv << "run,method,K,seed,accuracy,macro_f1,best\n";
        for (const ReportRow& r : rows) {
            csv << r.run << "," << r.method << "," << r.k_shot << "," << r.seed << ","
                << r.accuracy << "," << r.macro_f1 << "," << (r.best ? "*" : "") << "\n";
        }
    }
    return kOk;
}

}  // namespace mpt::cli
