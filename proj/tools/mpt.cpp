#include <CLI11.hpp>
#include <string>
#include <vector>

#include "mpt/cli.hpp"

namespace {

void add_data_options(CLI::App* cmd, mpt::cli::DataArgs& data) {
    cmd->add_option("--data", data.path, "input data file")->required();
    cmd->add_option("--format", data.format,
                    "scicite-jsonl | rct-lines | keyword-table | generic-jsonl");
    cmd->add_option("--templates", data.templates, "template pack defining the label space");
    cmd->add_option("--labels", data.labels, "label names in index order")->delimiter(',');
    cmd->add_option("--field", data.field_map, "role=source-field overrides")->delimiter(',');
    cmd->add_option("--alias", data.label_aliases, "source-label=space-label aliases")
        ->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mix-prompt ensemble semi-supervised text classification"};
    app.require_subcommand(1);

    mpt::cli::ValidateArgs validate_args;
    CLI::App* validate = app.add_subcommand("validate", "load a dataset and report violations");
    add_data_options(validate, validate_args.data);

    mpt::cli::SampleArgs sample_args;
    CLI::App* sample = app.add_subcommand("sample", "draw a low-resource split");
    add_data_options(sample, sample_args.data);
    sample->add_option("--mode", sample_args.mode, "balanced | proportional");
    sample->add_option("--k", sample_args.k, "per-class count (balanced)");
    sample->add_option("--total", sample_args.total, "overall count (proportional)");
    sample->add_option("--seed", sample_args.seed, "sampling seed");
    sample->add_option("--out", sample_args.out, "split record path");
    sample->add_option("--pool", sample_args.pool_count, "also draw an unlabeled pool this big");
    sample->add_option("--pool-out", sample_args.pool_out, "unlabeled pool output path");

    mpt::cli::RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "execute a full pipeline run");
    run->add_option("--config", run_args.config_path, "run config file")->required();
    run->add_option("--out", run_args.out_dir, "run root directory (default $MPT_RUN_ROOT)");
    run->add_option("--seed", run_args.seeds, "seed overrides, repeatable");
    run->add_option("--generations", run_args.generations, "override the generation count");
    run->add_option("--templates", run_args.template_filter,
                    "restrict by kind: all | hard-only | soft-only");

    mpt::cli::ReportArgs report_args;
    CLI::App* report = app.add_subcommand("report", "tabulate metrics across run directories");
    report->add_option("runs", report_args.run_dirs, "run directories")->required();
    report->add_option("--csv", report_args.csv_out, "also write the table as CSV");

    CLI11_PARSE(app, argc, argv);

    if (*validate) return mpt::cli::cmd_validate(validate_args);
    if (*sample) return mpt::cli::cmd_sample(sample_args);
    if (*run) return mpt::cli::cmd_run(run_args);
    if (*report) return mpt::cli::cmd_report(report_args);
    return mpt::cli::kConfigError;
}
