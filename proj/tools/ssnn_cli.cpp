#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ssnn/experiment.hpp"
#include "ssnn/parallel.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    long long trials = -1;
    bool long_run = false;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "experiment config file")->required();
    cmd->add_option("-o,--out", o.out_dir, "output directory override");
    cmd->add_option("-s,--seed", o.seed, "seed override");
    cmd->add_option("-t,--trials", o.trials, "trial count override");
    cmd->add_flag("--long-run", o.long_run, "allow paper-scale runs (large grids)");
    cmd->add_option("--threads", o.threads, "worker thread override (also SSNN_THREADS)");
}

int run_with(const CommonOpts& o, std::initializer_list<ssnn::ExperimentMode> allowed) {
    if (o.threads > 0) ssnn::set_thread_count(o.threads);
    ssnn::ExperimentConfig cfg = ssnn::ExperimentConfig::load(o.config_path);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.trials > 0) cfg.trials = static_cast<std::size_t>(o.trials);
    if (o.long_run) cfg.long_run = true;

    bool ok_mode = false;
    for (ssnn::ExperimentMode m : allowed) ok_mode |= cfg.mode == m;
    if (!ok_mode) {
        std::fprintf(stderr, "error: config mode '%s' does not match this subcommand\n",
                     ssnn::mode_name(cfg.mode));
        return 2;
    }

    const ssnn::ExperimentOutcome res = ssnn::run_experiment(cfg);
    for (const std::string& f : res.csv_files) std::printf("wrote %s\n", f.c_str());
    for (const std::string& f : res.json_files) std::printf("wrote %s\n", f.c_str());
    for (const std::string& f : res.failures) std::fprintf(stderr, "trial failure: %s\n", f.c_str());
    return res.all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"systolic spiking-network fault simulator"};
    app.require_subcommand(1);

    CommonOpts train_o, sweep_o, mit_o;
    CLI::App* train_cmd = app.add_subcommand("train", "train a network and save a checkpoint");
    add_common(train_cmd, train_o);
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "fault-vulnerability sweeps (bit / count / size / threshold)");
    add_common(sweep_cmd, sweep_o);
    CLI::App* mit_cmd = app.add_subcommand("mitigate", "run FaP / FaPIT / FalVolt mitigation");
    add_common(mit_cmd, mit_o);

    std::string records_dir, report_out;
    CLI::App* report_cmd = app.add_subcommand("report", "aggregate run records into figure CSVs");
    report_cmd->add_option("-r,--records", records_dir, "directory with run_*.json records")
        ->required();
    report_cmd->add_option("-o,--out", report_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return run_with(train_o, {ssnn::ExperimentMode::Train});
        if (sweep_cmd->parsed())
            return run_with(sweep_o,
                            {ssnn::ExperimentMode::SweepBit, ssnn::ExperimentMode::SweepCount,
                             ssnn::ExperimentMode::SweepSize, ssnn::ExperimentMode::ThresholdSweep});
        if (mit_cmd->parsed()) return run_with(mit_o, {ssnn::ExperimentMode::Mitigate});
        if (report_cmd->parsed()) {
            const auto files = ssnn::emit_report(records_dir, report_out);
            for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
